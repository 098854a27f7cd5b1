#include "holder/spec_io.hpp"

#include <fstream>
#include <sstream>

#include "holder/rational.hpp"

namespace holder {

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::ParseError, what); }

const Json& field(const Json& doc, const char* key) {
  if (!doc.is_object()) bad("expected a JSON object");
  auto it = doc.find(key);
  if (it == doc.end()) bad(std::string("missing field \"") + key + "\"");
  return *it;
}

std::string type_of(const Json& doc) {
  const Json& t = field(doc, "type");
  if (!t.is_string()) bad("\"type\" must be a string");
  return t.get<std::string>();
}

std::int64_t json_int(const Json& v, const char* what) {
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) {
    double d = v.get<double>();
    if (d == static_cast<double>(static_cast<std::int64_t>(d))) return static_cast<std::int64_t>(d);
  }
  bad(std::string(what) + " must be an integer");
}

Json point_json(const Point& p) {
  Json a = Json::array();
  for (Real v : p) a.push_back(static_cast<double>(v));
  return a;
}

}  // namespace

std::size_t FunctionSpec::dimension() const {
  if (const auto* s = std::get_if<SeparableFunction>(&function)) return s->dimension();
  return 1;
}

std::int64_t FunctionSpec::natural_base() const {
  if (const auto* s = std::get_if<SeparableFunction>(&function)) return s->max_base();
  return std::get<SeriesParams>(function).base();
}

Real FunctionSpec::evaluate(const Point& x, Real tol) const {
  if (const auto* s = std::get_if<SeparableFunction>(&function)) return eval_separable(*s, x, tol);
  if (x.size() != 1) throw Error(ErrorCode::DimensionMismatch, "series takes one coordinate");
  return eval_phi_ext(std::get<SeriesParams>(function), x[0], tol);
}

Json parse_json_text(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    bad(std::string("invalid JSON: ") + e.what());
  }
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) bad("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_json_text(ss.str());
}

double json_real(const Json& v, const char* what) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) return parse_rational(v.get<std::string>()).get_d();
  bad(std::string(what) + " must be a number or a rational string");
}

Point json_point(const Json& v, const char* what) {
  if (!v.is_array() || v.empty()) bad(std::string(what) + " must be a non-empty array");
  Point p;
  for (const auto& x : v) p.push_back(json_real(x, what));
  return p;
}

FunctionSpec function_from_json(const Json& doc) {
  const std::string type = type_of(doc);
  if (type == "sawtooth") {
    return {validate_params(json_real(field(doc, "alpha"), "alpha"), json_int(field(doc, "base"), "base"))};
  }
  if (type != "separable") bad("unknown function type \"" + type + "\"");
  const Json& comps = field(doc, "components");
  if (!comps.is_array() || comps.empty()) bad("\"components\" must be a non-empty array");
  std::vector<double> alphas;
  std::vector<std::optional<std::int64_t>> bases;
  for (const auto& c : comps) {
    alphas.push_back(json_real(field(c, "alpha"), "alpha"));
    auto it = c.find("base");
    if (it == c.end() || (it->is_string() && it->get<std::string>() == "auto"))
      bases.emplace_back();
    else
      bases.emplace_back(json_int(*it, "base"));
  }
  double gamma = doc.contains("gamma") ? json_real(doc["gamma"], "gamma") : 1.0;
  return {build_separable(alphas, gamma, bases)};
}

Json function_to_json(const FunctionSpec& f) {
  if (const auto* s = std::get_if<SeparableFunction>(&f.function)) {
    Json comps = Json::array();
    for (const auto& c : s->components()) comps.push_back({{"alpha", c.alpha()}, {"base", c.base()}});
    return {{"type", "separable"}, {"gamma", static_cast<double>(s->gamma_ref())}, {"components", comps}};
  }
  const auto& p = std::get<SeriesParams>(f.function);
  return {{"type", "sawtooth"}, {"alpha", p.alpha()}, {"base", p.base()}};
}

TestCurve curve_from_json(const Json& doc) {
  const std::string type = type_of(doc);
  if (type == "line")
    return make_line(json_point(field(doc, "origin"), "origin"), json_point(field(doc, "direction"), "direction"),
                     json_real(field(doc, "half_len"), "half_len"));
  if (type == "arc")
    return make_arc(json_point(field(doc, "center"), "center"), json_real(field(doc, "radius"), "radius"),
                    doc.contains("phase") ? json_real(doc["phase"], "phase") : 0.0,
                    json_real(field(doc, "half_len"), "half_len"));
  if (type == "raw_table") {
    const Json& pts = field(doc, "points");
    if (!pts.is_array()) bad("\"points\" must be an array");
    std::vector<Point> points;
    for (const auto& p : pts) points.push_back(json_point(p, "point"));
    std::size_t grid_n = doc.contains("grid_n") ? static_cast<std::size_t>(json_int(doc["grid_n"], "grid_n")) : 257;
    return make_raw_table(points, grid_n);
  }
  bad("unknown curve type \"" + type + "\"");
}

Json curve_to_json(const TestCurve& c) {
  return std::visit(
      [](const auto& s) -> Json {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, LineShape>) {
          return {{"type", "line"},
                  {"origin", point_json(s.origin)},
                  {"direction", point_json(s.direction)},
                  {"half_len", static_cast<double>(s.half_len)}};
        } else if constexpr (std::is_same_v<S, ArcShape>) {
          return {{"type", "arc"},
                  {"center", point_json(s.center)},
                  {"radius", static_cast<double>(s.radius)},
                  {"phase", static_cast<double>(s.phase)},
                  {"half_len", static_cast<double>(s.half_len)}};
        } else if constexpr (std::is_same_v<S, TableShape>) {
          Json pts = Json::array();
          for (const auto& p : s.points) pts.push_back(point_json(p));
          return {{"type", "raw_table"}, {"points", pts}};
        } else {
          throw Error(ErrorCode::InvalidArgument, "custom curves have no document form");
        }
      },
      c.shape());
}

std::vector<TestCurve> curves_from_json(const Json& doc) {
  std::vector<TestCurve> out;
  if (doc.is_array()) {
    for (const auto& d : doc) out.push_back(curve_from_json(d));
  } else if (doc.is_object() && doc.contains("curves")) {
    return curves_from_json(doc["curves"]);
  } else {
    out.push_back(curve_from_json(doc));
  }
  if (out.empty()) bad("no curves in document");
  return out;
}

FamilySpec family_from_json(const Json& doc) {
  const Json& dom = field(doc, "domain");
  auto box = make_box(json_point(field(dom, "lo"), "lo"), json_point(field(dom, "hi"), "hi"));
  double gamma = doc.contains("gamma") ? json_real(doc["gamma"], "gamma") : 1.0;
  return make_family_spec(static_cast<int>(json_int(field(doc, "n"), "n")), gamma, box);
}

Json family_to_json(const FamilySpec& f) {
  return {{"n", f.n},
          {"gamma", static_cast<double>(f.gamma)},
          {"domain", {{"lo", point_json(f.domain.lo)}, {"hi", point_json(f.domain.hi)}}}};
}

QuadraticBaseline baseline_from_json(const Json& doc) {
  if (type_of(doc) != "quadratic") bad("baseline type must be \"quadratic\"");
  const Json& cs = field(doc, "coefficients");
  if (!cs.is_array() || cs.empty()) bad("\"coefficients\" must be a non-empty array");
  std::vector<std::array<Real, 3>> coeffs;
  for (const auto& row : cs) {
    Point p = json_point(row, "coefficient row");
    if (p.size() != 3) bad("each coefficient row must be [c0, c1, c2]");
    coeffs.push_back({p[0], p[1], p[2]});
  }
  return QuadraticBaseline(coeffs);
}

Json baseline_to_json(const QuadraticBaseline& q) {
  Json rows = Json::array();
  for (const auto& c : q.coefficients())
    rows.push_back({static_cast<double>(c[0]), static_cast<double>(c[1]), static_cast<double>(c[2])});
  return {{"type", "quadratic"}, {"coefficients", rows}};
}

ExperimentSpec experiment_from_json(const Json& doc) {
  FunctionSpec fs = function_from_json(field(doc, "function"));
  const auto* sep = std::get_if<SeparableFunction>(&fs.function);
  if (!sep) bad("experiment function must be separable");
  ExperimentSpec e{baseline_from_json(field(doc, "baseline")), *sep, json_real(field(doc, "delta"), "delta"),
                   family_from_json(field(doc, "family")),
                   static_cast<std::size_t>(json_int(field(doc, "count"), "count")), std::nullopt, {}};
  if (doc.contains("seed") && !doc["seed"].is_null()) {
    if (!doc["seed"].is_number_unsigned() && !doc["seed"].is_number_integer()) bad("seed must be an integer");
    e.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("m_max")) e.options.m_max = static_cast<int>(json_int(doc["m_max"], "m_max"));
  if (doc.contains("eval_tol")) e.options.eval_tol = json_real(doc["eval_tol"], "eval_tol");
  if (doc.contains("scale_base")) e.options.scale_base = json_int(doc["scale_base"], "scale_base");
  return e;
}

}  // namespace holder
