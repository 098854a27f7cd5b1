#include "cli.hpp"

#include <openssl/evp.h>
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "holder/category.hpp"
#include "holder/exact.hpp"
#include "holder/probe.hpp"
#include "holder/rational.hpp"
#include "holder/spec_io.hpp"

namespace holder::cli {

namespace {

constexpr std::uint64_t kDefaultBudget = 4'000'000;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A mathematical property failed; maps to exit code 2.
struct PropertyViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Every flag any subcommand understands; each subcommand registers its own subset.
struct Flags {
  std::string alpha, beta = "1", spec, curve, points, increments, out;
  std::string delta;
  std::optional<std::uint64_t> seed, budget;
  std::optional<double> tol, x0;
  double s0 = 0;
  std::optional<std::int64_t> base, n, count, m_min, m_max_opt, scale_base, j_lo, j_hi;
  std::optional<unsigned> m;
  std::size_t samples = 256;
  std::optional<double> drop_floor;
  int drop_coarsest = 2;
  unsigned threads = 0;
  bool exact = false;
};

struct Run {
  std::string subcommand;
  std::vector<std::string> argv;
  Json params = Json::object();
  std::optional<std::uint64_t> seed;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
};

std::string fmt_real(Real v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.21Lg", v);
  return buf;
}

Real parse_real(const std::string& text, const char* what) {
  if (text.empty()) throw UsageError(std::string(what) + " is empty");
  char* end = nullptr;
  errno = 0;
  long double v = std::strtold(text.c_str(), &end);
  if (end && *end == '\0' && errno == 0 && std::isfinite(v)) return v;
  try {
    return static_cast<Real>(parse_rational(text).get_d());
  } catch (const Error&) {
    throw UsageError(std::string("cannot parse ") + what + " \"" + text + "\"");
  }
}

void write_atomic(const std::string& path, const std::function<void(std::ostream&)>& body) {
  namespace fs = std::filesystem;
  fs::path target(path);
  if (target.has_parent_path() && !fs::exists(target.parent_path()))
    throw Error(ErrorCode::InvalidArgument, "output directory does not exist: " + target.parent_path().string());
  std::string tmp = path + ".tmp." + std::to_string(::getpid());
  try {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error(ErrorCode::InvalidArgument, "cannot write " + tmp);
    body(os);
    os.flush();
    if (!os) throw Error(ErrorCode::InvalidArgument, "write failed for " + tmp);
  } catch (...) {
    std::error_code ignore;
    fs::remove(tmp, ignore);
    throw;
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error(ErrorCode::InvalidArgument, "cannot rename onto " + path + ": " + ec.message());
  }
}

void write_text(Run& run, const std::string& path, const std::string& text) {
  write_atomic(path, [&](std::ostream& os) { os << text; });
  run.outputs.push_back(path);
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return "";
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char two[3];
  for (unsigned i = 0; i < len; ++i) {
    std::snprintf(two, sizeof two, "%02x", md[i]);
    hex += two;
  }
  return hex;
}

void write_manifest(const Run& run, const std::string& out, int exit_code, const std::string& message) {
  Json inputs = Json::object();
  for (const auto& p : run.inputs) inputs[p] = sha256_file(p);
  Json outputs = Json::array();
  for (const auto& p : run.outputs) outputs.push_back(p);
  Json m = {{"subcommand", run.subcommand},
            {"argv", run.argv},
            {"params", run.params},
            {"seed", run.seed ? Json(*run.seed) : Json(nullptr)},
            {"version", HOLDER_FORGE_VERSION},
            {"input_digests", inputs},
            {"outputs", outputs},
            {"exit_code", exit_code}};
  if (!message.empty()) m["message"] = message;
  write_atomic(out + ".manifest.json", [&](std::ostream& os) { os << m.dump(2) << '\n'; });
}

Json load_input(Run& run, const std::string& path) {
  run.inputs.push_back(path);
  return read_json_file(path);
}

std::string require(const std::string& v, const char* flag) {
  if (v.empty()) throw UsageError(std::string(flag) + " is required");
  return v;
}

template <class T>
T require(const std::optional<T>& v, const char* flag) {
  if (!v) throw UsageError(std::string(flag) + " is required");
  return *v;
}

std::uint64_t resolve_budget(const Flags& f) {
  if (f.budget) return *f.budget;
  if (const char* env = std::getenv("HOLDER_FORGE_BUDGET")) {
    char* end = nullptr;
    unsigned long long v = std::strtoull(env, &end, 10);
    if (!end || *end != '\0' || !*env) throw UsageError("HOLDER_FORGE_BUDGET must be a non-negative integer");
    return v;
  }
  return kDefaultBudget;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    auto b = cell.find_first_not_of(" \t\r");
    auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

Table read_csv(Run& run, const std::string& path) {
  run.inputs.push_back(path);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
  Table t;
  std::string line;
  bool first = true;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    auto cells = split_csv_line(line);
    if (first) {
      t.header = cells;
      first = false;
      continue;
    }
    if (cells.size() != t.header.size())
      throw Error(ErrorCode::ParseError, path + ":" + std::to_string(lineno) + ": expected " +
                                             std::to_string(t.header.size()) + " columns");
    t.rows.push_back(std::move(cells));
  }
  if (first) throw Error(ErrorCode::ParseError, path + " has no header row");
  return t;
}

std::size_t column(const Table& t, const std::string& name) {
  for (std::size_t i = 0; i < t.header.size(); ++i)
    if (t.header[i] == name) return i;
  throw Error(ErrorCode::ParseError, "missing column \"" + name + "\"");
}

ExactParams exact_params_from(const Flags& f) {
  return make_exact_params(parse_rational(require(f.alpha, "--alpha")), require(f.base, "--base"));
}

BigInt pow_int(std::int64_t b, unsigned long e) {
  BigInt out;
  mpz_ui_pow_ui(out.get_mpz_t(), static_cast<unsigned long>(b), e);
  return out;
}

BAdicPoint to_badic(const Rational& x, std::int64_t base) {
  BigInt power = 1;
  for (unsigned m = 0; m <= 4096; ++m) {
    if (mpz_divisible_p(power.get_mpz_t(), x.get_den_mpz_t())) {
      BigInt j = x.get_num() * (power / x.get_den());
      return BAdicPoint::make(j, m, base);
    }
    power *= base;
  }
  throw Error(ErrorCode::InvalidArgument, "point is not of the form j / base^m");
}

// ---- subcommands ---------------------------------------------------------

int cmd_eval(Run& run, const Flags& f) {
  const std::string out = require(f.out, "--out");
  Table pts = read_csv(run, require(f.points, "--points"));
  if (f.exact) {
    if (!f.spec.empty()) throw UsageError("--exact takes --alpha/--base, not --spec");
    auto ep = exact_params_from(f);
    if (pts.header.size() != 1) throw Error(ErrorCode::DimensionMismatch, "exact mode takes one coordinate");
    run.params = {{"mode", "exact"}, {"alpha", to_decimal(ep.alpha())}, {"base", ep.base()}};
    write_atomic(out, [&](std::ostream& os) {
      os << pts.header[0] << ",value,value_num,value_den\n";
      for (const auto& row : pts.rows) {
        Rational x = parse_rational(row[0]);
        Rational v = eval_exact(ep, to_badic(x, ep.base()));
        os << row[0] << ',' << to_decimal(v) << ',' << v.get_num().get_str() << ',' << v.get_den().get_str() << '\n';
      }
    });
    run.outputs.push_back(out);
    return kExitOk;
  }
  FunctionSpec fs = !f.spec.empty()
                        ? function_from_json(load_input(run, f.spec))
                        : FunctionSpec{validate_params(parse_real(require(f.alpha, "--alpha"), "--alpha"),
                                                       require(f.base, "--base"))};
  const Real tol = f.tol.value_or(1e-9);
  run.params = {{"mode", "float"}, {"function", function_to_json(fs)}, {"tol", static_cast<double>(tol)}};
  if (pts.header.size() != fs.dimension())
    throw Error(ErrorCode::DimensionMismatch, "points have " + std::to_string(pts.header.size()) +
                                                  " columns, function takes " + std::to_string(fs.dimension()));
  write_atomic(out, [&](std::ostream& os) {
    for (const auto& h : pts.header) os << h << ',';
    os << "value\n";
    for (const auto& row : pts.rows) {
      Point x;
      for (const auto& c : row) x.push_back(parse_real(c, "coordinate"));
      for (const auto& c : row) os << c << ',';
      os << fmt_real(fs.evaluate(x, tol)) << '\n';
    }
  });
  run.outputs.push_back(out);
  return kExitOk;
}

int cmd_sample(Run& run, const Flags& f) {
  const std::string out = require(f.out, "--out");
  run.seed = require(f.seed, "--seed");
  Json doc = load_input(run, require(f.spec, "--spec"));
  if (doc.contains("family")) doc = doc["family"];
  FamilySpec fam = family_from_json(doc);
  if (f.n) fam = make_family_spec(static_cast<int>(*f.n), fam.gamma, fam.domain);
  std::size_t count = static_cast<std::size_t>(require(f.count, "--count"));
  if (count < 1) throw UsageError("--count must be at least 1");
  auto curves = sample_family(fam, count, *run.seed);
  Json list = Json::array();
  for (const auto& c : curves) list.push_back(curve_to_json(c));
  run.params = {{"family", family_to_json(fam)}, {"count", count}};
  Json result = {{"family", family_to_json(fam)}, {"seed", *run.seed}, {"count", count}, {"curves", list}};
  write_text(run, out, result.dump(2) + "\n");
  return kExitOk;
}

void increment_row(std::ostream& os, const IncrementRow& r) {
  os << r.m << ',' << r.j.get_str() << ',' << to_decimal(r.delta) << ',' << r.delta.get_num().get_str() << ','
     << r.delta.get_den().get_str() << ',' << to_decimal(r.ratio) << ',' << r.ratio.get_num().get_str() << ','
     << r.ratio.get_den().get_str() << ',' << (r.pass ? "true" : "false") << '\n';
}

int cmd_increments(Run& run, const Flags& f) {
  const std::string out = require(f.out, "--out");
  auto ep = exact_params_from(f);
  const unsigned m = require(f.m, "--m");
  ScanOptions opt;
  opt.budget = resolve_budget(f);
  opt.threads = f.threads;
  struct Level {
    unsigned m;
    BigInt lo, hi;
  };
  std::vector<Level> levels;
  if (f.j_lo || f.j_hi) {
    if (!f.j_lo || !f.j_hi) throw UsageError("--j-lo and --j-hi go together");
    levels.push_back({m, BigInt(std::to_string(*f.j_lo)), BigInt(std::to_string(*f.j_hi))});
  } else {
    for (unsigned k = 0; k <= m; ++k) levels.push_back({k, 0, 2 * pow_int(ep.base(), k)});
  }
  BigInt total = 0;
  for (const auto& l : levels) {
    if (l.hi < l.lo) throw UsageError("--j-hi must not be below --j-lo");
    total += l.hi - l.lo;
  }
  if (total > BigInt(std::to_string(opt.budget)))
    throw Error(ErrorCode::RangeTooLarge, total.get_str() + " intervals exceed the scan budget " +
                                              std::to_string(opt.budget));
  run.params = {{"alpha", to_decimal(ep.alpha())}, {"base", ep.base()}, {"m", m}, {"budget", opt.budget},
                {"levels", levels.size()}};
  std::uint64_t failures = 0, rows = 0;
  write_atomic(out, [&](std::ostream& os) {
    os << "m,j,delta,delta_num,delta_den,ratio,ratio_num,ratio_den,pass\n";
    for (const auto& l : levels)
      for_each_increment(
          ep, l.m, l.lo, l.hi,
          [&](const IncrementRow& r) {
            ++rows;
            if (!r.pass) ++failures;
            increment_row(os, r);
          },
          opt);
  });
  run.outputs.push_back(out);
  run.params["rows"] = rows;
  run.params["violations"] = failures;
  if (failures) {
    throw PropertyViolation(std::to_string(failures) + " intervals violate the bound");
  }
  return kExitOk;
}

int cmd_quotient_growth(Run& run, const Flags& f) {
  const std::string out = require(f.out, "--out");
  auto ep = exact_params_from(f);
  const Rational beta = parse_rational(f.beta);
  const unsigned m_max = static_cast<unsigned>(require(f.m_max_opt, "--m-max"));
  ScanOptions opt;
  opt.budget = resolve_budget(f);
  opt.threads = f.threads;
  auto rows = quotient_growth(ep, beta, m_max, opt);
  run.params = {{"alpha", to_decimal(ep.alpha())}, {"base", ep.base()}, {"beta", to_decimal(beta)},
                {"m_max", m_max}, {"budget", opt.budget}};
  std::size_t failures = 0;
  write_atomic(out, [&](std::ostream& os) {
    os << "m,max_increment,max_num,max_den,argmax,quotient,floor,quotient_num,quotient_den,floor_num,floor_den,"
          "pass\n";
    for (const auto& r : rows) {
      if (!r.pass) ++failures;
      os << r.m << ',' << to_decimal(r.max_increment) << ',' << r.max_increment.get_num().get_str() << ','
         << r.max_increment.get_den().get_str() << ',' << r.argmax.get_str() << ',' << fmt_real(r.quotient) << ','
         << fmt_real(r.floor) << ',';
      if (r.quotient_exact)
        os << r.quotient_exact->get_num().get_str() << ',' << r.quotient_exact->get_den().get_str() << ',';
      else
        os << ",,";
      if (r.floor_exact)
        os << r.floor_exact->get_num().get_str() << ',' << r.floor_exact->get_den().get_str() << ',';
      else
        os << ",,";
      os << (r.pass ? "true" : "false") << '\n';
    }
  });
  run.outputs.push_back(out);
  if (failures)
    throw PropertyViolation(std::to_string(failures) + " levels fall below the floor");
  return kExitOk;
}

std::string sibling(const std::string& out, const std::string& suffix) {
  std::filesystem::path p(out);
  return (p.parent_path() / (p.stem().string() + suffix)).string();
}

int cmd_exponent(Run& run, const Flags& f) {
  const std::string out = require(f.out, "--out");
  run.seed = require(f.seed, "--seed");
  FunctionSpec fs = function_from_json(load_input(run, require(f.spec, "--spec")));
  const Real tol = f.tol.value_or(1e-15);
  const int m_min = static_cast<int>(f.m_min.value_or(0));
  const int m_max = static_cast<int>(require(f.m_max_opt, "--m-max"));
  std::optional<TestCurve> curve;
  if (!f.curve.empty()) curve = curve_from_json(load_input(run, f.curve));
  ScalarMap g;
  Real center;
  std::int64_t scale_base;
  Json predicted = nullptr;
  if (curve) {
    if (curve->dimension() != fs.dimension()) throw Error(ErrorCode::DimensionMismatch, "curve dimension mismatch");
    center = f.s0;
    const TestCurve c = *curve;
    g = [fs, c, tol](Real s) { return fs.evaluate(c.position(s), tol); };
    scale_base = f.scale_base.value_or(2);
    if (const auto* sep = std::get_if<SeparableFunction>(&fs.function)) {
      auto p = predicted_exponent(*sep, c, center);
      predicted = {{"alpha", p.alpha}, {"active", p.active}, {"stationary", p.stationary},
                   {"min_active_speed", static_cast<double>(p.min_active_speed)}};
    }
  } else {
    if (fs.dimension() != 1) throw UsageError("multivariate functions need --curve");
    center = f.x0.value_or(0);
    g = [fs, tol](Real x) { return fs.evaluate({x}, tol); };
    scale_base = f.scale_base.value_or(fs.natural_base());
  }
  auto prof = oscillation_profile(g, center, {m_min, m_max}, f.samples, *run.seed, scale_base);
  const Real floor = f.drop_floor ? static_cast<Real>(*f.drop_floor) : 10 * tol;
  auto est = estimate_exponent(prof, floor, f.drop_coarsest);
  const std::string profile_csv = sibling(out, ".profile.csv");
  write_atomic(profile_csv, [&](std::ostream& os) {
    os << "m,r,omega\n";
    for (std::size_t i = 0; i < prof.scales.size(); ++i)
      os << prof.levels[i] << ',' << fmt_real(prof.scales[i]) << ',' << fmt_real(prof.oscillations[i]) << '\n';
  });
  run.outputs.push_back(profile_csv);
  run.params = {{"function", function_to_json(fs)}, {"center", static_cast<double>(center)},
                {"m_min", m_min},      {"m_max", m_max},
                {"samples", f.samples}, {"scale_base", scale_base},
                {"tol", static_cast<double>(tol)}, {"drop_floor", static_cast<double>(floor)},
                {"drop_coarsest", f.drop_coarsest}};
  if (curve) run.params["curve"] = curve_to_json(*curve);
  Json result = {{"alpha_hat", est.alpha_hat},
                 {"r_squared", est.r_squared},
                 {"window", {est.window_min, est.window_max}},
                 {"scales_used", est.scales_used},
                 {"profile_csv", profile_csv}};
  if (!predicted.is_null()) result["predicted"] = predicted;
  write_text(run, out, result.dump(2) + "\n");
  return kExitOk;
}

FieldMap field_of(const FunctionSpec& fs, Real tol) {
  return [fs, tol](const Point& x) { return fs.evaluate(x, tol); };
}

int cmd_curve_probe(Run& run, const Flags& f) {
  const std::string out = require(f.out, "--out");
  FunctionSpec fs = function_from_json(load_input(run, require(f.spec, "--spec")));
  TestCurve c = curve_from_json(load_input(run, require(f.curve, "--curve")));
  const Real tol = f.tol.value_or(1e-15);
  const std::int64_t base = f.scale_base.value_or(fs.natural_base());
  ScaleRange range{static_cast<int>(f.m_min.value_or(1)), static_cast<int>(f.m_max_opt.value_or(12))};
  auto rep = lipschitz_quotient(field_of(fs, tol), c, f.s0, range, base);
  run.params = {{"function", function_to_json(fs)}, {"curve", curve_to_json(c)}, {"s0", f.s0},
                {"m_min", range.m_min},            {"m_max", range.m_max},      {"scale_base", base},
                {"tol", static_cast<double>(tol)}};
  write_atomic(out, [&](std::ostream& os) {
    os << "m,r,max_quotient\n";
    for (const auto& r : rep.rows) os << r.m << ',' << fmt_real(r.r) << ',' << fmt_real(r.max_quotient) << '\n';
  });
  run.outputs.push_back(out);
  return kExitOk;
}

int cmd_fn_probe(Run& run, const Flags& f) {
  const std::string out = require(f.out, "--out");
  FunctionSpec fs = function_from_json(load_input(run, require(f.spec, "--spec")));
  auto curves = curves_from_json(load_input(run, require(f.curve, "--curve")));
  const int n = static_cast<int>(require(f.n, "--n"));
  const Real tol = f.tol.value_or(1e-15);
  MembershipOptions mo;
  mo.scale_base = f.scale_base.value_or(fs.natural_base());
  mo.m_max = static_cast<int>(f.m_max_opt.value_or(12));
  mo.evaluation_error = tol;
  auto res = fn_membership_probe(field_of(fs, tol), curves, n, mo);
  run.params = {{"function", function_to_json(fs)}, {"n", n}, {"m_max", mo.m_max}, {"scale_base", mo.scale_base},
                {"tol", static_cast<double>(tol)}, {"curves", curves.size()}};
  write_atomic(out, [&](std::ostream& os) {
    os << "index,member,witness_m,witness_s,max_quotient\n";
    for (std::size_t i = 0; i < res.size(); ++i)
      os << i << ',' << (res[i].member ? "true" : "false") << ','
         << (res[i].witness_m ? std::to_string(*res[i].witness_m) : "") << ','
         << (res[i].witness_m ? fmt_real(res[i].witness_s) : "") << ',' << fmt_real(res[i].max_quotient) << '\n';
  });
  run.outputs.push_back(out);
  return kExitOk;
}

int cmd_perturb(Run& run, const Flags& f) {
  const std::string out = require(f.out, "--out");
  ExperimentSpec e = experiment_from_json(load_input(run, require(f.spec, "--spec")));
  if (f.seed && e.seed && *f.seed != *e.seed) throw UsageError("--seed disagrees with the seed in the spec");
  if (!f.seed && !e.seed) throw UsageError("a seed is required (--seed or \"seed\" in the spec)");
  run.seed = f.seed ? *f.seed : *e.seed;
  if (!f.delta.empty()) e.delta = parse_real(f.delta, "--delta");
  if (f.count) e.count = static_cast<std::size_t>(*f.count);
  if (f.n) e.family = make_family_spec(static_cast<int>(*f.n), e.family.gamma, e.family.domain);
  if (f.m_max_opt) e.options.m_max = static_cast<int>(*f.m_max_opt);
  if (f.scale_base) e.options.scale_base = *f.scale_base;
  if (f.tol) e.options.eval_tol = *f.tol;
  if (e.count < 1) throw UsageError("count must be at least 1");
  auto rep = perturbation_experiment(e.baseline, e.function, e.delta, e.family, e.count, *run.seed, e.options);
  const std::string curves_csv = sibling(out, ".curves.csv");
  write_atomic(curves_csv, [&](std::ostream& os) {
    os << "index,kind,verdict,escape_m,max_quotient\n";
    for (const auto& v : rep.verdicts)
      os << v.index << ',' << v.kind << ',' << (v.escaped ? "escaped" : "undecided") << ','
         << (v.escape_m ? std::to_string(*v.escape_m) : "") << ',' << fmt_real(v.max_quotient) << '\n';
  });
  run.outputs.push_back(curves_csv);
  run.params = {{"baseline", baseline_to_json(e.baseline)},
                {"function", function_to_json({e.function})},
                {"delta", static_cast<double>(e.delta)},
                {"family", family_to_json(e.family)},
                {"count", e.count},
                {"m_max", e.options.m_max},
                {"scale_base", rep.scale_base},
                {"eval_tol", static_cast<double>(e.options.eval_tol)}};
  Json curves = Json::array();
  for (std::size_t i = 0; i < rep.curves.size(); ++i) {
    Json c = curve_to_json(rep.curves[i]);
    c["verdict"] = rep.verdicts[i].escaped ? "escaped" : "undecided";
    c["escape_m"] = rep.verdicts[i].escape_m ? Json(*rep.verdicts[i].escape_m) : Json(nullptr);
    curves.push_back(c);
  }
  Json result = {
      {"delta", static_cast<double>(rep.delta)},
      {"n", rep.n},
      {"count", rep.count},
      {"seed", rep.seed},
      {"scale_base", rep.scale_base},
      {"m_first", rep.m_first},
      {"m_max", rep.m_max},
      {"gradient_bound", static_cast<double>(rep.gradient_bound)},
      {"escaped", rep.escaped},
      {"undecided", rep.undecided},
      {"escape_fraction", rep.escape_fraction},
      {"max_escape_m", rep.max_escape_m ? Json(*rep.max_escape_m) : Json(nullptr)},
      {"curves_csv", curves_csv},
      {"scope",
       "escaped verdicts refute membership only through the sampled lines and arcs; undecided means no "
       "violation was found up to m_max, not membership"},
      {"curves", curves}};
  write_text(run, out, result.dump(2) + "\n");
  return kExitOk;
}

int validate_increment_table(Run& run, const Flags& f, Json& report) {
  auto ep = exact_params_from(f);
  Table t = read_csv(run, f.increments);
  const std::size_t cm = column(t, "m"), cj = column(t, "j"), cn = column(t, "delta_num"),
                    cd = column(t, "delta_den"), cp = column(t, "pass");
  std::uint64_t violations = 0, mismatches = 0;
  Json bad_rows = Json::array();
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    unsigned m;
    BigInt j, num, den;
    try {
      m = static_cast<unsigned>(std::stoul(row[cm]));
      j = BigInt(row[cj]);
      num = BigInt(row[cn]);
      den = BigInt(row[cd]);
    } catch (const std::exception&) {
      throw Error(ErrorCode::ParseError, "row " + std::to_string(i + 1) + " has malformed integers");
    }
    if (den == 0) throw Error(ErrorCode::ParseError, "row " + std::to_string(i + 1) + " has a zero denominator");
    Rational claimed(num, den);
    claimed.canonicalize();
    const bool holds = abs(claimed) >= increment_floor(ep, m);
    const bool recomputed = increment(ep, m, j) == claimed;
    const bool says_pass = row[cp] == "true";
    if (!holds) ++violations;
    if (!recomputed || says_pass != holds) ++mismatches;
    if ((!holds || !recomputed || says_pass != holds) && bad_rows.size() < 64)
      bad_rows.push_back({{"row", i + 1}, {"m", m}, {"j", j.get_str()}, {"bound_holds", holds},
                          {"matches_recomputation", recomputed}});
  }
  report = {{"kind", "increment_table"}, {"rows", t.rows.size()}, {"violations", violations},
            {"mismatches", mismatches}, {"flagged", bad_rows}};
  run.params = {{"alpha", to_decimal(ep.alpha())}, {"base", ep.base()}};
  if (violations) return kExitViolation;
  if (mismatches) return kExitInvalid;
  return kExitOk;
}

int cmd_validate(Run& run, const Flags& f) {
  const std::string out = require(f.out, "--out");
  const int chosen = !f.spec.empty() + !f.curve.empty() + !f.increments.empty();
  if (chosen != 1) throw UsageError("validate takes exactly one of --spec, --curve, --increments");
  Json report;
  int code = kExitOk;
  if (!f.increments.empty()) {
    code = validate_increment_table(run, f, report);
  } else if (!f.curve.empty()) {
    TestCurve c = curve_from_json(load_input(run, f.curve));
    const Real tol = f.tol.value_or(c.rho_estimated() ? 1e-6 : 1e-9);
    auto r = validate_curve(c, 257, tol);
    report = {{"kind", "curve"},
              {"unit_speed_ok", r.unit_speed_ok},
              {"max_speed_deviation", static_cast<double>(r.max_speed_deviation)},
              {"rho", static_cast<double>(c.rho())},
              {"rho_hat", static_cast<double>(r.rho_hat)},
              {"rho_estimated", c.rho_estimated()},
              {"rho_ok", r.rho_ok},
              {"passed", r.passed()}};
    run.params = {{"grid_n", 257}, {"unit_speed_tol", static_cast<double>(tol)}};
    if (!r.passed()) code = kExitInvalid;
  } else {
    Json doc = load_input(run, f.spec);
    std::string kind;
    if (doc.is_array()) {
      kind = "curves";
      report = {{"count", curves_from_json(doc).size()}};
    } else if (doc.contains("baseline") || doc.contains("family")) {
      kind = "experiment";
      auto e = experiment_from_json(doc);
      report = {{"gradient_bound", static_cast<double>(e.baseline.gradient_bound(e.family.domain))}};
    } else if (doc.contains("domain")) {
      kind = "family";
      auto fam = family_from_json(doc);
      auto k = margin_box(fam);
      Json lo = Json::array(), hi = Json::array();
      for (Real v : k.lo) lo.push_back(static_cast<double>(v));
      for (Real v : k.hi) hi.push_back(static_cast<double>(v));
      report = {{"margin_lo", lo}, {"margin_hi", hi}};
    } else if (doc.contains("type") && doc["type"].is_string() &&
               (doc["type"] == "separable" || doc["type"] == "sawtooth")) {
      kind = "function";
      auto fs = function_from_json(doc);
      report = {{"function", function_to_json(fs)}};
    } else {
      kind = "curve";
      auto c = curve_from_json(doc);
      report = {{"domain", {static_cast<double>(c.domain().lo), static_cast<double>(c.domain().hi)}}};
    }
    report["kind"] = kind;
    report["valid"] = true;
  }
  write_text(run, out, report.dump(2) + "\n");
  return code;
}

}  // namespace

int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"holder_forge: strictly Hoelder sawtooth series, exact b-adic checks and curve probes"};
  app.name(argv.empty() ? "holder_forge" : argv[0]);
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", HOLDER_FORGE_VERSION);
  Flags f;

  auto add_out = [&](CLI::App* s) { s->add_option("--out", f.out, "Output path")->required(); };
  auto add_exact = [&](CLI::App* s, bool required) {
    auto* a = s->add_option("--alpha", f.alpha, "Exponent, p/q or exact decimal");
    auto* b = s->add_option("--base", f.base, "Even base");
    if (required) a->required(), b->required();
  };
  auto add_budget = [&](CLI::App* s) {
    s->add_option("--budget", f.budget, "Interval budget (overrides HOLDER_FORGE_BUDGET)");
    s->add_option("--threads", f.threads, "Worker threads, 0 = all cores");
  };

  std::map<std::string, std::function<int(Run&, const Flags&)>> handlers;

  auto* eval = app.add_subcommand("eval", "Evaluate a function at points from a CSV");
  add_exact(eval, false);
  eval->add_option("--spec", f.spec, "Function spec JSON");
  eval->add_option("--points", f.points, "CSV with a header row, one column per coordinate")->required();
  eval->add_option("--tol", f.tol, "Absolute tolerance (float mode)");
  eval->add_flag("--exact", f.exact, "Exact rational evaluation at b-adic points");
  add_out(eval);
  handlers["eval"] = cmd_eval;

  auto* sample = app.add_subcommand("sample", "Sample curves of a family");
  sample->add_option("--spec", f.spec, "Family spec JSON")->required();
  sample->add_option("--count", f.count, "Number of curves")->required();
  sample->add_option("--seed", f.seed, "Sampler seed");
  sample->add_option("--n", f.n, "Override family n");
  add_out(sample);
  handlers["sample"] = cmd_sample;

  auto* inc = app.add_subcommand("increments", "Exact increment bound check over one period per level");
  add_exact(inc, true);
  inc->add_option("--m", f.m, "Deepest level")->required();
  inc->add_option("--j-lo", f.j_lo, "First j (single level m)");
  inc->add_option("--j-hi", f.j_hi, "One past the last j");
  add_budget(inc);
  add_out(inc);
  handlers["increments"] = cmd_increments;

  auto* qg = app.add_subcommand("quotient-growth", "Exact beta-quotient growth per level");
  add_exact(qg, true);
  qg->add_option("--beta", f.beta, "Quotient exponent, default 1");
  qg->add_option("--m-max", f.m_max_opt, "Deepest level")->required();
  add_budget(qg);
  add_out(qg);
  handlers["quotient-growth"] = cmd_quotient_growth;

  auto* ex = app.add_subcommand("exponent", "Estimate a pointwise Hoelder exponent");
  ex->add_option("--spec", f.spec, "Function spec JSON")->required();
  ex->add_option("--curve", f.curve, "Curve spec JSON (compose with f)");
  ex->add_option("--x0", f.x0, "Center for a series");
  ex->add_option("--s0", f.s0, "Curve parameter center");
  ex->add_option("--m-min", f.m_min, "Coarsest level");
  ex->add_option("--m-max", f.m_max_opt, "Finest level")->required();
  ex->add_option("--samples", f.samples, "Samples per scale");
  ex->add_option("--seed", f.seed, "Sampler seed");
  ex->add_option("--tol", f.tol, "Evaluation tolerance");
  ex->add_option("--scale-base", f.scale_base, "Scale ladder base");
  ex->add_option("--drop-floor", f.drop_floor, "Drop oscillations below this (default 10 tol)");
  ex->add_option("--drop-coarsest", f.drop_coarsest, "Coarse scales excluded from the fit");
  add_out(ex);
  handlers["exponent"] = cmd_exponent;

  auto* cp = app.add_subcommand("curve-probe", "Difference quotients along a curve");
  cp->add_option("--spec", f.spec, "Function spec JSON")->required();
  cp->add_option("--curve", f.curve, "Curve spec JSON")->required();
  cp->add_option("--s0", f.s0, "Curve parameter center");
  cp->add_option("--m-min", f.m_min, "Coarsest level");
  cp->add_option("--m-max", f.m_max_opt, "Finest level");
  cp->add_option("--tol", f.tol, "Evaluation tolerance");
  cp->add_option("--scale-base", f.scale_base, "Scale ladder base");
  add_out(cp);
  handlers["curve-probe"] = cmd_curve_probe;

  auto* fp = app.add_subcommand("fn-probe", "Lipschitz-bound membership probe over curves");
  fp->add_option("--spec", f.spec, "Function spec JSON")->required();
  fp->add_option("--curve", f.curve, "Curve JSON or list of curves")->required();
  fp->add_option("--n", f.n, "Bound n")->required();
  fp->add_option("--m-max", f.m_max_opt, "Finest level");
  fp->add_option("--tol", f.tol, "Evaluation tolerance");
  fp->add_option("--scale-base", f.scale_base, "Scale ladder base");
  add_out(fp);
  handlers["fn-probe"] = cmd_fn_probe;

  auto* pt = app.add_subcommand("perturb", "Perturbation escape experiment");
  pt->add_option("--spec", f.spec, "Experiment spec JSON")->required();
  pt->add_option("--seed", f.seed, "Sampler seed (must match the spec if both are given)");
  pt->add_option("--delta", f.delta, "Override delta");
  pt->add_option("--count", f.count, "Override curve count");
  pt->add_option("--n", f.n, "Override family n");
  pt->add_option("--m-max", f.m_max_opt, "Escape-scale cap");
  pt->add_option("--scale-base", f.scale_base, "Scale ladder base");
  pt->add_option("--tol", f.tol, "Evaluation tolerance");
  add_out(pt);
  handlers["perturb"] = cmd_perturb;

  auto* va = app.add_subcommand("validate", "Validate a spec, a curve, or an increment table");
  va->add_option("--spec", f.spec, "Any spec JSON");
  va->add_option("--curve", f.curve, "Curve spec JSON");
  va->add_option("--increments", f.increments, "Increment table CSV");
  add_exact(va, false);
  va->add_option("--tol", f.tol, "Unit-speed tolerance for --curve");
  add_out(va);
  handlers["validate"] = cmd_validate;

  std::vector<std::string> rev(argv.rbegin(), argv.rend());
  if (!rev.empty()) rev.pop_back();
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << HOLDER_FORGE_VERSION << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitInvalid;
  }

  CLI::App* chosen = app.get_subcommands().front();
  Run run;
  run.subcommand = chosen->get_name();
  run.argv = argv;
  int code = kExitOk;
  std::string message;
  try {
    code = handlers.at(run.subcommand)(run, f);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << chosen->help();
    return kExitInvalid;
  } catch (const PropertyViolation& v) {
    code = kExitViolation;
    message = v.what();
    err << "property violation: " << message << '\n';
  } catch (const Error& e) {
    code = kExitInvalid;
    message = e.what();
    err << "error: " << message << '\n';
  } catch (const std::exception& e) {
    code = kExitInvalid;
    message = e.what();
    err << "error: " << message << '\n';
  }
  if (code == kExitViolation && message.empty()) {
    message = "property violation";
    err << "property violation reported in " << f.out << '\n';
  }
  try {
    write_manifest(run, f.out, code, message);
  } catch (const std::exception& e) {
    err << "error: cannot write manifest: " << e.what() << '\n';
    if (code == kExitOk) code = kExitInvalid;
  }
  return code;
}

}  // namespace holder::cli
