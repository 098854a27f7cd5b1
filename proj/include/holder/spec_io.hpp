#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "holder/category.hpp"
#include "holder/curves.hpp"
#include "holder/sawtooth.hpp"
#include "holder/separable.hpp"

namespace holder {

using Json = nlohmann::ordered_json;

/// Either a single series on R or a separable function on R^d.
struct FunctionSpec {
  std::variant<SeriesParams, SeparableFunction> function;

  std::size_t dimension() const;
  /// Default probe scale base: the series base, or the largest component base.
  std::int64_t natural_base() const;
  Real evaluate(const Point& x, Real tol) const;
};

struct ExperimentSpec {
  QuadraticBaseline baseline;
  SeparableFunction function;
  Real delta = 0;
  FamilySpec family;
  std::size_t count = 0;
  std::optional<std::uint64_t> seed;
  ExperimentOptions options;
};

/// All parsers throw ParseError for malformed documents and the library's
/// own error codes for invalid values.
Json parse_json_text(const std::string& text);
Json read_json_file(const std::string& path);

/// {"type": "separable", "gamma": g, "components": [{"alpha": a, "base": b|"auto"}, ...]}
/// or {"type": "sawtooth", "alpha": a, "base": b}.
FunctionSpec function_from_json(const Json& doc);
Json function_to_json(const FunctionSpec& f);

/// {"type": "line", "origin", "direction", "half_len"},
/// {"type": "arc", "center", "radius", "phase", "half_len"} or
/// {"type": "raw_table", "points": [[...], ...], "grid_n"?}.
TestCurve curve_from_json(const Json& doc);
Json curve_to_json(const TestCurve& c);
/// A single curve document or an array of them.
std::vector<TestCurve> curves_from_json(const Json& doc);

/// {"n", "gamma", "domain": {"lo": [...], "hi": [...]}}
FamilySpec family_from_json(const Json& doc);
Json family_to_json(const FamilySpec& f);

/// {"type": "quadratic", "coefficients": [[c0, c1, c2], ...]}
QuadraticBaseline baseline_from_json(const Json& doc);
Json baseline_to_json(const QuadraticBaseline& q);

/// {baseline, delta, function, family, count, seed?, m_max?, eval_tol?}
ExperimentSpec experiment_from_json(const Json& doc);

/// Numbers or rational strings such as "3/4".
double json_real(const Json& v, const char* what);
Point json_point(const Json& v, const char* what);

}  // namespace holder
