#pragma once

#include <vector>

namespace holder {

// Working precision for probes, curves and series evaluation. On x86-64 this
// is the 80-bit extended format (64-bit significand).
using Real = long double;

using Point = std::vector<Real>;

}  // namespace holder
