#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mdh/error.hpp"

namespace mdh {

enum class ScalarType { Int64, Float64 };

inline const char* type_name(ScalarType t) {
  return t == ScalarType::Int64 ? "i64" : "f64";
}

// A scalar or a fixed-arity tuple of scalars. Tuples never nest.
struct ScalarValue {
  struct Comp {
    ScalarType type = ScalarType::Int64;
    int64_t i = 0;
    double f = 0.0;
  };
  std::vector<Comp> comps;
  bool is_tuple = false; // arity-1 tuples stay distinguishable from plain scalars

  static ScalarValue of_i64(int64_t v) {
    ScalarValue s;
    s.comps.push_back({ScalarType::Int64, v, 0.0});
    return s;
  }
  static ScalarValue of_f64(double v) {
    ScalarValue s;
    s.comps.push_back({ScalarType::Float64, 0, v});
    return s;
  }
  static ScalarValue tuple(std::vector<Comp> cs) {
    ScalarValue s;
    s.comps = std::move(cs);
    s.is_tuple = true;
    return s;
  }

  size_t arity() const { return comps.size(); }

  bool equals_exact(const ScalarValue& o) const {
    if (comps.size() != o.comps.size()) return false;
    for (size_t c = 0; c < comps.size(); ++c) {
      if (comps[c].type != o.comps[c].type) return false;
      if (comps[c].type == ScalarType::Int64) {
        if (comps[c].i != o.comps[c].i) return false;
      } else {
        if (comps[c].f != o.comps[c].f) return false;
      }
    }
    return true;
  }

  std::string to_string() const;
};

inline bool nearly_equal(double a, double b, double rel_tol) {
  if (a == b) return true;
  double scale = std::max(std::abs(a), std::abs(b));
  return std::abs(a - b) <= rel_tol * std::max(scale, 1.0);
}

} // namespace mdh
