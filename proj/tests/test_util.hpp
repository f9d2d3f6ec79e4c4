#pragma once

#include <memory>
#include <string>
#include <vector>

#include "idemq/ring.hpp"

namespace idemq::testing {

// K[T_1^{1/2^oo}, ..., T_n^{1/2^oo}], optionally truncated by (T_1, ..., T_n).
inline std::shared_ptr<const RingSpec> rn_spec(std::size_t n, bool truncated, FieldSpec field = FieldSpec::rationals()) {
  std::vector<Variable> vars;
  std::vector<std::vector<Weight>> q;
  for (std::size_t i = 0; i < n; ++i) {
    vars.push_back({n == 1 ? std::string("T") : "T" + std::to_string(i + 1), true});
    if (truncated) {
      std::vector<Weight> m(n, Weight(0));
      m[i] = Weight(1);
      q.push_back(m);
    }
  }
  return std::make_shared<const RingSpec>(field, 2, vars, q);
}

// Exponent vector helper: mono(spec, {1/2, 0}) etc.
inline Multidegree mono(const RingSpec& s, std::vector<Weight> e) { return s.from_exponents(e); }

inline std::int64_t wcap(const RingSpec& s, Weight w) { return (w * Weight(s.scale())).numerator(); }

}  // namespace idemq::testing
