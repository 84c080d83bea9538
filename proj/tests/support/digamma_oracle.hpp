#pragma once

#include <boost/math/special_functions/bernoulli.hpp>

#include <cmath>

namespace testref {

/// psi(x) in long double: recurrence up to x >= 30, then the asymptotic
/// series with Bernoulli numbers B_2 .. B_30.
inline long double digamma_oracle(long double x) {
  long double shift = 0.0L;
  while (x < 30.0L) {
    shift += 1.0L / x;
    x += 1.0L;
  }
  long double series = 0.0L;
  long double xpow = x * x;
  for (int k = 1; k <= 15; ++k) {
    series += boost::math::bernoulli_b2n<long double>(k) / (2.0L * k * xpow);
    xpow *= x * x;
  }
  return std::log(x) - 0.5L / x - series - shift;
}

}  // namespace testref
