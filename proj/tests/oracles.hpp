// Copyright 2026 The aretrim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Test-only reference implementations, deliberately independent of the
// library code paths they check: quadrature, series expansions, and
// recurrence-anchored values in long double.

#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>

namespace oracles {

// Adaptive Simpson quadrature.
inline double simpson(const std::function<double(double)>& f, double a,
                      double b, double fa, double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adaptive_simpson_rec(const std::function<double(double)>& f,
                                   double a, double b, double fa, double fm,
                                   double fb, double whole, double tol,
                                   int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson(f, a, m, fa, flm, fm);
  const double right = simpson(f, m, b, fm, frm, fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a,
                        double b, double tol = 1e-12) {
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  return adaptive_simpson_rec(f, a, b, fa, fm, fb, simpson(f, a, b, fa, fm, fb),
                              tol, 60);
}

// erf by its Taylor series; accurate to ~1e-19 in long double for |z| <= 3.
inline long double erf_series(long double z) {
  const long double z2 = z * z;
  long double c = z;       // (-1)^n z^(2n+1) / n!
  long double sum = z;     // running sum of c / (2n+1)
  for (int n = 1; n < 400; ++n) {
    c *= -z2 / n;
    const long double term = c / (2 * n + 1);
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-22L) break;
  }
  return sum * 2.0L / std::sqrt(3.14159265358979323846264338327950288L);
}

// Standard normal cdf from the erf series; |x| should stay below ~4.2 so the
// series argument stays in its accurate range.
inline long double normal_cdf_series(long double x) {
  return 0.5L * (1.0L + erf_series(x / std::sqrt(2.0L)));
}

// ln Gamma(base + n) accumulated by the recurrence from ln Gamma(base),
// where base is 0.5 or 1 (the two anchors with closed forms).
inline long double log_gamma_recurrence(double base, int n) {
  long double anchor;
  if (base == 0.5)
    anchor = 0.5L * std::log(3.14159265358979323846264338327950288L);
  else if (base == 1.0)
    anchor = 0.0L;
  else
    throw std::invalid_argument("log_gamma_recurrence: base must be 0.5 or 1");
  long double acc = anchor;
  for (int i = 0; i < n; ++i) acc += std::log(static_cast<long double>(base) + i);
  return acc;
}

// Lower regularized incomplete gamma by quadrature of the defining integral,
// normalized with the C library's lgamma (an implementation independent of
// the library's own). Needs a >= 1 so the integrand stays bounded.
inline double reg_inc_gamma_quadrature(double a, double x) {
  if (x <= 0.0) return 0.0;
  const double lg = lgamma(a);
  const auto f = [&](double t) {
    return t <= 0.0 ? (a > 1.0 ? 0.0 : std::exp(-lg))
                    : std::exp((a - 1.0) * std::log(t) - t - lg);
  };
  return integrate(f, 0.0, x, 1e-13);
}

}  // namespace oracles
