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

#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace aretrim {

struct ChiParams {
  explicit ChiParams(double nu_) : nu(nu_) {
    if (!(nu > 0.0)) throw std::domain_error("chi: nu must be positive");
  }
  double nu;
};

struct ChiSquareParams {
  explicit ChiSquareParams(double nu_) : nu(nu_) {
    if (!(nu > 0.0)) throw std::domain_error("chi-square: nu must be positive");
  }
  double nu;
};

struct NormalParams {
  NormalParams(double mu_, double sigma2_) : mu(mu_), sigma2(sigma2_) {
    if (!(sigma2 > 0.0)) throw std::domain_error("normal: variance must be positive");
  }
  double mu;
  double sigma2;
};

// ln Gamma(z) for z > 0, Lanczos approximation (g = 7, 9 terms).
inline double log_gamma(double z) {
  if (!(z > 0.0)) throw std::domain_error("log_gamma: z must be positive");
  static constexpr double kCoef[9] = {
      0.99999999999980993,      676.5203681218851,    -1259.1392167224028,
      771.32342877765313,       -176.61502916214059,  12.507343278686905,
      -0.13857109526572012,     9.9843695780195716e-6, 1.5056327351493116e-7};
  if (z < 0.5) {
    // Reflection keeps the series in its accurate range.
    return std::log(std::numbers::pi / std::sin(std::numbers::pi * z)) -
           log_gamma(1.0 - z);
  }
  const double zm1 = z - 1.0;
  double x = kCoef[0];
  for (int i = 1; i < 9; ++i) x += kCoef[i] / (zm1 + i);
  const double t = zm1 + 7.5;
  return 0.5 * std::log(2.0 * std::numbers::pi) + (zm1 + 0.5) * std::log(t) -
         t + std::log(x);
}

namespace detail {

// Lower regularized incomplete gamma by its power series; valid for x < a+1.
inline double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 0; n < 10000; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * std::numeric_limits<double>::epsilon())
      return sum * std::exp(-x + a * std::log(x) - log_gamma(a));
  }
  throw std::runtime_error("reg_inc_gamma_p: series failed to converge");
}

// Upper regularized incomplete gamma Q(a,x) by modified Lentz continued
// fraction; valid for x >= a+1.
inline double gamma_q_contfrac(double a, double x) {
  constexpr double kFpMin = std::numeric_limits<double>::min() /
                            std::numeric_limits<double>::epsilon();
  double b = x + 1.0 - a;
  double c = 1.0 / kFpMin;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = b + an / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) <= std::numeric_limits<double>::epsilon())
      return std::exp(-x + a * std::log(x) - log_gamma(a)) * h;
  }
  throw std::runtime_error("reg_inc_gamma_p: continued fraction failed to converge");
}

}  // namespace detail

// Lower regularized incomplete gamma P(a, x) = gamma(a, x) / Gamma(a).
// Series for x < a+1, continued fraction otherwise.
inline double reg_inc_gamma_p(double a, double x) {
  if (!(a > 0.0)) throw std::domain_error("reg_inc_gamma_p: a must be positive");
  if (!(x >= 0.0)) throw std::domain_error("reg_inc_gamma_p: x must be nonnegative");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return detail::gamma_p_series(a, x);
  return 1.0 - detail::gamma_q_contfrac(a, x);
}

// Chi density 2^{1-nu/2} x^{nu-1} e^{-x^2/2} / Gamma(nu/2), in log space.
inline double chi_pdf(const ChiParams& p, double x) {
  if (!(x >= 0.0)) throw std::domain_error("chi_pdf: x must be nonnegative");
  if (x == 0.0) {
    if (p.nu > 1.0) return 0.0;
    if (p.nu == 1.0) return std::sqrt(2.0 / std::numbers::pi);
    return std::numeric_limits<double>::infinity();
  }
  return std::exp((1.0 - 0.5 * p.nu) * std::numbers::ln2 +
                  (p.nu - 1.0) * std::log(x) - 0.5 * x * x -
                  log_gamma(0.5 * p.nu));
}

inline double chi_cdf(const ChiParams& p, double x) {
  if (!(x >= 0.0)) throw std::domain_error("chi_cdf: x must be nonnegative");
  return reg_inc_gamma_p(0.5 * p.nu, 0.5 * x * x);
}

// Chi-square density x^{nu/2-1} e^{-x/2} / (2^{nu/2} Gamma(nu/2)).
inline double chi2_pdf(const ChiSquareParams& p, double x) {
  if (!(x >= 0.0)) throw std::domain_error("chi2_pdf: x must be nonnegative");
  if (x == 0.0) {
    if (p.nu > 2.0) return 0.0;
    if (p.nu == 2.0) return 0.5;
    return std::numeric_limits<double>::infinity();
  }
  return std::exp((0.5 * p.nu - 1.0) * std::log(x) - 0.5 * x -
                  0.5 * p.nu * std::numbers::ln2 - log_gamma(0.5 * p.nu));
}

inline double chi2_cdf(const ChiSquareParams& p, double x) {
  if (!(x >= 0.0)) throw std::domain_error("chi2_cdf: x must be nonnegative");
  return reg_inc_gamma_p(0.5 * p.nu, 0.5 * x);
}

inline double normal_pdf(const NormalParams& p, double x) {
  const double z = x - p.mu;
  return std::exp(-0.5 * z * z / p.sigma2) /
         std::sqrt(2.0 * std::numbers::pi * p.sigma2);
}

// Phi((x - mu) / sigma) through erfc, so both tails keep full precision.
inline double normal_cdf(const NormalParams& p, double x) {
  return 0.5 * std::erfc((p.mu - x) / std::sqrt(2.0 * p.sigma2));
}

// Large-nu normal surrogate for the chi distribution: N(sqrt(nu-1), 1/2).
// The mean is the chi mode, which only exists for nu > 1.
inline NormalParams chi_normal_approx(const ChiParams& p) {
  if (!(p.nu > 1.0))
    throw std::domain_error("chi_normal_approx: requires nu > 1");
  return NormalParams(std::sqrt(p.nu - 1.0), 0.5);
}

// Large-nu normal surrogate for the chi-square distribution: N(nu, 2 nu).
inline NormalParams chi2_normal_approx(const ChiSquareParams& p) {
  return NormalParams(p.nu, 2.0 * p.nu);
}

}  // namespace aretrim
