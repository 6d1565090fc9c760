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
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "aretrim/core.hpp"
#include "aretrim/io.hpp"
#include "aretrim/special.hpp"

namespace aretrim {

// Dispersion degree of a point against one cluster. Euclidean is the plain
// distance; Mahalanobis is the squared quadratic form. The two deliberately
// live on different scales: each feeds its own distribution model
// (chi for distances, chi-square for quadratic forms).
inline double dispersion_point(const Vec& x, const DiagGaussian& cluster,
                               Metric metric) {
  if (x.size() != cluster.mean.size())
    throw std::invalid_argument("dispersion_point: dimension mismatch");
  double acc = 0.0;
  if (metric == Metric::kEuclidean) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - cluster.mean[i];
      acc += d * d;
    }
    return std::sqrt(acc);
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - cluster.mean[i];
    acc += d * d / cluster.var[i];
  }
  return acc;
}

// Index of the component with maximal (unweighted) density; ties go to the
// lowest index. Mixture weights intentionally do not participate.
inline int assign_class(const Vec& x, const Gmm& model) {
  int best = 0;
  double best_ll = log_density(model.components[0], x);
  for (int k = 1; k < model.num_components(); ++k) {
    const double ll = log_density(model.components[k], x);
    if (ll > best_ll) {
      best_ll = ll;
      best = k;
    }
  }
  return best;
}

// Per-sample dispersion degree against the sample's own best class.
inline std::vector<double> dispersion_set(const Dataset& data, const Gmm& model,
                                          Metric metric,
                                          Assignment* classes = nullptr) {
  if (data.dim() != model.dim())
    throw std::invalid_argument("dispersion_set: dimension mismatch");
  std::vector<double> out(data.size());
  if (classes) classes->assign(data.size(), 0);
  for (std::size_t t = 0; t < data.size(); ++t) {
    const int j = assign_class(data[t], model);
    out[t] = dispersion_point(data[t], model.components[j], metric);
    if (classes) (*classes)[t] = j;
  }
  return out;
}

// Chi-square surrogate for a weighted sum of non-central chi-squares,
// matched through the cumulant ratios s1, s2.
struct ChiSquareApprox {
  double l = 0.0;      // degrees of freedom
  double delta = 0.0;  // non-centrality; zero on the central branch
  std::optional<double> a;  // only set on the non-central branch
};

inline ChiSquareApprox liu_chi2_approx(const std::vector<double>& lambdas,
                                       const std::vector<double>& hs,
                                       const std::vector<double>& deltas) {
  const std::size_t m = lambdas.size();
  if (m == 0 || hs.size() != m || deltas.size() != m)
    throw std::invalid_argument("liu_chi2_approx: need equal-length nonempty inputs");
  for (std::size_t i = 0; i < m; ++i) {
    if (!(hs[i] > 0.0))
      throw std::invalid_argument("liu_chi2_approx: degrees of freedom must be positive");
    if (!(deltas[i] >= 0.0))
      throw std::invalid_argument("liu_chi2_approx: non-centralities must be nonnegative");
  }
  double c[5] = {0, 0, 0, 0, 0};
  for (int k = 1; k <= 4; ++k) {
    double sh = 0.0, sd = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double lk = std::pow(lambdas[i], k);
      sh += lk * hs[i];
      sd += lk * deltas[i];
    }
    c[k] = sh + k * sd;
  }
  if (c[2] == 0.0 || c[3] == 0.0)
    throw std::runtime_error("liu_chi2_approx: degenerate cumulants (c2 or c3 is zero)");
  const double s1 = c[3] / std::pow(c[2], 1.5);
  const double s2 = c[4] / (c[2] * c[2]);

  ChiSquareApprox out;
  if (s1 * s1 <= s2) {
    out.l = c[2] * c[2] * c[2] / (c[3] * c[3]);
    out.delta = 0.0;
  } else {
    const double a = 1.0 / (s1 - std::sqrt(s1 * s1 - s2));
    out.delta = s1 * a * a * a - a * a;
    out.l = a * a - 2.0 * out.delta;
    out.a = a;
  }
  if (!(out.l > 0.0) || !(out.delta >= 0.0) || !std::isfinite(out.l) ||
      !std::isfinite(out.delta))
    throw std::runtime_error("liu_chi2_approx: numerically degenerate parameters");
  return out;
}

// Degrees of freedom of the chi model for Euclidean dispersion degrees:
// per cluster the Satterthwaite-style ratio (sum var^2)^3 / (sum var^3)^2,
// summed over clusters. Variances enter squared and cubed because the
// distance involves sigma^4 and sigma^6.
inline double euclidean_dof(const Gmm& model) {
  double nu = 0.0;
  for (const auto& comp : model.components) {
    double s4 = 0.0, s6 = 0.0;
    for (double v : comp.var) {
      s4 += v * v;
      s6 += v * v * v;
    }
    nu += (s4 * s4 * s4) / (s6 * s6);
  }
  return nu;
}

// Degrees of freedom of the chi-square model for Mahalanobis dispersion
// degrees: dimension times component count.
inline double mahalanobis_dof(const Gmm& model) {
  return static_cast<double>(model.dim()) *
         static_cast<double>(model.num_components());
}

// Exact dispersion-degree distribution for a model plus its large-nu normal
// surrogate: chi(nu) for Euclidean, chi-square(dK) for Mahalanobis.
struct TheoreticalModel {
  Metric metric;
  double nu;
  NormalParams normal;

  double cdf(double y) const {
    return metric == Metric::kEuclidean ? chi_cdf(ChiParams(nu), y)
                                        : chi2_cdf(ChiSquareParams(nu), y);
  }
  double pdf(double y) const {
    return metric == Metric::kEuclidean ? chi_pdf(ChiParams(nu), y)
                                        : chi2_pdf(ChiSquareParams(nu), y);
  }
  double approx_cdf(double y) const { return normal_cdf(normal, y); }
};

inline TheoreticalModel theoretical_model(const Gmm& model, Metric metric) {
  if (metric == Metric::kEuclidean) {
    const double nu = euclidean_dof(model);
    return TheoreticalModel{metric, nu, chi_normal_approx(ChiParams(nu))};
  }
  const double nu = mahalanobis_dof(model);
  return TheoreticalModel{metric, nu, chi2_normal_approx(ChiSquareParams(nu))};
}

// Normal model fitted to observed dispersion degrees: sample mean and the
// (T-1)-denominator standard deviation.
struct DispersionModel {
  Metric metric;
  double mu_hat = 0.0;
  double sigma_hat = 0.0;
  std::size_t n_fit = 0;
};

inline DispersionModel fit_empirical(const std::vector<double>& values,
                                     Metric metric) {
  if (values.size() < 2)
    throw std::invalid_argument("fit_empirical: need at least two values");
  double mu = 0.0;
  for (double v : values) mu += v;
  mu /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mu) * (v - mu);
  const double sigma = std::sqrt(ss / static_cast<double>(values.size() - 1));
  if (!(sigma > 0.0))
    throw std::runtime_error("fit_empirical: degenerate dispersion sample");
  return DispersionModel{metric, mu, sigma, values.size()};
}

// A sample is an outlier when the cumulative probability of its dispersion
// degree under the fitted model exceeds tau.
inline bool is_outlier(double y, const DispersionModel& m, double tau) {
  return normal_cdf(NormalParams(m.mu_hat, m.sigma_hat * m.sigma_hat), y) > tau;
}

// Retained mask (1 = keep) for a dataset against a model. Fits the empirical
// normal on the full dispersion set each call, so earlier trims never bias
// the fit and previously trimmed points may return.
inline Mask trim_mask(const Dataset& data, const Gmm& model,
                      const TrimPolicy& policy,
                      DispersionModel* fitted = nullptr) {
  check_policy(policy);
  if (policy.tau == 1.0) {
    // cdf values never exceed 1, so nothing can be trimmed; skip the fit to
    // keep the no-trim path byte-identical to untrimmed training.
    if (fitted) *fitted = DispersionModel{};
    return Mask(data.size(), 1);
  }
  const std::vector<double> ys = dispersion_set(data, model, policy.metric);
  const DispersionModel m = fit_empirical(ys, policy.metric);
  if (fitted) *fitted = m;
  Mask mask(data.size(), 1);
  std::size_t kept = 0;
  for (std::size_t t = 0; t < data.size(); ++t) {
    mask[t] = is_outlier(ys[t], m, policy.tau) ? 0 : 1;
    kept += mask[t];
  }
  if (kept == 0) throw std::runtime_error("trim threshold removed entire dataset");
  return mask;
}

struct DispersionRecord {
  std::size_t sample_index;
  int cluster_index;
  double dispersion;
  double cdf_empirical;
  double cdf_theoretical;
  bool outlier;
};

inline std::vector<DispersionRecord> dispersion_records(
    const Dataset& data, const Gmm& model, const TrimPolicy& policy,
    DispersionModel* fitted_out = nullptr, TheoreticalModel* theo_out = nullptr) {
  check_policy(policy);
  Assignment classes;
  const std::vector<double> ys =
      dispersion_set(data, model, policy.metric, &classes);
  const DispersionModel m = fit_empirical(ys, policy.metric);
  const TheoreticalModel theo = theoretical_model(model, policy.metric);
  if (fitted_out) *fitted_out = m;
  if (theo_out) *theo_out = theo;
  std::vector<DispersionRecord> recs(data.size());
  for (std::size_t t = 0; t < data.size(); ++t) {
    recs[t] = DispersionRecord{
        t,
        classes[t],
        ys[t],
        normal_cdf(NormalParams(m.mu_hat, m.sigma_hat * m.sigma_hat), ys[t]),
        theo.cdf(ys[t]),
        policy.tau < 1.0 && is_outlier(ys[t], m, policy.tau)};
  }
  return recs;
}

// CSV consumed by plotting scripts; fitted and theoretical parameters go in
// a leading comment.
inline void export_dispersion(const std::filesystem::path& path,
                              const std::vector<DispersionRecord>& records,
                              const DispersionModel& fitted,
                              const TheoreticalModel& theo) {
  std::string out;
  out += "# metric=" + metric_name(fitted.metric) +
         " nu_theoretical=" + detail::format_double(theo.nu) +
         " mu_hat=" + detail::format_double(fitted.mu_hat) +
         " sigma_hat=" + detail::format_double(fitted.sigma_hat) + "\n";
  out += "sample_index,cluster_index,dispersion,cdf_empirical,cdf_theoretical,is_outlier\n";
  for (const auto& r : records) {
    out += std::to_string(r.sample_index) + ',' + std::to_string(r.cluster_index) +
           ',' + detail::format_double(r.dispersion) + ',' +
           detail::format_double(r.cdf_empirical) + ',' +
           detail::format_double(r.cdf_theoretical) + ',' +
           (r.outlier ? '1' : '0') + '\n';
  }
  atomic_write(path, out);
}

}  // namespace aretrim
