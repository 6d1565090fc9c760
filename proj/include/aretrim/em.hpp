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
#include <string>
#include <vector>

#include "aretrim/core.hpp"
#include "aretrim/kmeans.hpp"

namespace aretrim {

struct EmConfig {
  int max_iters = 50;
  double ll_tol = 1e-5;  // relative log-likelihood improvement threshold
  double variance_floor_factor = 0.01;
  double min_weight = 0.05;
};

struct EmTraceRow {
  int iteration;
  double log_likelihood;
  int num_floored_variances;
  int num_floored_weights;
};

struct EmResult {
  Gmm model;
  std::vector<EmTraceRow> trace;
};

// Total weighted log-likelihood of a dataset under a mixture, log-sum-exp
// per sample.
inline double gmm_log_likelihood(const Dataset& data, const Gmm& model) {
  if (data.dim() != model.dim())
    throw std::invalid_argument("gmm_log_likelihood: dimension mismatch");
  const int k = model.num_components();
  double total = 0.0;
  std::vector<double> lw(k);
  for (int c = 0; c < k; ++c)
    lw[c] = model.weights[c] > 0.0 ? std::log(model.weights[c])
                                   : -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < data.size(); ++t) {
    double mx = -std::numeric_limits<double>::infinity();
    std::vector<double> l(k);
    for (int c = 0; c < k; ++c) {
      l[c] = lw[c] + log_density(model.components[c], data[t]);
      if (l[c] > mx) mx = l[c];
    }
    double s = 0.0;
    for (int c = 0; c < k; ++c) s += std::exp(l[c] - mx);
    total += mx + std::log(s);
  }
  return total;
}

// Posterior component probabilities per sample plus the log-likelihood.
inline double em_responsibilities(const Dataset& data, const Gmm& model,
                                  std::vector<Vec>& resp) {
  const int k = model.num_components();
  resp.assign(data.size(), Vec(k, 0.0));
  std::vector<double> lw(k);
  for (int c = 0; c < k; ++c)
    lw[c] = model.weights[c] > 0.0 ? std::log(model.weights[c])
                                   : -std::numeric_limits<double>::infinity();
  double total = 0.0;
  std::vector<double> l(k);
  for (std::size_t t = 0; t < data.size(); ++t) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      l[c] = lw[c] + log_density(model.components[c], data[t]);
      if (l[c] > mx) mx = l[c];
    }
    double s = 0.0;
    for (int c = 0; c < k; ++c) s += std::exp(l[c] - mx);
    const double lse = mx + std::log(s);
    for (int c = 0; c < k; ++c) resp[t][c] = std::exp(l[c] - lse);
    total += lse;
  }
  return total;
}

// Initial mixture from a clustering: weights are retained-member fractions,
// means the centroids, variances the per-dimension sample variances of each
// cluster's retained members, floored.
inline Gmm gmm_from_clustering(const Dataset& data, const Clustering& c,
                               double variance_floor_factor = 0.01) {
  const int k = static_cast<int>(c.centroids.size());
  const int d = data.dim();
  std::vector<std::size_t> count(k, 0);
  std::size_t kept = 0;
  for (std::size_t t = 0; t < data.size(); ++t)
    if (c.retained[t]) {
      ++count[c.labels[t]];
      ++kept;
    }
  for (int j = 0; j < k; ++j)
    if (count[j] < 2)
      throw std::invalid_argument(
          "cluster " + std::to_string(j) +
          " has fewer than 2 retained members; re-cluster (different seed or "
          "smaller k) before building a model");

  Vec floor_vec = global_variance(data);
  for (double& f : floor_vec) f = std::max(variance_floor_factor * f, 1e-12);

  std::vector<Vec> mean(k, Vec(d, 0.0)), var(k, Vec(d, 0.0));
  for (std::size_t t = 0; t < data.size(); ++t)
    if (c.retained[t])
      for (int i = 0; i < d; ++i) mean[c.labels[t]][i] += data[t][i];
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < d; ++i) mean[j][i] /= static_cast<double>(count[j]);
  for (std::size_t t = 0; t < data.size(); ++t)
    if (c.retained[t])
      for (int i = 0; i < d; ++i) {
        const double dv = data[t][i] - mean[c.labels[t]][i];
        var[c.labels[t]][i] += dv * dv;
      }

  Gmm model;
  for (int j = 0; j < k; ++j) {
    model.weights.push_back(static_cast<double>(count[j]) /
                            static_cast<double>(kept));
    Vec v(d);
    for (int i = 0; i < d; ++i) {
      v[i] = var[j][i] / static_cast<double>(count[j] - 1);
      if (v[i] < floor_vec[i]) v[i] = floor_vec[i];
    }
    model.components.push_back(DiagGaussian{c.centroids[j], std::move(v)});
  }
  return model;
}

namespace detail {

// Clamp weights below the floor and renormalize the rest; repeats until no
// new weight falls below. Returns how many ended up clamped.
inline int floor_weights(std::vector<double>& w, double min_weight) {
  if (min_weight <= 0.0) return 0;
  const int k = static_cast<int>(w.size());
  std::vector<bool> fixed(k, false);
  for (;;) {
    double fixed_mass = 0.0, free_mass = 0.0;
    for (int c = 0; c < k; ++c)
      (fixed[c] ? fixed_mass : free_mass) += fixed[c] ? min_weight : w[c];
    const double target = 1.0 - fixed_mass;
    bool changed = false;
    for (int c = 0; c < k; ++c) {
      if (fixed[c]) continue;
      w[c] *= target / free_mass;
      if (w[c] < min_weight) {
        fixed[c] = true;
        changed = true;
      }
    }
    if (!changed) break;
  }
  int n_fixed = 0;
  for (int c = 0; c < k; ++c)
    if (fixed[c]) {
      w[c] = min_weight;
      ++n_fixed;
    }
  return n_fixed;
}

}  // namespace detail

// Maximum-likelihood EM for a diagonal-covariance mixture. After every
// M-step, variances are floored at variance_floor_factor times the global
// per-dimension data variance and weights at min_weight (renormalized).
// Stops when the relative log-likelihood improvement drops below ll_tol.
inline EmResult em_fit(const Dataset& data, const Gmm& init, const EmConfig& cfg) {
  check_gmm(init, 1e-9);
  if (data.dim() != init.dim())
    throw std::invalid_argument("em_fit: dimension mismatch");
  if (data.size() < static_cast<std::size_t>(init.num_components()))
    throw std::invalid_argument("em_fit: fewer samples than components");
  if (cfg.max_iters < 1) throw std::invalid_argument("em_fit: max_iters must be positive");
  if (!(cfg.min_weight >= 0.0) ||
      cfg.min_weight * init.num_components() >= 1.0)
    throw std::invalid_argument("em_fit: min_weight * K must be below 1");

  const int k = init.num_components();
  const int d = data.dim();
  const std::size_t n = data.size();

  Vec floor_vec = global_variance(data);
  for (double& f : floor_vec) f *= cfg.variance_floor_factor;

  Gmm model = init;
  EmResult result;
  double prev_ll = -std::numeric_limits<double>::infinity();
  std::vector<Vec> resp;

  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    const double ll = em_responsibilities(data, model, resp);
    if (!std::isfinite(ll))
      throw std::runtime_error("em_fit: non-finite log-likelihood at iteration " +
                               std::to_string(iter));
    if (iter > 1 &&
        std::abs(ll - prev_ll) <= cfg.ll_tol * std::abs(prev_ll)) {
      result.trace.push_back({iter, ll, 0, 0});
      break;
    }
    prev_ll = ll;

    std::vector<double> nk(k, 0.0);
    std::vector<Vec> mean(k, Vec(d, 0.0));
    for (std::size_t t = 0; t < n; ++t)
      for (int c = 0; c < k; ++c) {
        nk[c] += resp[t][c];
        for (int i = 0; i < d; ++i) mean[c][i] += resp[t][c] * data[t][i];
      }
    for (int c = 0; c < k; ++c)
      if (nk[c] > 0.0)
        for (int i = 0; i < d; ++i) mean[c][i] /= nk[c];
      else
        mean[c] = model.components[c].mean;  // starved component, keep as-is

    std::vector<Vec> var(k, Vec(d, 0.0));
    for (std::size_t t = 0; t < n; ++t)
      for (int c = 0; c < k; ++c)
        for (int i = 0; i < d; ++i) {
          const double dv = data[t][i] - mean[c][i];
          var[c][i] += resp[t][c] * dv * dv;
        }
    int floored_vars = 0;
    for (int c = 0; c < k; ++c)
      for (int i = 0; i < d; ++i) {
        var[c][i] = nk[c] > 0.0 ? var[c][i] / nk[c] : model.components[c].var[i];
        if (var[c][i] < floor_vec[i]) {
          var[c][i] = floor_vec[i];
          ++floored_vars;
        }
        if (var[c][i] <= 0.0)
          throw std::runtime_error(
              "em_fit: collapsed variance at iteration " + std::to_string(iter) +
              " (raise variance_floor_factor)");
      }

    for (int c = 0; c < k; ++c) {
      model.weights[c] = nk[c] / static_cast<double>(n);
      model.components[c].mean = std::move(mean[c]);
      model.components[c].var = std::move(var[c]);
    }
    const int floored_weights = detail::floor_weights(model.weights, cfg.min_weight);
    result.trace.push_back({iter, ll, floored_vars, floored_weights});
  }

  result.model = std::move(model);
  return result;
}

// Per-iteration trace as CSV.
inline std::string ll_trace_csv(const std::vector<EmTraceRow>& trace) {
  std::string out = "iteration,log_likelihood,num_floored_variances,num_floored_weights\n";
  for (const auto& row : trace) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", row.log_likelihood);
    out += std::to_string(row.iteration) + ',' + buf + ',' +
           std::to_string(row.num_floored_variances) + ',' +
           std::to_string(row.num_floored_weights) + '\n';
  }
  return out;
}

}  // namespace aretrim
