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
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace aretrim {

using Vec = std::vector<double>;

// Retained/selected flags, one per sample. 1 = kept, 0 = dropped.
using Mask = std::vector<std::uint8_t>;

// Cluster index per sample, 0-based.
using Assignment = std::vector<int>;

// Explicit seed for every randomized operation. Same seed + same inputs
// gives bit-identical outputs; there is no global RNG anywhere.
struct Seed {
  std::uint64_t value = 0;
};

enum class Metric { kEuclidean, kMahalanobis };

inline std::string metric_name(Metric m) {
  return m == Metric::kEuclidean ? "euclidean" : "mahalanobis";
}

inline Metric metric_from_name(const std::string& s) {
  if (s == "euclidean") return Metric::kEuclidean;
  if (s == "mahalanobis") return Metric::kMahalanobis;
  throw std::invalid_argument("unknown metric: " + s);
}

// Outlier decision rule: a sample is trimmed when the cumulative
// probability of its dispersion degree exceeds tau. tau = 1.0 disables
// trimming entirely.
struct TrimPolicy {
  Metric metric = Metric::kEuclidean;
  double tau = 0.96;
};

inline void check_policy(const TrimPolicy& p) {
  if (!(p.tau > 0.0 && p.tau <= 1.0))
    throw std::invalid_argument("trim threshold tau must lie in (0, 1]");
}

// T samples of identical dimension d, all entries finite.
class Dataset {
 public:
  Dataset() = default;

  explicit Dataset(std::vector<Vec> samples) : samples_(std::move(samples)) {
    if (samples_.empty()) throw std::invalid_argument("dataset is empty");
    dim_ = static_cast<int>(samples_[0].size());
    if (dim_ < 1) throw std::invalid_argument("dataset has zero-width rows");
    for (std::size_t t = 0; t < samples_.size(); ++t) {
      if (static_cast<int>(samples_[t].size()) != dim_)
        throw std::invalid_argument("dataset row " + std::to_string(t) +
                                    " has inconsistent dimension");
      for (double v : samples_[t])
        if (!std::isfinite(v))
          throw std::invalid_argument("dataset row " + std::to_string(t) +
                                      " contains a non-finite value");
    }
  }

  std::size_t size() const { return samples_.size(); }
  int dim() const { return dim_; }
  const Vec& operator[](std::size_t t) const { return samples_[t]; }
  const std::vector<Vec>& samples() const { return samples_; }

 private:
  std::vector<Vec> samples_;
  int dim_ = 0;
};

// One mixture component with diagonal covariance. Variances are stored
// directly (not their inverses) so flooring and serialization stay simple.
struct DiagGaussian {
  Vec mean;
  Vec var;

  int dim() const { return static_cast<int>(mean.size()); }
};

inline void check_gaussian(const DiagGaussian& g) {
  if (g.mean.empty() || g.mean.size() != g.var.size())
    throw std::invalid_argument("gaussian mean/var size mismatch");
  for (double v : g.var)
    if (!(v > 0.0) || !std::isfinite(v))
      throw std::invalid_argument("gaussian variance must be positive and finite");
}

// Weighted set of diagonal Gaussians.
struct Gmm {
  std::vector<double> weights;
  std::vector<DiagGaussian> components;

  int num_components() const { return static_cast<int>(components.size()); }
  int dim() const { return components.empty() ? 0 : components[0].dim(); }
};

inline void check_gmm(const Gmm& g, double weight_sum_tol = 1e-12) {
  if (g.components.empty()) throw std::invalid_argument("model has no components");
  if (g.weights.size() != g.components.size())
    throw std::invalid_argument("model weight/component count mismatch");
  const int d = g.components[0].dim();
  double sum = 0.0;
  for (double w : g.weights) {
    if (!(w >= 0.0) || !std::isfinite(w))
      throw std::invalid_argument("model weight must be nonnegative and finite");
    sum += w;
  }
  if (std::abs(sum - 1.0) > weight_sum_tol)
    throw std::invalid_argument("model weights must sum to 1 (got " +
                                std::to_string(sum) + ")");
  for (const auto& c : g.components) {
    check_gaussian(c);
    if (c.dim() != d)
      throw std::invalid_argument("model components disagree on dimension");
  }
}

// Log of the diagonal-covariance normal density
//   -1/2 * sum_i [ (x_i - mu_i)^2 / var_i + ln(2 pi var_i) ].
// Densities are handled in log space throughout; linear-space products
// underflow already around d = 20.
inline double log_density(const DiagGaussian& g, const Vec& x) {
  if (x.size() != g.mean.size())
    throw std::invalid_argument("log_density: dimension mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - g.mean[i];
    acc += d * d / g.var[i] + std::log(2.0 * std::numbers::pi * g.var[i]);
  }
  return -0.5 * acc;
}

inline double squared_distance(const Vec& a, const Vec& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

// Per-dimension variance of the full dataset (1/T denominator). Used as the
// reference quantity for variance flooring.
inline Vec global_variance(const Dataset& data) {
  const std::size_t n = data.size();
  const int d = data.dim();
  Vec mean(d, 0.0), var(d, 0.0);
  for (std::size_t t = 0; t < n; ++t)
    for (int i = 0; i < d; ++i) mean[i] += data[t][i];
  for (int i = 0; i < d; ++i) mean[i] /= static_cast<double>(n);
  for (std::size_t t = 0; t < n; ++t)
    for (int i = 0; i < d; ++i) {
      const double dv = data[t][i] - mean[i];
      var[i] += dv * dv;
    }
  for (int i = 0; i < d; ++i) var[i] /= static_cast<double>(n);
  return var;
}

}  // namespace aretrim
