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

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "aretrim/core.hpp"
#include "aretrim/rng.hpp"

namespace aretrim {

enum class ContaminationMode { kUniformBox, kShiftedGaussian, kPointMass };

inline std::string contamination_mode_name(ContaminationMode m) {
  switch (m) {
    case ContaminationMode::kUniformBox: return "uniform_box";
    case ContaminationMode::kShiftedGaussian: return "shifted_gaussian";
    default: return "point_mass";
  }
}

inline ContaminationMode contamination_mode_from_name(const std::string& s) {
  if (s == "uniform_box") return ContaminationMode::kUniformBox;
  if (s == "shifted_gaussian") return ContaminationMode::kShiftedGaussian;
  if (s == "point_mass") return ContaminationMode::kPointMass;
  throw std::invalid_argument("unknown contamination mode: " + s);
}

// Outlier injection plan. scale is in multiples of the data's bounding
// radius (max distance of any sample to the data centroid).
struct ContaminationSpec {
  double rate = 0.0;
  ContaminationMode mode = ContaminationMode::kPointMass;
  double scale = 10.0;
};

inline void check_contamination(const ContaminationSpec& s) {
  if (!(s.rate >= 0.0 && s.rate < 1.0))
    throw std::invalid_argument("contamination rate must lie in [0, 1)");
  if (!(s.scale > 0.0))
    throw std::invalid_argument("contamination scale must be positive");
}

struct SampledData {
  Dataset data;
  Assignment labels;  // generating component per sample
};

// n i.i.d. draws: component by weight, then per-dimension normal.
inline SampledData sample_gmm(const Gmm& model, std::size_t n, Seed seed) {
  check_gmm(model, 1e-9);
  if (n < 1) throw std::invalid_argument("sample_gmm: n must be positive");
  Rng rng(seed);
  const int d = model.dim();
  std::vector<Vec> rows(n, Vec(d));
  Assignment labels(n);
  for (std::size_t t = 0; t < n; ++t) {
    const int c = rng.categorical(model.weights);
    labels[t] = c;
    const auto& comp = model.components[c];
    for (int i = 0; i < d; ++i)
      rows[t][i] = comp.mean[i] + std::sqrt(comp.var[i]) * rng.normal();
  }
  return SampledData{Dataset(std::move(rows)), std::move(labels)};
}

struct ContaminatedData {
  Dataset data;
  Mask outliers;  // 1 = injected outlier (ground truth)
};

namespace detail {

inline Vec data_centroid(const Dataset& data) {
  Vec c(data.dim(), 0.0);
  for (std::size_t t = 0; t < data.size(); ++t)
    for (int i = 0; i < data.dim(); ++i) c[i] += data[t][i];
  for (double& v : c) v /= static_cast<double>(data.size());
  return c;
}

inline double bounding_radius(const Dataset& data, const Vec& centroid) {
  double r2 = 0.0;
  for (std::size_t t = 0; t < data.size(); ++t)
    r2 = std::max(r2, squared_distance(data[t], centroid));
  return std::sqrt(r2);
}

inline Vec random_unit_vector(Rng& rng, int d) {
  Vec u(d);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (int i = 0; i < d; ++i) {
      u[i] = rng.normal();
      norm += u[i] * u[i];
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  for (double& v : u) v /= norm;
  return u;
}

}  // namespace detail

// Replaces ceil(rate * T) uniformly chosen samples with outliers. Ground
// truth comes back as a mask so trimming precision/recall stays measurable.
inline ContaminatedData contaminate(const Dataset& clean,
                                    const ContaminationSpec& spec, Seed seed) {
  check_contamination(spec);
  const std::size_t n = clean.size();
  const int d = clean.dim();
  const std::size_t m =
      static_cast<std::size_t>(std::ceil(spec.rate * static_cast<double>(n)));
  if (m >= n && m > 0)
    throw std::invalid_argument("contamination would replace every sample");
  Mask outliers(n, 0);
  if (m == 0) return ContaminatedData{clean, std::move(outliers)};

  Rng rng(seed);
  const Vec centroid = detail::data_centroid(clean);
  const double reach = spec.scale * detail::bounding_radius(clean, centroid);

  auto picks = rng.sample_without_replacement(n, m);
  std::sort(picks.begin(), picks.end());

  std::vector<Vec> rows = clean.samples();
  if (spec.mode == ContaminationMode::kPointMass) {
    const Vec dir = detail::random_unit_vector(rng, d);
    Vec point(d);
    for (int i = 0; i < d; ++i) point[i] = centroid[i] + reach * dir[i];
    for (auto t : picks) {
      rows[t] = point;
      outliers[t] = 1;
    }
  } else if (spec.mode == ContaminationMode::kShiftedGaussian) {
    const Vec dir = detail::random_unit_vector(rng, d);
    for (auto t : picks) {
      for (int i = 0; i < d; ++i) rows[t][i] += reach * dir[i];
      outliers[t] = 1;
    }
  } else {  // uniform box around the centroid
    for (auto t : picks) {
      for (int i = 0; i < d; ++i)
        rows[t][i] = centroid[i] + rng.uniform(-reach, reach);
      outliers[t] = 1;
    }
  }
  return ContaminatedData{Dataset(std::move(rows)), std::move(outliers)};
}

// Random well-formed mixture for synthetic benchmarks: means uniform in
// [-spread, spread]^d, variances uniform in [0.5, 1.5], weights normalized.
inline Gmm random_gmm(int dim, int k, Seed seed, double spread = 2.0) {
  if (dim < 1 || k < 1) throw std::invalid_argument("random_gmm: bad shape");
  Rng rng(seed);
  Gmm model;
  double wsum = 0.0;
  for (int c = 0; c < k; ++c) {
    model.weights.push_back(rng.uniform(0.5, 1.5));
    wsum += model.weights.back();
    DiagGaussian g;
    for (int i = 0; i < dim; ++i) {
      g.mean.push_back(rng.uniform(-spread, spread));
      g.var.push_back(rng.uniform(0.5, 1.5));
    }
    model.components.push_back(std::move(g));
  }
  for (double& w : model.weights) w /= wsum;
  // Nudge the sum to exactly 1 so strict readers accept serialized output.
  double sum = 0.0;
  for (double w : model.weights) sum += w;
  model.weights.back() += 1.0 - sum;
  return model;
}

}  // namespace aretrim
