/*
 * Copyright 2026 The AnaXNet Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// Synthetic region-feature datasets with a planted region graph G*.
//
// Labels. Ordinary labels are seeded independently per region and then
// spread to each G* neighbour with probability `propagation`, so regions
// joined in G* have strongly overlapping positive sets and the thresholded
// Jaccard adjacency recovers G*. Context-coded labels are drawn
// independently per region and never spread.
//
// Features. Every row starts as isotropic Gaussian noise. Each label m owns
// a unit direction u_m (orthonormal across labels). An ordinary label writes
// ±signal·u_m into the labelled region's own row (+ when positive, - when
// negative). A context-coded label writes ±context_signal·u_m into the rows
// of the region's G* neighbours only, never its own row. A per-region
// classifier therefore sees no information about context-coded labels,
// while a model that reads neighbour rows does.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "anaxnet/error.hpp"
#include "anaxnet/io.hpp"
#include "anaxnet/labels.hpp"
#include "anaxnet/matrix.hpp"
#include "anaxnet/random.hpp"

namespace anaxnet {

/// Pairs regions (0,1), (2,3), ...; an odd last region stays isolated.
inline Matrix paired_region_graph(std::size_t k) {
  Matrix g(k, k);
  for (std::size_t i = 0; i + 1 < k; i += 2) g(i, i + 1) = g(i + 1, i) = 1.0;
  return g;
}

/// The last min(2, M) labels.
inline std::vector<std::size_t> default_context_labels(std::size_t m) {
  std::vector<std::size_t> out;
  for (std::size_t i = m > 2 ? m - 2 : 0; i < m; ++i) out.push_back(i);
  return out;
}

struct SynthSpec {
  std::size_t regions = 6;
  std::size_t features = 32;
  std::size_t labels = 4;
  Matrix graph = paired_region_graph(6);
  std::vector<std::size_t> context_labels = {2, 3};
  std::uint64_t seed = 0;
  double noise_std = 1.0;
  double propagation = 0.8;
  double seed_rate = 0.2;
  double context_rate = 0.5;
  double signal = 2.0;
  double context_signal = 2.0;
  double presence_rate = 1.0;
  std::size_t train = 1400;
  std::size_t val = 200;
  std::size_t test = 400;

  /// Defaults for a given shape: paired graph, last two labels context-coded.
  static SynthSpec with_shape(std::size_t k, std::size_t d, std::size_t m) {
    SynthSpec s;
    s.regions = k;
    s.features = d;
    s.labels = m;
    s.graph = paired_region_graph(k);
    s.context_labels = default_context_labels(m);
    return s;
  }

  /// 70/10/20 split of `total` images.
  void set_images(std::size_t total) {
    train = total * 7 / 10;
    val = total / 10;
    test = total - train - val;
  }

  std::size_t images() const { return train + val + test; }

  bool is_context(std::size_t m) const {
    return std::find(context_labels.begin(), context_labels.end(), m) != context_labels.end();
  }

  std::vector<std::size_t> ordinary_labels() const {
    std::vector<std::size_t> out;
    for (std::size_t m = 0; m < labels; ++m)
      if (!is_context(m)) out.push_back(m);
    return out;
  }

  void validate() const {
    if (regions == 0 || features == 0 || labels == 0) throw ConfigError("synth: k, d and M must be positive");
    if (labels > features) throw ConfigError("synth: need M <= d for orthogonal label directions");
    if (graph.rows() != regions || graph.cols() != regions) throw ConfigError("synth: region graph must be k x k");
    for (std::size_t i = 0; i < regions; ++i) {
      if (graph(i, i) != 0.0) throw ConfigError("synth: region graph must have a zero diagonal");
      for (std::size_t j = 0; j < regions; ++j) {
        if (graph(i, j) != graph(j, i)) throw ConfigError("synth: region graph must be symmetric");
        if (graph(i, j) != 0.0 && graph(i, j) != 1.0) throw ConfigError("synth: region graph must be binary");
      }
    }
    for (auto m : context_labels)
      if (m >= labels) throw ConfigError("synth: context label " + std::to_string(m) + " out of range");
    auto prob = [](double p, const char* name) {
      if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(std::string("synth: ") + name + " must lie in [0, 1]");
    };
    prob(propagation, "propagation");
    prob(seed_rate, "seed rate");
    prob(context_rate, "context rate");
    prob(presence_rate, "presence rate");
    if (!(noise_std >= 0.0)) throw ConfigError("synth: noise stddev must be non-negative");
  }

  std::vector<std::vector<std::size_t>> neighbours() const {
    std::vector<std::vector<std::size_t>> out(regions);
    for (std::size_t i = 0; i < regions; ++i)
      for (std::size_t j = 0; j < regions; ++j)
        if (graph(i, j) != 0.0) out[i].push_back(j);
    return out;
  }
};

/// Probability that label m is positive, averaged over regions.
inline double expected_positive_rate(const SynthSpec& spec, std::size_t m) {
  if (spec.is_context(m)) return spec.context_rate;
  const auto nbrs = spec.neighbours();
  double total = 0.0;
  for (std::size_t r = 0; r < spec.regions; ++r) {
    double negative = 1.0 - spec.seed_rate;
    for (std::size_t j = 0; j < nbrs[r].size(); ++j) negative *= 1.0 - spec.seed_rate * spec.propagation;
    total += 1.0 - negative;
  }
  return total / static_cast<double>(spec.regions);
}

/// Orthonormal label directions (M x d) by Gram-Schmidt on Gaussian draws.
inline Matrix label_directions(std::size_t labels, std::size_t features, std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0));
  Matrix u(labels, features);
  for (std::size_t m = 0; m < labels; ++m) {
    for (;;) {
      auto row = u.row(m);
      for (double& v : row) v = rng.normal();
      for (std::size_t p = 0; p < m; ++p) {
        double dot = 0.0;
        for (std::size_t c = 0; c < features; ++c) dot += row[c] * u(p, c);
        for (std::size_t c = 0; c < features; ++c) row[c] -= dot * u(p, c);
      }
      double norm = 0.0;
      for (double v : row) norm += v * v;
      norm = std::sqrt(norm);
      if (norm < 1e-6) continue;
      for (double& v : row) v /= norm;
      break;
    }
  }
  return u;
}

inline Dataset generate_synthetic(const SynthSpec& spec) {
  spec.validate();
  const std::size_t k = spec.regions, d = spec.features, m_count = spec.labels;
  const auto nbrs = spec.neighbours();
  const Matrix directions = label_directions(m_count, d, spec.seed);

  Dataset ds;
  auto& man = ds.manifest;
  man.regions = k;
  man.features = d;
  man.labels = m_count;
  man.region_names = region_names_for(k);
  man.label_names = label_names_for(m_count);

  const std::size_t n = spec.images();
  for (std::size_t i = 0; i < n; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "img%06zu", i);
    man.image_ids.emplace_back(id);
    man.splits.push_back(i < spec.train ? Split::train : (i < spec.train + spec.val ? Split::val : Split::test));
  }

  ds.records.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(mix_seed(spec.seed, i + 1));
    ImageRecord rec;
    rec.id = man.image_ids[i];
    rec.labels = LabelTensor(k, m_count);

    for (std::size_t m = 0; m < m_count; ++m) {
      if (spec.is_context(m)) {
        for (std::size_t r = 0; r < k; ++r) rec.labels.set(r, m, rng.bernoulli(spec.context_rate));
        continue;
      }
      std::vector<bool> seeded(k);
      for (std::size_t r = 0; r < k; ++r) seeded[r] = rng.bernoulli(spec.seed_rate);
      for (std::size_t r = 0; r < k; ++r) {
        if (!seeded[r]) continue;
        rec.labels.set(r, m, true);
        for (auto j : nbrs[r])
          if (rng.bernoulli(spec.propagation)) rec.labels.set(j, m, true);
      }
    }

    rec.mask.resize(k);
    for (auto& b : rec.mask) b = rng.bernoulli(spec.presence_rate) ? 1 : 0;

    rec.features = Matrix(k, d);
    for (double& v : rec.features.data()) v = spec.noise_std * rng.normal();
    for (std::size_t m = 0; m < m_count; ++m) {
      const auto u = directions.row(m);
      for (std::size_t r = 0; r < k; ++r) {
        const double sign = rec.labels.at(r, m) ? 1.0 : -1.0;
        if (spec.is_context(m)) {
          for (auto j : nbrs[r]) {
            auto row = rec.features.row(j);
            for (std::size_t c = 0; c < d; ++c) row[c] += sign * spec.context_signal * u[c];
          }
        } else {
          auto row = rec.features.row(r);
          for (std::size_t c = 0; c < d; ++c) row[c] += sign * spec.signal * u[c];
        }
      }
    }
    // Stored as f32 on disk; rounding here keeps write/read bit-exact.
    for (double& v : rec.features.data()) v = static_cast<double>(static_cast<float>(v));
    ds.records.push_back(std::move(rec));
  }
  return ds;
}

}  // namespace anaxnet
