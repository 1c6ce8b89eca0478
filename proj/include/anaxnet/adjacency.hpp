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

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "anaxnet/error.hpp"
#include "anaxnet/labels.hpp"
#include "anaxnet/matrix.hpp"

namespace anaxnet {

/**
 * Region-pair label co-occurrence counts over a set of images.
 *
 * For regions (i, j) and label m, `intersection` counts images where both
 * regions carry m and `union_count` counts images where at least one does.
 * Counts are additive, so shards can be accumulated separately and merged.
 */
struct CooccurrenceStats {
  std::size_t regions = 0;
  std::size_t labels = 0;
  std::uint64_t images = 0;
  std::vector<std::uint64_t> intersection;
  std::vector<std::uint64_t> union_count;

  CooccurrenceStats() = default;
  CooccurrenceStats(std::size_t k, std::size_t m)
      : regions(k), labels(m), intersection(k * k * m, 0), union_count(k * k * m, 0) {}

  std::size_t index(std::size_t i, std::size_t j, std::size_t m) const { return (i * regions + j) * labels + m; }
  std::uint64_t inter(std::size_t i, std::size_t j, std::size_t m) const { return intersection[index(i, j, m)]; }
  std::uint64_t uni(std::size_t i, std::size_t j, std::size_t m) const { return union_count[index(i, j, m)]; }

  void add(const LabelTensor& y) {
    if (y.regions() != regions || y.labels() != labels) {
      throw ShapeError("co-occurrence: label tensor " + y.shape() + " does not match " +
                       std::to_string(regions) + "x" + std::to_string(labels));
    }
    for (std::size_t i = 0; i < regions; ++i) {
      for (std::size_t j = 0; j < regions; ++j) {
        for (std::size_t m = 0; m < labels; ++m) {
          const bool a = y.at(i, m);
          const bool b = y.at(j, m);
          const auto idx = index(i, j, m);
          intersection[idx] += (a && b) ? 1 : 0;
          union_count[idx] += (a || b) ? 1 : 0;
        }
      }
    }
    ++images;
  }

  void merge(const CooccurrenceStats& other) {
    if (other.regions != regions || other.labels != labels) throw ShapeError("co-occurrence: cannot merge stats of different shape");
    for (std::size_t i = 0; i < intersection.size(); ++i) {
      intersection[i] += other.intersection[i];
      union_count[i] += other.union_count[i];
    }
    images += other.images;
  }
};

/// Counts over the whole label sequence. The shape comes from the first tensor unless given.
inline CooccurrenceStats accumulate_stats(std::span<const LabelTensor> labels, std::size_t regions = 0,
                                          std::size_t label_count = 0) {
  if (!labels.empty() && regions == 0 && label_count == 0) {
    regions = labels.front().regions();
    label_count = labels.front().labels();
  }
  CooccurrenceStats stats(regions, label_count);
  for (const auto& y : labels) stats.add(y);
  return stats;
}

/**
 * Mean over labels of the per-label Jaccard index between the image sets of
 * each region pair. A label that neither region ever carries contributes 0.
 */
inline Matrix jaccard_matrix(const CooccurrenceStats& stats) {
  const std::size_t k = stats.regions;
  Matrix raw(k, k);
  if (stats.labels == 0) return raw;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      double total = 0.0;
      for (std::size_t m = 0; m < stats.labels; ++m) {
        const auto u = stats.uni(i, j, m);
        if (u == 0) continue;
        total += static_cast<double>(stats.inter(i, j, m)) / static_cast<double>(u);
      }
      raw(i, j) = total / static_cast<double>(stats.labels);
    }
  }
  return raw;
}

/// 1 where raw >= tau (boundary inclusive), else 0.
inline Matrix threshold(const Matrix& raw, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in [0, 1], got " + std::to_string(tau));
  Matrix out(raw.rows(), raw.cols());
  for (std::size_t i = 0; i < raw.size(); ++i) out.data()[i] = raw.data()[i] >= tau ? 1.0 : 0.0;
  return out;
}

/**
 * Symmetric propagation weights D^{-1/2} (B + I) D^{-1/2}, with D the degree
 * matrix of B + I. Existing diagonal entries of B are replaced by the self-loop
 * so every node has self-weight before scaling.
 */
inline Matrix normalize(const Matrix& binary) {
  if (binary.rows() != binary.cols()) throw ShapeError("normalize: adjacency must be square, got " + binary.shape());
  const std::size_t k = binary.rows();
  Matrix with_loops = binary;
  for (std::size_t i = 0; i < k; ++i) with_loops(i, i) = 1.0;
  std::vector<double> inv_sqrt_degree(k);
  for (std::size_t i = 0; i < k; ++i) {
    double degree = 0.0;
    for (double v : with_loops.row(i)) degree += v;
    inv_sqrt_degree[i] = 1.0 / std::sqrt(degree);
  }
  Matrix out(k, k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) out(i, j) = inv_sqrt_degree[i] * with_loops(i, j) * inv_sqrt_degree[j];
  return out;
}

struct AdjacencyMatrix {
  Matrix raw;
  Matrix binary;
  Matrix normalized;
  double tau = 0.5;

  std::size_t regions() const { return raw.rows(); }

  friend bool operator==(const AdjacencyMatrix&, const AdjacencyMatrix&) = default;
};

inline AdjacencyMatrix build_adjacency(const CooccurrenceStats& stats, double tau = 0.5) {
  AdjacencyMatrix adj;
  adj.tau = tau;
  adj.raw = jaccard_matrix(stats);
  adj.binary = threshold(adj.raw, tau);
  adj.normalized = normalize(adj.binary);
  return adj;
}

inline AdjacencyMatrix build_adjacency(std::span<const LabelTensor> labels, double tau = 0.5) {
  return build_adjacency(accumulate_stats(labels), tau);
}

/// Off-diagonal edges (i < j) of a binary adjacency.
inline std::vector<std::pair<std::size_t, std::size_t>> edge_list(const Matrix& binary) {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i < binary.rows(); ++i)
    for (std::size_t j = i + 1; j < binary.cols(); ++j)
      if (binary(i, j) != 0.0) edges.emplace_back(i, j);
  return edges;
}

}  // namespace anaxnet
