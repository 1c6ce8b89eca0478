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

#include <algorithm>
#include <numeric>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "anaxnet/adjacency.hpp"
#include "anaxnet/error.hpp"
#include "anaxnet/random.hpp"
#include "oracles.hpp"

namespace anaxnet {
namespace {

std::vector<LabelTensor> random_labels(Rng& rng, std::size_t n, std::size_t k, std::size_t m, double p) {
  std::vector<LabelTensor> out;
  for (std::size_t i = 0; i < n; ++i) {
    LabelTensor y(k, m);
    for (std::size_t r = 0; r < k; ++r)
      for (std::size_t l = 0; l < m; ++l) y.set(r, l, rng.bernoulli(p));
    out.push_back(y);
  }
  return out;
}

TEST(Stats, EmptySequenceIsAllZero) {
  const auto s = accumulate_stats({}, 3, 2);
  EXPECT_EQ(s.images, 0u);
  for (auto v : s.intersection) EXPECT_EQ(v, 0u);
  for (auto v : s.union_count) EXPECT_EQ(v, 0u);
}

TEST(Stats, SingleImageSharedLabel) {
  const std::vector<LabelTensor> y{LabelTensor{{1}, {1}}};
  const auto s = accumulate_stats(y);
  EXPECT_EQ(s.inter(0, 1, 0), 1u);
  EXPECT_EQ(s.uni(0, 1, 0), 1u);
}

TEST(Stats, ThreeImages) {
  // region A positive in {1, 2}, region B positive in {2, 3}
  const std::vector<LabelTensor> y{LabelTensor{{1}, {0}}, LabelTensor{{1}, {1}}, LabelTensor{{0}, {1}}};
  const auto s = accumulate_stats(y);
  EXPECT_EQ(s.inter(0, 1, 0), 1u);
  EXPECT_EQ(s.uni(0, 1, 0), 3u);
  EXPECT_DOUBLE_EQ(jaccard_matrix(s)(0, 1), 1.0 / 3.0);
}

TEST(Stats, RejectsShapeMismatch) {
  CooccurrenceStats s(2, 1);
  EXPECT_THROW(s.add(LabelTensor(3, 1)), ShapeError);
}

TEST(Stats, MergeEqualsSinglePass) {
  Rng rng(4);
  const auto y = random_labels(rng, 30, 4, 3, 0.4);
  auto a = accumulate_stats(std::span(y).first(12), 4, 3);
  a.merge(accumulate_stats(std::span(y).subspan(12), 4, 3));
  const auto whole = accumulate_stats(y);
  EXPECT_EQ(a.intersection, whole.intersection);
  EXPECT_EQ(a.union_count, whole.union_count);
  EXPECT_EQ(a.images, whole.images);
}

TEST(Jaccard, SelfSimilarityIsOne) {
  const std::vector<LabelTensor> y{LabelTensor{{1, 0}, {0, 0}}, LabelTensor{{0, 1}, {1, 0}}};
  EXPECT_DOUBLE_EQ(jaccard_matrix(accumulate_stats(y))(0, 0), 1.0);
}

TEST(Jaccard, DisjointRegionsAreZero) {
  const std::vector<LabelTensor> y{LabelTensor{{1, 1}, {0, 0}}, LabelTensor{{0, 0}, {1, 1}}};
  EXPECT_DOUBLE_EQ(jaccard_matrix(accumulate_stats(y))(0, 1), 0.0);
}

TEST(Jaccard, MatchesSetOracle) {
  Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = rng.below(51), k = 1 + rng.below(6), m = 1 + rng.below(4);
    const auto y = random_labels(rng, n, k, m, rng.uniform(0.05, 0.8));
    EXPECT_EQ(jaccard_matrix(accumulate_stats(y, k, m)), oracle::set_jaccard(y, k, m)) << "trial " << trial;
  }
}

TEST(Jaccard, SymmetricAndImageOrderInvariant) {
  Rng rng(8);
  auto y = random_labels(rng, 40, 5, 3, 0.3);
  const Matrix j = jaccard_matrix(accumulate_stats(y));
  EXPECT_EQ(j, transpose(j));
  std::reverse(y.begin(), y.end());
  EXPECT_EQ(jaccard_matrix(accumulate_stats(y)), j);
}

TEST(Jaccard, RegionRelabelingPermutesMatrix) {
  Rng rng(9);
  const std::size_t k = 5, m = 2;
  const auto y = random_labels(rng, 25, k, m, 0.4);
  const auto perm = seeded_permutation(k, 1, 2);
  std::vector<LabelTensor> permuted;
  for (const auto& t : y) {
    LabelTensor p(k, m);
    for (std::size_t r = 0; r < k; ++r)
      for (std::size_t l = 0; l < m; ++l) p.set(r, l, t.at(perm[r], l));
    permuted.push_back(p);
  }
  const Matrix a = jaccard_matrix(accumulate_stats(y)), b = jaccard_matrix(accumulate_stats(permuted));
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) EXPECT_EQ(b(i, j), a(perm[i], perm[j]));
}

TEST(Threshold, BoundaryInclusive) {
  EXPECT_EQ(threshold(Matrix{{0.5}}, 0.5), (Matrix{{1}}));
  EXPECT_EQ(threshold(Matrix{{0.4999}}, 0.5), (Matrix{{0}}));
  EXPECT_EQ(threshold(Matrix{{0, 0.2}, {0.9, 1}}, 0.0), (Matrix{{1, 1}, {1, 1}}));
}

TEST(Threshold, RejectsOutOfRangeTau) {
  EXPECT_THROW(threshold(Matrix{{0.5}}, 1.1), ConfigError);
  EXPECT_THROW(threshold(Matrix{{0.5}}, -0.1), ConfigError);
}

TEST(Normalize, Examples) {
  EXPECT_EQ(normalize(Matrix(1, 1)), (Matrix{{1}}));
  const Matrix two = normalize(Matrix{{0, 1}, {1, 0}});
  for (double v : two.data()) EXPECT_NEAR(v, 0.5, 1e-15);
  EXPECT_EQ(normalize(Matrix(3, 3)), Matrix::identity(3));
}

TEST(Normalize, SymmetricWithSpectrumInUnitInterval) {
  Rng rng(10);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = 1 + rng.below(8);
    Matrix b(k, k);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = i + 1; j < k; ++j) b(i, j) = b(j, i) = rng.bernoulli(0.5) ? 1.0 : 0.0;
    const Matrix a = normalize(b);
    Eigen::MatrixXd e(k, k);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) {
        EXPECT_EQ(a(i, j), a(j, i));
        e(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = a(i, j);
      }
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(e).eigenvalues();
    EXPECT_LE(ev.maxCoeff(), 1.0 + 1e-12);
    EXPECT_GE(ev.minCoeff(), -1.0 - 1e-12);
    // the leading eigenvalue of a normalized adjacency with self-loops is exactly 1
    EXPECT_NEAR(ev.maxCoeff(), 1.0, 1e-12);
  }
}

TEST(BuildAdjacency, RecordsTauAndEdges) {
  const std::vector<LabelTensor> y{LabelTensor{{1}, {1}, {0}}, LabelTensor{{1}, {1}, {1}}};
  const auto adj = build_adjacency(y, 0.5);
  EXPECT_EQ(adj.tau, 0.5);
  const std::vector<std::pair<std::size_t, std::size_t>> expected{{0, 1}, {0, 2}, {1, 2}};
  EXPECT_EQ(edge_list(adj.binary), expected);
  EXPECT_EQ(edge_list(build_adjacency(y, 0.6).binary), (std::vector<std::pair<std::size_t, std::size_t>>{{0, 1}}));
}

}  // namespace
}  // namespace anaxnet
