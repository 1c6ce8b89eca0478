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

// Independent reference implementations used as test oracles. They share no
// code with the library beyond the input containers.

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "anaxnet/labels.hpp"
#include "anaxnet/matrix.hpp"

namespace anaxnet::oracle {

/// Jaccard adjacency by explicit image-set enumeration.
inline Matrix set_jaccard(const std::vector<LabelTensor>& images, std::size_t k, std::size_t m_count) {
  // sets[r][m] = indices of images where region r carries label m
  std::vector<std::vector<std::set<std::size_t>>> sets(k, std::vector<std::set<std::size_t>>(m_count));
  for (std::size_t n = 0; n < images.size(); ++n)
    for (std::size_t r = 0; r < k; ++r)
      for (std::size_t m = 0; m < m_count; ++m)
        if (images[n].at(r, m)) sets[r][m].insert(n);

  Matrix out(k, k);
  if (m_count == 0) return out;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      double total = 0.0;
      for (std::size_t m = 0; m < m_count; ++m) {
        std::set<std::size_t> both, either = sets[i][m];
        for (auto n : sets[j][m]) {
          either.insert(n);
          if (sets[i][m].count(n)) both.insert(n);
        }
        if (!either.empty()) total += static_cast<double>(both.size()) / static_cast<double>(either.size());
      }
      out(i, j) = total / static_cast<double>(m_count);
    }
  }
  return out;
}

/// Fraction of positive-negative pairs ranked correctly, ties counted as half.
inline std::optional<double> pair_count_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  double good = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!labels[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j]) continue;
      ++pairs;
      if (scores[i] > scores[j]) good += 1.0;
      else if (scores[i] == scores[j]) good += 0.5;
    }
  }
  if (pairs == 0) return std::nullopt;
  return good / static_cast<double>(pairs);
}

}  // namespace anaxnet::oracle
