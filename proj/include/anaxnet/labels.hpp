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

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "anaxnet/error.hpp"
#include "anaxnet/matrix.hpp"

namespace anaxnet {

/// Per-image region x label binary findings (k x M).
class LabelTensor {
 public:
  LabelTensor() = default;
  LabelTensor(std::size_t regions, std::size_t labels)
      : regions_(regions), labels_(labels), bits_(regions * labels, 0) {}
  LabelTensor(std::size_t regions, std::size_t labels, std::vector<std::uint8_t> bits)
      : regions_(regions), labels_(labels), bits_(std::move(bits)) {
    if (bits_.size() != regions_ * labels_) throw ShapeError("label tensor payload does not match shape");
    for (auto b : bits_)
      if (b > 1) throw DataError("label value " + std::to_string(b) + " is not 0 or 1");
  }
  LabelTensor(std::initializer_list<std::initializer_list<int>> rows) {
    regions_ = rows.size();
    labels_ = regions_ == 0 ? 0 : rows.begin()->size();
    for (const auto& r : rows) {
      if (r.size() != labels_) throw ShapeError("ragged label literal");
      for (int v : r) {
        if (v != 0 && v != 1) throw DataError("label value " + std::to_string(v) + " is not 0 or 1");
        bits_.push_back(static_cast<std::uint8_t>(v));
      }
    }
  }

  std::size_t regions() const { return regions_; }
  std::size_t labels() const { return labels_; }

  bool at(std::size_t region, std::size_t label) const { return bits_[region * labels_ + label] != 0; }
  void set(std::size_t region, std::size_t label, bool on) { bits_[region * labels_ + label] = on ? 1 : 0; }

  std::span<const std::uint8_t> bits() const { return bits_; }

  Matrix as_matrix() const {
    Matrix m(regions_, labels_);
    for (std::size_t i = 0; i < bits_.size(); ++i) m.data()[i] = bits_[i];
    return m;
  }

  std::string shape() const { return std::to_string(regions_) + "x" + std::to_string(labels_); }

  friend bool operator==(const LabelTensor&, const LabelTensor&) = default;

 private:
  std::size_t regions_ = 0;
  std::size_t labels_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// Per-image region detection flags; 0 marks a region the detector missed.
using PresenceMask = std::vector<std::uint8_t>;

inline PresenceMask all_present(std::size_t regions) { return PresenceMask(regions, 1); }

}  // namespace anaxnet
