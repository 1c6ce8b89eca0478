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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>

#include "anaxnet/error.hpp"
#include "anaxnet/optim.hpp"
#include "anaxnet/random.hpp"

namespace anaxnet {

/// Evaluates a scalar loss at the store's values and writes analytic gradients into it.
using Objective = std::function<double(ParamStore&)>;

struct GradCheckOptions {
  double h = 1e-3;
  /// Coordinates checked per parameter; 0 checks all of them.
  std::size_t max_coords_per_param = 0;
  std::uint64_t seed = 0;
  /// Denominator floor: |a - n| / max(|a|, |n|, floor).
  double floor = 1e-8;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t coords_checked = 0;
};

inline double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

/**
 * Compares the objective's analytic gradient with central differences
 * (f(p + h) - f(p - h)) / 2h, coordinate by coordinate.
 *
 * `params` is copied; the caller's store is left untouched.
 */
inline GradCheckResult grad_check(const Objective& f, const ParamStore& params,
                                  const GradCheckOptions& opts = {}) {
  if (!(opts.h > 0.0)) throw ConfigError("grad_check: step h must be positive");

  ParamStore work = params;
  work.zero_grad();
  const double base = f(work);
  if (!std::isfinite(base)) throw NumericError("grad_check: objective is not finite at the base point");
  const ParamStore analytic = work;

  auto eval_at = [&](const std::string& name, std::size_t idx, double value) {
    ParamStore probe = params;
    probe.value(name).data()[idx] = value;
    const double out = f(probe);
    if (!std::isfinite(out)) {
      throw NumericError("grad_check: objective is not finite after perturbing " + name + "[" +
                         std::to_string(idx) + "]");
    }
    return out;
  };

  GradCheckResult result;
  std::uint64_t counter = 0;
  for (const auto& name : params.names()) {
    const Matrix& p = params.value(name);
    const std::size_t n = p.size();
    std::vector<std::size_t> coords;
    if (opts.max_coords_per_param == 0 || opts.max_coords_per_param >= n) {
      coords.resize(n);
      for (std::size_t i = 0; i < n; ++i) coords[i] = i;
    } else {
      auto perm = seeded_permutation(n, opts.seed, counter);
      coords.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(opts.max_coords_per_param));
    }
    ++counter;

    for (std::size_t idx : coords) {
      const double x = p.data()[idx];
      const double numeric = (eval_at(name, idx, x + opts.h) - eval_at(name, idx, x - opts.h)) / (2.0 * opts.h);
      const double a = analytic.grad(name).data()[idx];
      const double err = relative_error(a, numeric, opts.floor);
      ++result.coords_checked;
      if (err > result.max_relative_error || result.worst_param.empty()) {
        result.max_relative_error = std::max(result.max_relative_error, err);
        result.worst_param = name;
        result.worst_index = idx;
        result.worst_analytic = a;
        result.worst_numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace anaxnet
