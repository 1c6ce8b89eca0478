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

#include <chrono>
#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "anaxnet/error.hpp"
#include "anaxnet/gradcheck.hpp"
#include "anaxnet/train.hpp"

namespace anaxnet {
namespace {

TEST(GradCheck, LinearFunctionIsExact) {
  ParamStore store;
  store.add("p", Matrix{{0.3, -1.2}, {4.0, 2.5}});
  const Objective f = [](ParamStore& s) {
    const Matrix& p = s.value("p");
    s.set_grad("p", Matrix(p.rows(), p.cols(), 1.0));
    return sum(p);
  };
  EXPECT_LT(grad_check(f, store).max_relative_error, 1e-9);
}

TEST(GradCheck, Quadratic) {
  ParamStore store;
  store.add("p", Matrix{{1.0, 2.0}});
  const Objective f = [](ParamStore& s) {
    const Matrix& p = s.value("p");
    double total = 0.0;
    for (double v : p.data()) total += v * v;
    s.set_grad("p", scale(p, 2.0));
    return total;
  };
  ParamStore probe = store;
  f(probe);
  EXPECT_EQ(probe.grad("p"), (Matrix{{2.0, 4.0}}));
  const auto r = grad_check(f, store);
  EXPECT_LT(r.max_relative_error, 1e-6);
  EXPECT_EQ(r.coords_checked, 2u);
}

TEST(GradCheck, WrongGradientIsCaught) {
  ParamStore store;
  store.add("p", Matrix{{1.0, 2.0}});
  const Objective f = [](ParamStore& s) {
    const Matrix& p = s.value("p");
    s.set_grad("p", Matrix{{2.0 * p(0, 0), 3.0 * p(0, 1)}});
    return p(0, 0) * p(0, 0) + p(0, 1) * p(0, 1);
  };
  const auto r = grad_check(f, store);
  EXPECT_GT(r.max_relative_error, 0.1);
  EXPECT_EQ(r.worst_param, "p");
  EXPECT_EQ(r.worst_index, 1u);
}

TEST(GradCheck, NonFiniteObjectiveThrows) {
  ParamStore store;
  store.add("p", Matrix{{1.0}});
  const Objective f = [](ParamStore&) { return std::numeric_limits<double>::quiet_NaN(); };
  EXPECT_THROW(grad_check(f, store), NumericError);
}

TEST(GradCheck, RejectsNonPositiveStep) {
  ParamStore store;
  store.add("p", Matrix{{1.0}});
  const Objective f = [](ParamStore& s) { return sum(s.value("p")); };
  GradCheckOptions opts;
  opts.h = 0.0;
  EXPECT_THROW(grad_check(f, store, opts), ConfigError);
}

TEST(ModelGradCheck, PassesAcrossSeeds) {
  const auto start = std::chrono::steady_clock::now();
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto run = run_model_gradcheck(seed);
    EXPECT_LT(run.result.max_relative_error, 1e-4) << "seed " << seed << " worst " << run.result.worst_param;
    EXPECT_LE(run.problem.config.regions, 4u);
    EXPECT_LE(run.problem.config.features, 8u);
    EXPECT_LE(run.problem.config.labels, 3u);
  }
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(), 10.0);
}

TEST(ModelGradCheck, ThreeRegionToy) {
  for (std::uint64_t seed = 1; seed < 200; ++seed) {
    const auto problem = make_gradcheck_problem(seed);
    if (problem.config.regions != 3) continue;
    EXPECT_LT(run_model_gradcheck(seed).result.max_relative_error, 1e-4);
    return;
  }
  FAIL() << "no three-region toy among seeds";
}

TEST(ModelGradCheck, BaselineVariant) {
  auto p = make_gradcheck_problem(4, ModelVariant::baseline_fc);
  const Objective f = model_objective(p.params, p.adjacency, p.records);
  GradCheckOptions opts;
  opts.floor = kModelGradCheckFloor;
  EXPECT_LT(grad_check(f, p.params.to_store(), opts).max_relative_error, 1e-4);
}

TEST(ModelGradCheck, CorruptedGradientFails) {
  EXPECT_GT(run_model_gradcheck(1, 1e-3, true).result.max_relative_error, 1e-4);
}

}  // namespace
}  // namespace anaxnet
