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

#include <cmath>

#include <gtest/gtest.h>

#include "anaxnet/adjacency.hpp"
#include "anaxnet/error.hpp"
#include "anaxnet/synth.hpp"
#include "anaxnet/train.hpp"

namespace anaxnet {
namespace {

TEST(Synth, SameSeedIsBitwiseIdentical) {
  SynthSpec spec;
  spec.set_images(50);
  spec.seed = 7;
  const auto a = generate_synthetic(spec), b = generate_synthetic(spec);
  EXPECT_EQ(a.manifest, b.manifest);
  ASSERT_EQ(a.records.size(), 50u);
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].features, b.records[i].features);
    EXPECT_EQ(a.records[i].labels, b.records[i].labels);
  }
  spec.seed = 8;
  EXPECT_NE(generate_synthetic(spec).records[0].features, a.records[0].features);
}

TEST(Synth, SplitsFollowCounts) {
  SynthSpec spec;
  spec.set_images(10);
  const auto ds = generate_synthetic(spec);
  EXPECT_EQ(ds.manifest.count(Split::train), 7u);
  EXPECT_EQ(ds.manifest.count(Split::val), 1u);
  EXPECT_EQ(ds.manifest.count(Split::test), 2u);
}

TEST(Synth, LabelMarginalsMatchConstruction) {
  SynthSpec spec;
  spec.set_images(2000);
  spec.seed = 3;
  const auto ds = generate_synthetic(spec);
  const double n = static_cast<double>(ds.records.size());
  for (std::size_t m = 0; m < spec.labels; ++m) {
    // images are independent draws; regions within one image are not
    double s = 0.0, s2 = 0.0;
    for (const auto& r : ds.records) {
      double frac = 0.0;
      for (std::size_t k = 0; k < spec.regions; ++k) frac += r.labels.at(k, m);
      frac /= static_cast<double>(spec.regions);
      s += frac;
      s2 += frac * frac;
    }
    const double mean = s / n;
    const double se = std::sqrt((s2 / n - mean * mean) / (n - 1));
    EXPECT_NEAR(mean, expected_positive_rate(spec, m), 3 * se) << "label " << m;
  }
}

TEST(Synth, PresenceRateZeroesRows) {
  SynthSpec spec;
  spec.set_images(400);
  spec.presence_rate = 0.5;
  const auto ds = generate_synthetic(spec);
  double present = 0.0;
  for (const auto& r : ds.records)
    for (auto b : r.mask) present += b;
  EXPECT_NEAR(present / (400.0 * spec.regions), 0.5, 0.03);
}

TEST(Synth, RejectsInvalidSpecs) {
  SynthSpec spec;
  spec.propagation = 1.5;
  EXPECT_THROW(generate_synthetic(spec), ConfigError);
  spec = SynthSpec{};
  spec.context_labels = {9};
  EXPECT_THROW(generate_synthetic(spec), ConfigError);
  spec = SynthSpec::with_shape(4, 2, 3);
  EXPECT_THROW(generate_synthetic(spec), ConfigError);
}

TEST(Synth, LabelDirectionsOrthonormal) {
  const Matrix u = label_directions(4, 32, 9);
  const Matrix g = matmul_nt(u, u);
  EXPECT_LE(max_abs_diff(g, Matrix::identity(4)), 1e-12);
}

TEST(Synth, PlantedGraphIsRecovered) {
  SynthSpec spec;
  spec.train = 2000;
  spec.val = spec.test = 0;
  const auto ds = generate_synthetic(spec);
  std::vector<LabelTensor> y;
  for (const auto& r : ds.records) y.push_back(r.labels);
  EXPECT_EQ(build_adjacency(y, 0.5).binary, threshold(add(spec.graph, Matrix::identity(6)), 0.5));
}

std::vector<ImageRecord> of_split(const Dataset& ds, Split s) {
  std::vector<ImageRecord> out;
  for (std::size_t i = 0; i < ds.records.size(); ++i)
    if (ds.manifest.splits[i] == s) out.push_back(ds.records[i]);
  return out;
}

TEST(Synth, NoiselessOrdinaryLabelsAreSeparableByBaseline) {
  SynthSpec spec = SynthSpec::with_shape(6, 32, 4);
  spec.context_labels.clear();
  spec.noise_std = 0.0;
  spec.train = 300;
  spec.val = 0;
  spec.test = 200;
  const auto ds = generate_synthetic(spec);
  ModelConfig c;
  c.regions = 6;
  c.features = 32;
  c.labels = 4;
  c.variant = ModelVariant::baseline_fc;
  TrainOptions opts;
  opts.epochs = 20;
  opts.learning_rate = 1e-2;
  const auto train_set = of_split(ds, Split::train), test_set = of_split(ds, Split::test);
  const auto result = train(init_params(c), Matrix::identity(6), train_set, {}, opts);
  const auto report = evaluate_model(result.final_params, Matrix::identity(6), test_set);
  EXPECT_EQ(report.macro, 1.0);
}

TEST(Synth, ContextLabelWithoutNeighboursCarriesNoSignal) {
  SynthSpec spec = SynthSpec::with_shape(6, 32, 4);
  spec.graph = Matrix(6, 6);
  spec.train = 1000;
  spec.val = 0;
  spec.test = 1000;
  spec.seed = 2;
  const auto ds = generate_synthetic(spec);
  ModelConfig c;
  c.regions = 6;
  c.features = 32;
  c.labels = 4;
  c.gcn_dims = {16, 32};
  TrainOptions opts;
  opts.epochs = 5;
  opts.learning_rate = 1e-3;
  const Matrix a = normalize(Matrix(6, 6, 1.0));  // even a fully connected graph has nothing to find
  const auto result = train(init_params(c), a, of_split(ds, Split::train), {}, opts);
  const auto report = evaluate_model(result.final_params, a, of_split(ds, Split::test));
  for (auto m : spec.context_labels) EXPECT_NEAR(*report.per_label[m], 0.5, 0.05) << "label " << m;
}

}  // namespace
}  // namespace anaxnet
