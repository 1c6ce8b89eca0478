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
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "anaxnet/adjacency.hpp"
#include "anaxnet/error.hpp"
#include "anaxnet/eval.hpp"
#include "anaxnet/gradcheck.hpp"
#include "anaxnet/io.hpp"
#include "anaxnet/model.hpp"
#include "anaxnet/optim.hpp"
#include "anaxnet/random.hpp"

namespace anaxnet {

struct BatchResult {
  double loss = 0.0;
  ModelParams grads;
};

/// Mean loss and mean per-image gradient over a batch, summed in record order.
inline BatchResult batch_loss_and_grad(const ModelParams& params, const Matrix& adjacency,
                                       std::span<const ImageRecord* const> batch) {
  BatchResult out;
  out.grads = ModelParams::zeros_like(params);
  if (batch.empty()) return out;
  for (const ImageRecord* rec : batch) {
    const ForwardTrace trace = forward(rec->features, rec->mask, adjacency, params);
    if (auto bad = trace.first_non_finite()) {
      throw NumericError("non-finite values in " + *bad + " for image " + rec->id);
    }
    const double loss = bce_loss(trace.logits, rec->labels);
    if (!std::isfinite(loss)) throw NumericError("non-finite loss for image " + rec->id);
    out.loss += loss;
    out.grads.accumulate(backward(trace, rec->labels, params));
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  out.loss *= inv;
  out.grads.scale_by(inv);
  return out;
}

inline BatchResult batch_loss_and_grad(const ModelParams& params, const Matrix& adjacency,
                                       std::span<const ImageRecord> records) {
  std::vector<const ImageRecord*> ptrs;
  for (const auto& r : records) ptrs.push_back(&r);
  return batch_loss_and_grad(params, adjacency, std::span<const ImageRecord* const>(ptrs));
}

/// Sigmoid probabilities per image.
inline std::vector<Matrix> predict(const ModelParams& params, const Matrix& adjacency,
                                   std::span<const ImageRecord> records) {
  std::vector<Matrix> out;
  out.reserve(records.size());
  for (const auto& rec : records) out.push_back(sigmoid(forward(rec.features, rec.mask, adjacency, params).logits));
  return out;
}

inline EvalReport evaluate_model(const ModelParams& params, const Matrix& adjacency, std::span<const ImageRecord> records,
                                 std::vector<std::string> region_names = {}, std::vector<std::string> label_names = {}) {
  std::vector<LabelTensor> labels;
  labels.reserve(records.size());
  for (const auto& r : records) labels.push_back(r.labels);
  const auto scores = predict(params, adjacency, records);
  return evaluate(scores, labels, std::move(region_names), std::move(label_names));
}

struct TrainOptions {
  std::size_t epochs = 25;
  double learning_rate = 1e-4;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
};

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  std::optional<double> val_macro;
};

struct TrainResult {
  ModelParams final_params;
  ModelParams best_params;
  std::optional<double> best_val_macro;
  std::size_t best_epoch = 0;
  std::vector<EpochLog> history;
};

/**
 * Mini-batch Adam on the mean binary cross-entropy.
 *
 * Epoch e visits the training records in the permutation drawn from
 * (seed, e), so runs are reproducible without shared RNG state. The best
 * checkpoint is the epoch with the highest validation macro AUC; without a
 * validation set it is the final epoch.
 */
inline TrainResult train(const ModelParams& initial, const Matrix& adjacency, std::span<const ImageRecord> train_set,
                         std::span<const ImageRecord> val_set, const TrainOptions& opts,
                         const std::function<void(const EpochLog&)>& on_epoch = {}) {
  if (opts.batch_size == 0) throw ConfigError("batch size must be positive");
  if (!(opts.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");

  ModelParams params = initial;
  ParamStore store = params.to_store();
  AdamState adam;
  adam.learning_rate = opts.learning_rate;

  TrainResult result;
  result.best_params = params;
  for (std::size_t epoch = 1; epoch <= opts.epochs; ++epoch) {
    const auto order = seeded_permutation(train_set.size(), opts.seed, epoch);
    double loss_sum = 0.0;
    std::vector<const ImageRecord*> batch;
    for (std::size_t start = 0; start < order.size(); start += opts.batch_size) {
      batch.clear();
      const std::size_t stop = std::min(order.size(), start + opts.batch_size);
      for (std::size_t i = start; i < stop; ++i) batch.push_back(&train_set[order[i]]);
      const auto step = batch_loss_and_grad(params, adjacency, batch);
      loss_sum += step.loss * static_cast<double>(batch.size());
      step.grads.store_as_grads(store);
      adam_step(store, adam);
      params.load_values(store);
    }

    EpochLog log;
    log.epoch = epoch;
    log.train_loss = train_set.empty() ? 0.0 : loss_sum / static_cast<double>(train_set.size());
    if (!val_set.empty()) log.val_macro = evaluate_model(params, adjacency, val_set).macro;
    result.history.push_back(log);
    if (on_epoch) on_epoch(log);

    const bool better = log.val_macro && (!result.best_val_macro || *log.val_macro > *result.best_val_macro);
    if (better || val_set.empty()) {
      result.best_params = params;
      result.best_epoch = epoch;
      if (better) result.best_val_macro = log.val_macro;
    }
  }
  result.final_params = params;
  if (opts.epochs == 0) result.best_params = params;
  return result;
}

/// Objective over a ParamStore laid out by ModelParams::to_store().
inline Objective model_objective(const ModelParams& layout, const Matrix& adjacency, std::vector<ImageRecord> records) {
  return [layout, adjacency, records = std::move(records)](ParamStore& store) {
    ModelParams p = layout;
    p.load_values(store);
    const auto r = batch_loss_and_grad(p, adjacency, std::span<const ImageRecord>(records));
    r.grads.store_as_grads(store);
    return r.loss;
  };
}

/// A small random model and batch for finite-difference checks.
struct GradCheckProblem {
  ModelConfig config;
  ModelParams params;
  Matrix adjacency;
  std::vector<ImageRecord> records;
};

/// Smallest |pre-activation| over the batch; kinks closer than the FD step make central differences meaningless.
inline double relu_margin(const GradCheckProblem& p) {
  double margin = std::numeric_limits<double>::infinity();
  for (const auto& rec : p.records) {
    const auto trace = forward(rec.features, rec.mask, p.adjacency, p.params);
    for (const auto& pre : trace.preactivations)
      for (double v : pre.data()) margin = std::min(margin, std::abs(v));
  }
  return margin;
}

/**
 * Random toy problem with k <= 4, d <= 8, M <= 3 and a random region graph.
 * Draws are repeated until every ReLU input sits at least `margin` away from
 * zero, so the objective is smooth within the finite-difference stencil.
 */
inline GradCheckProblem make_gradcheck_problem(std::uint64_t seed, ModelVariant variant = ModelVariant::anaxnet,
                                               double margin = 1e-2) {
  for (std::uint64_t attempt = 0;; ++attempt) {
    Rng rng(mix_seed(seed, 0x6c6b + attempt));
    GradCheckProblem p;
    p.config.regions = 2 + rng.below(3);
    p.config.features = 2 + rng.below(7);
    p.config.labels = 1 + rng.below(3);
    p.config.gcn_dims = {2 + rng.below(7), p.config.features};
    p.config.seed = mix_seed(seed, attempt);
    p.config.variant = variant;
    p.params = init_params(p.config);

    const std::size_t k = p.config.regions;
    Matrix binary(k, k);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = i + 1; j < k; ++j) binary(i, j) = binary(j, i) = rng.bernoulli(0.5) ? 1.0 : 0.0;
    p.adjacency = normalize(binary);

    for (int n = 0; n < 2; ++n) {
      ImageRecord rec;
      rec.id = "toy" + std::to_string(n);
      rec.features = Matrix(k, p.config.features);
      for (double& v : rec.features.data()) v = rng.normal();
      rec.mask = all_present(k);
      rec.labels = LabelTensor(k, p.config.labels);
      for (std::size_t r = 0; r < k; ++r)
        for (std::size_t m = 0; m < p.config.labels; ++m) rec.labels.set(r, m, rng.bernoulli(0.5));
      p.records.push_back(std::move(rec));
    }
    if (variant == ModelVariant::baseline_fc || relu_margin(p) >= margin || attempt > 10000) return p;
  }
}

struct GradCheckRun {
  GradCheckProblem problem;
  GradCheckResult result;
};

/// Denominator floor for the model check. Central differences at h = 1e-3 carry
/// ~1e-8 absolute truncation error, which swamps a pure relative metric on
/// gradient entries of order 1e-5.
inline constexpr double kModelGradCheckFloor = 1e-3;

/// Full-model finite-difference check. `corrupt` adds a bias to one analytic gradient entry.
inline GradCheckRun run_model_gradcheck(std::uint64_t seed, double h = 1e-3, bool corrupt = false) {
  GradCheckRun run;
  run.problem = make_gradcheck_problem(seed);
  Objective f = model_objective(run.problem.params, run.problem.adjacency, run.problem.records);
  if (corrupt) {
    f = [inner = f](ParamStore& store) {
      const double loss = inner(store);
      store.grad("classifier").data()[0] += 1e-2;
      return loss;
    };
  }
  GradCheckOptions opts;
  opts.h = h;
  opts.floor = kModelGradCheckFloor;
  run.result = grad_check(f, run.problem.params.to_store(), opts);
  return run;
}

}  // namespace anaxnet
