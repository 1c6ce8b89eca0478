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

// Anatomy-aware classification head.
//
//   H_0 = R                       (k x d region features, absent rows zeroed)
//   H_l = relu(A · H_{l-1} · W_l)  for each graph layer; Z = H_L (k x d)
//   P   = row_softmax(R · Zᵀ)      (k x k attention)
//   Q   = P · R
//   Y   = [R | Q] · W_c            (k x M logits)
//
// The loss is the mean binary cross-entropy over all k x M cells. The
// region-independent baseline is Y = R · W_c with W_c of shape d x M.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "anaxnet/error.hpp"
#include "anaxnet/labels.hpp"
#include "anaxnet/matrix.hpp"
#include "anaxnet/optim.hpp"
#include "anaxnet/random.hpp"

namespace anaxnet {

enum class ModelVariant { anaxnet, baseline_fc };

inline std::string to_string(ModelVariant v) { return v == ModelVariant::anaxnet ? "anaxnet" : "baseline-fc"; }

inline ModelVariant parse_variant(const std::string& s) {
  if (s == "anaxnet") return ModelVariant::anaxnet;
  if (s == "baseline-fc") return ModelVariant::baseline_fc;
  throw ConfigError("unknown model variant '" + s + "' (expected anaxnet or baseline-fc)");
}

struct ModelConfig {
  std::size_t regions = 18;
  std::size_t features = 1024;
  std::vector<std::size_t> gcn_dims = {512, 1024};
  std::size_t labels = 9;
  std::uint64_t seed = 0;
  ModelVariant variant = ModelVariant::anaxnet;

  void validate() const {
    if (regions == 0 || features == 0 || labels == 0) throw ConfigError("model config: k, d and M must all be at least 1");
    if (variant == ModelVariant::baseline_fc) return;
    if (gcn_dims.empty()) throw ConfigError("model config: at least one graph layer is required");
    for (auto dim : gcn_dims)
      if (dim == 0) throw ConfigError("model config: graph layer dims must be positive");
    if (gcn_dims.back() != features) {
      throw ConfigError("model config: last graph layer dim " + std::to_string(gcn_dims.back()) +
                        " must equal feature dim " + std::to_string(features));
    }
  }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Weights of either variant. The baseline has no graph layers and a d x M classifier.
struct ModelParams {
  std::vector<Matrix> gcn;
  Matrix classifier;

  ModelVariant variant() const { return gcn.empty() ? ModelVariant::baseline_fc : ModelVariant::anaxnet; }
  std::size_t features() const { return gcn.empty() ? classifier.rows() : gcn.front().rows(); }
  std::size_t labels() const { return classifier.cols(); }

  static ModelParams zeros_like(const ModelParams& p) {
    ModelParams z;
    for (const auto& w : p.gcn) z.gcn.emplace_back(w.rows(), w.cols());
    z.classifier = Matrix(p.classifier.rows(), p.classifier.cols());
    return z;
  }

  void accumulate(const ModelParams& o) {
    if (o.gcn.size() != gcn.size()) throw ShapeError("parameter sets have different layer counts");
    for (std::size_t l = 0; l < gcn.size(); ++l) anaxnet::accumulate(gcn[l], o.gcn[l]);
    anaxnet::accumulate(classifier, o.classifier);
  }

  void scale_by(double s) {
    for (auto& w : gcn) w = scale(w, s);
    classifier = scale(classifier, s);
  }

  static std::string layer_name(std::size_t l) { return "gcn" + std::to_string(l); }

  ParamStore to_store() const {
    ParamStore store;
    for (std::size_t l = 0; l < gcn.size(); ++l) store.add(layer_name(l), gcn[l]);
    store.add("classifier", classifier);
    return store;
  }

  /// Copies values back out of a store built by to_store().
  void load_values(const ParamStore& store) {
    for (std::size_t l = 0; l < gcn.size(); ++l) gcn[l] = store.value(layer_name(l));
    classifier = store.value("classifier");
  }

  /// Writes this object's matrices into the store's gradient slots.
  void store_as_grads(ParamStore& store) const {
    for (std::size_t l = 0; l < gcn.size(); ++l) store.set_grad(layer_name(l), gcn[l]);
    store.set_grad("classifier", classifier);
  }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights from the config seed.
inline ModelParams init_params(const ModelConfig& config) {
  config.validate();
  Rng rng(mix_seed(config.seed, 0x1a17));
  auto draw = [&](std::size_t fan_in, std::size_t fan_out) {
    Matrix w(fan_in, fan_out);
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& v : w.data()) v = rng.uniform(-bound, bound);
    return w;
  };
  ModelParams p;
  if (config.variant == ModelVariant::baseline_fc) {
    p.classifier = draw(config.features, config.labels);
    return p;
  }
  std::size_t in = config.features;
  for (auto out : config.gcn_dims) {
    p.gcn.push_back(draw(in, out));
    in = out;
  }
  p.classifier = draw(2 * config.features, config.labels);
  return p;
}

/// Zeroes the feature rows of regions the detector missed.
inline Matrix apply_mask(const Matrix& features, const PresenceMask& mask) {
  if (mask.size() != features.rows()) {
    throw ShapeError("presence mask has " + std::to_string(mask.size()) + " entries for " +
                     std::to_string(features.rows()) + " regions");
  }
  Matrix out = features;
  for (std::size_t r = 0; r < mask.size(); ++r)
    if (!mask[r])
      for (double& v : out.row(r)) v = 0.0;
  return out;
}

namespace detail {

inline void check_graph_inputs(const Matrix& features, const Matrix& adjacency, const ModelParams& params) {
  if (adjacency.rows() != features.rows() || adjacency.cols() != features.rows()) {
    throw ShapeError("adjacency " + adjacency.shape() + " does not match " + std::to_string(features.rows()) + " regions");
  }
  if (params.gcn.empty()) throw ContractError("graph forward called with baseline parameters");
  if (params.gcn.front().rows() != features.cols()) {
    throw ShapeError("features " + features.shape() + " do not match first graph layer " + params.gcn.front().shape());
  }
}

}  // namespace detail

/// Z = relu(A · relu(A · R · W_0) · W_1), generalized to any layer count.
inline Matrix gcn_forward(const Matrix& features, const Matrix& adjacency, const ModelParams& params) {
  detail::check_graph_inputs(features, adjacency, params);
  Matrix h = features;
  for (const auto& w : params.gcn) h = relu(matmul(matmul(adjacency, h), w));
  return h;
}

/// Q = row_softmax(R · Zᵀ) · R.
inline Matrix attention_forward(const Matrix& features, const Matrix& propagated) {
  if (!features.same_shape(propagated)) {
    throw ShapeError("attention: features " + features.shape() + " vs graph output " + propagated.shape());
  }
  return matmul(row_softmax(matmul_nt(features, propagated)), features);
}

/// [R | Q] · W_c.
inline Matrix classify(const Matrix& features, const Matrix& attended, const ModelParams& params) {
  if (!features.same_shape(attended)) {
    throw ShapeError("classify: features " + features.shape() + " vs attended " + attended.shape());
  }
  return matmul(concat_cols(features, attended), params.classifier);
}

/// Region-independent classifier: R · W.
inline Matrix baseline_forward(const Matrix& features, const Matrix& weights) { return matmul(features, weights); }

inline void check_labels(const Matrix& logits, const LabelTensor& labels) {
  if (logits.rows() != labels.regions() || logits.cols() != labels.labels()) {
    throw ShapeError("logits " + logits.shape() + " do not match labels " + labels.shape());
  }
}

/// Mean over all cells of -[y log σ(x) + (1 - y) log(1 - σ(x))], in logit form.
inline double bce_loss(const Matrix& logits, const LabelTensor& labels) {
  check_labels(logits, labels);
  if (logits.empty()) return 0.0;
  double total = 0.0;
  auto x = logits.data();
  auto y = labels.bits();
  for (std::size_t i = 0; i < x.size(); ++i) {
    total += std::max(x[i], 0.0) - x[i] * static_cast<double>(y[i]) + std::log1p(std::exp(-std::abs(x[i])));
  }
  return total / static_cast<double>(x.size());
}

/// d(bce_loss)/d(logits) = (σ(x) - y) / (k·M).
inline Matrix bce_grad(const Matrix& logits, const LabelTensor& labels) {
  check_labels(logits, labels);
  Matrix g(logits.rows(), logits.cols());
  if (logits.empty()) return g;
  const double n = static_cast<double>(logits.size());
  auto y = labels.bits();
  for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] = (sigmoid(logits.data()[i]) - y[i]) / n;
  return g;
}

/// Every intermediate the backward pass needs. Graph fields are empty for the baseline.
struct ForwardTrace {
  Matrix features;                  // masked R
  Matrix adjacency;                 // propagation weights used by this pass
  std::vector<Matrix> aggregated;   // A · H_{l-1}
  std::vector<Matrix> preactivations;
  std::vector<Matrix> activations;  // H_l; the last one is Z
  Matrix attention_logits;          // R · Zᵀ
  Matrix attention;                 // row_softmax of the logits
  Matrix attended;                  // Q
  Matrix concat;                    // [R | Q]
  Matrix logits;

  const Matrix& propagated() const { return activations.back(); }

  /// Name of the first cached tensor holding a NaN or infinity, if any.
  std::optional<std::string> first_non_finite() const {
    if (!all_finite(features)) return "features";
    for (std::size_t l = 0; l < preactivations.size(); ++l) {
      if (!all_finite(aggregated[l])) return "aggregated[" + std::to_string(l) + "]";
      if (!all_finite(preactivations[l])) return "preactivation[" + std::to_string(l) + "]";
      if (!all_finite(activations[l])) return "activation[" + std::to_string(l) + "]";
    }
    if (!all_finite(attention_logits)) return "attention_logits";
    if (!all_finite(attention)) return "attention";
    if (!all_finite(attended)) return "attended";
    if (!all_finite(logits)) return "logits";
    return std::nullopt;
  }
};

inline ForwardTrace forward(const Matrix& features, const PresenceMask& mask, const Matrix& adjacency,
                            const ModelParams& params) {
  ForwardTrace t;
  t.features = apply_mask(features, mask);
  if (params.variant() == ModelVariant::baseline_fc) {
    if (params.classifier.rows() != features.cols()) {
      throw ShapeError("features " + features.shape() + " do not match classifier " + params.classifier.shape());
    }
    t.logits = baseline_forward(t.features, params.classifier);
    return t;
  }
  detail::check_graph_inputs(t.features, adjacency, params);
  t.adjacency = adjacency;
  if (params.gcn.back().cols() != features.cols()) {
    throw ShapeError("last graph layer " + params.gcn.back().shape() + " must map back to " +
                     std::to_string(features.cols()) + " features");
  }
  if (params.classifier.rows() != 2 * features.cols()) {
    throw ShapeError("classifier " + params.classifier.shape() + " expects " +
                     std::to_string(params.classifier.rows()) + " concatenated features");
  }

  t.aggregated.reserve(params.gcn.size());
  t.preactivations.reserve(params.gcn.size());
  t.activations.reserve(params.gcn.size());
  const Matrix* h = &t.features;
  for (const auto& w : params.gcn) {
    t.aggregated.push_back(matmul(adjacency, *h));
    t.preactivations.push_back(matmul(t.aggregated.back(), w));
    t.activations.push_back(relu(t.preactivations.back()));
    h = &t.activations.back();
  }
  t.attention_logits = matmul_nt(t.features, t.propagated());
  t.attention = row_softmax(t.attention_logits);
  t.attended = matmul(t.attention, t.features);
  t.concat = concat_cols(t.features, t.attended);
  t.logits = matmul(t.concat, params.classifier);
  return t;
}

inline ForwardTrace forward(const Matrix& features, const Matrix& adjacency, const ModelParams& params) {
  return forward(features, all_present(features.rows()), adjacency, params);
}

/**
 * Exact gradients of bce_loss(trace.logits, labels) with respect to every weight.
 *
 * The attention path is differentiated through Z only: R is an input and
 * carries no parameters.
 */
inline ModelParams backward(const ForwardTrace& trace, const LabelTensor& labels, const ModelParams& params) {
  check_labels(trace.logits, labels);
  ModelParams grads;
  const Matrix d_logits = bce_grad(trace.logits, labels);

  if (params.variant() == ModelVariant::baseline_fc) {
    if (!trace.preactivations.empty()) throw ContractError("backward: graph trace passed with baseline parameters");
    if (params.classifier.rows() != trace.features.cols() || params.classifier.cols() != trace.logits.cols()) {
      throw ContractError("backward: classifier " + params.classifier.shape() + " does not match trace");
    }
    grads.classifier = matmul_tn(trace.features, d_logits);
    return grads;
  }

  if (trace.preactivations.size() != params.gcn.size()) {
    throw ContractError("backward: trace has " + std::to_string(trace.preactivations.size()) +
                        " graph layers, parameters have " + std::to_string(params.gcn.size()));
  }
  if (!params.classifier.same_shape(Matrix(trace.concat.cols(), trace.logits.cols()))) {
    throw ContractError("backward: classifier " + params.classifier.shape() + " does not match trace");
  }
  const Matrix& adjacency = trace.adjacency;
  if (adjacency.rows() != trace.features.rows() || adjacency.cols() != trace.features.rows()) {
    throw ContractError("backward: adjacency " + adjacency.shape() + " does not match trace");
  }

  const std::size_t d = trace.features.cols();
  grads.classifier = matmul_tn(trace.concat, d_logits);
  const Matrix d_concat = matmul_nt(d_logits, params.classifier);
  const Matrix d_attended = slice_cols(d_concat, d, d);

  // Q = P·R  =>  dP = dQ·Rᵀ;  S = R·Zᵀ  =>  dZ = dSᵀ·R.
  const Matrix d_attention = matmul_nt(d_attended, trace.features);
  const Matrix d_scores = row_softmax_backward(trace.attention, d_attention);
  Matrix d_h = matmul_tn(d_scores, trace.features);

  grads.gcn.resize(params.gcn.size());
  for (std::size_t l = params.gcn.size(); l-- > 0;) {
    const Matrix d_pre = relu_backward(trace.preactivations[l], d_h);
    grads.gcn[l] = matmul_tn(trace.aggregated[l], d_pre);
    if (l > 0) d_h = matmul_tn(adjacency, matmul_nt(d_pre, params.gcn[l]));
  }
  return grads;
}

}  // namespace anaxnet
