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
#include <map>
#include <string>
#include <vector>

#include "anaxnet/error.hpp"
#include "anaxnet/matrix.hpp"

namespace anaxnet {

/// Named parameters, their gradients, and the optimizer step counter.
class ParamStore {
  template <typename Map>
  static auto& lookup(Map& m, const std::string& name, const char* what) {
    auto it = m.find(name);
    if (it == m.end()) throw ContractError(std::string("no ") + what + " named '" + name + "'");
    return it->second;
  }

 public:
  /// Registers a parameter with a zero gradient of the same shape.
  void add(const std::string& name, Matrix value) {
    grads_[name] = Matrix(value.rows(), value.cols());
    values_[name] = std::move(value);
  }

  bool contains(const std::string& name) const { return values_.count(name) != 0; }
  bool has_grad(const std::string& name) const { return grads_.count(name) != 0; }

  Matrix& value(const std::string& name) { return lookup(values_, name, "parameter"); }
  const Matrix& value(const std::string& name) const { return lookup(values_, name, "parameter"); }
  Matrix& grad(const std::string& name) { return lookup(grads_, name, "gradient"); }
  const Matrix& grad(const std::string& name) const { return lookup(grads_, name, "gradient"); }

  void set_grad(const std::string& name, Matrix g) {
    const Matrix& v = value(name);
    if (!v.same_shape(g)) {
      throw ShapeError("gradient for '" + name + "' has shape " + g.shape() +
                       ", parameter is " + v.shape());
    }
    grads_[name] = std::move(g);
  }

  /// Removes a gradient entry; adam_step refuses to run until it is set again.
  void drop_grad(const std::string& name) { grads_.erase(name); }

  void zero_grad() {
    for (auto& [name, v] : values_) grads_[name] = Matrix(v.rows(), v.cols());
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& [name, v] : values_) out.push_back(name);
    return out;
  }

  std::uint64_t step() const { return step_; }
  void advance_step() { ++step_; }

  const std::map<std::string, Matrix>& values() const { return values_; }

 private:
  std::map<std::string, Matrix> values_;
  std::map<std::string, Matrix> grads_;
  std::uint64_t step_ = 0;
};

/// Adam hyper-parameters and per-parameter moment estimates.
struct AdamState {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::map<std::string, Matrix> m;
  std::map<std::string, Matrix> v;
};

/**
 * One bias-corrected Adam update applied in place to every parameter.
 *
 * Gradients are read but never cleared. Moment buffers are created lazily
 * on first use. Throws ContractError if any parameter lacks a gradient.
 */
inline void adam_step(ParamStore& params, AdamState& state) {
  const auto names = params.names();
  for (const auto& name : names) {
    if (!params.has_grad(name)) throw ContractError("adam_step: missing gradient for '" + name + "'");
  }
  params.advance_step();
  const double t = static_cast<double>(params.step());
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);

  for (const auto& name : names) {
    Matrix& p = params.value(name);
    const Matrix& g = params.grad(name);
    auto [mit, m_new] = state.m.try_emplace(name, p.rows(), p.cols());
    auto [vit, v_new] = state.v.try_emplace(name, p.rows(), p.cols());
    auto md = mit->second.data();
    auto vd = vit->second.data();
    auto pd = p.data();
    auto gd = g.data();
    if (md.size() != pd.size() || vd.size() != pd.size()) {
      throw ShapeError("adam_step: moment shape mismatch for '" + name + "'");
    }
    for (std::size_t i = 0; i < pd.size(); ++i) {
      md[i] = state.beta1 * md[i] + (1.0 - state.beta1) * gd[i];
      vd[i] = state.beta2 * vd[i] + (1.0 - state.beta2) * gd[i] * gd[i];
      const double m_hat = md[i] / correction1;
      const double v_hat = vd[i] / correction2;
      pd[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

}  // namespace anaxnet
