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

#include <gtest/gtest.h>

#include "anaxnet/error.hpp"
#include "anaxnet/optim.hpp"

namespace anaxnet {
namespace {

TEST(Adam, ZeroGradientIsFixedPoint) {
  ParamStore store;
  const Matrix p{{1.5, -2.0}, {0.25, 3.0}};
  store.add("w", p);
  AdamState adam;
  adam.learning_rate = 0.1;
  for (int i = 0; i < 5; ++i) adam_step(store, adam);
  EXPECT_EQ(store.value("w"), p);
  EXPECT_EQ(store.step(), 5u);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  // m_hat = g and v_hat = g^2 after one step, so the update is lr * g / (|g| + eps).
  ParamStore store;
  store.add("p", Matrix{{1.0}});
  store.set_grad("p", Matrix{{1.0}});
  AdamState adam;
  adam.learning_rate = 0.1;
  adam_step(store, adam);
  EXPECT_NEAR(store.value("p")(0, 0), 0.9, 1e-8);
}

TEST(Adam, IdenticalParamsStayIdentical) {
  ParamStore store;
  store.add("a", Matrix{{0.3, -0.7}});
  store.add("b", Matrix{{0.3, -0.7}});
  AdamState adam;
  adam.learning_rate = 0.05;
  for (int step = 0; step < 10; ++step) {
    const Matrix g{{0.1 * step, -0.2}};
    store.set_grad("a", g);
    store.set_grad("b", g);
    adam_step(store, adam);
  }
  EXPECT_EQ(store.value("a"), store.value("b"));
}

TEST(Adam, Deterministic) {
  auto run = [] {
    ParamStore store;
    store.add("w", Matrix{{1.0, 2.0, 3.0}});
    AdamState adam;
    for (int step = 0; step < 20; ++step) {
      store.set_grad("w", Matrix{{std::sin(step), std::cos(step), 0.5}});
      adam_step(store, adam);
    }
    return store.value("w");
  };
  EXPECT_EQ(run(), run());
}

TEST(Adam, MissingGradientIsContractError) {
  ParamStore store;
  store.add("w", Matrix{{1.0}});
  store.drop_grad("w");
  AdamState adam;
  EXPECT_THROW(adam_step(store, adam), ContractError);
  EXPECT_EQ(store.step(), 0u);
}

TEST(ParamStore, RejectsMisshapedGradient) {
  ParamStore store;
  store.add("w", Matrix(2, 3));
  EXPECT_THROW(store.set_grad("w", Matrix(3, 2)), ShapeError);
  EXPECT_THROW(store.value("nope"), ContractError);
}

}  // namespace
}  // namespace anaxnet
