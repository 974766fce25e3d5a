// Copyright 2026 The MRX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "mrx/nn/optim.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace {

using mrx::nn::Adam;
using mrx::nn::PlateauScheduler;
using mrx::nn::Var;

TEST(AdamOpt, ZeroGradientLeavesParamsUnchanged) {
  auto p = mrx::nn::make_tensor({4}, {1.0, -2.0, 3.0, 0.5}, true);
  Adam opt({p});
  opt.zero_grad();
  opt.step(1e-3);
  EXPECT_EQ(p->value, (std::vector<double>{1.0, -2.0, 3.0, 0.5}));
}

TEST(AdamOpt, FirstStepIsSignedLearningRate) {
  // From m = v = 0, one step with gradient g moves by ~ -lr * sign(g).
  auto p = mrx::nn::make_tensor({3}, {0.0, 0.0, 0.0}, true);
  Adam opt({p});
  p->ensure_grad();
  p->grad = {2.5, -0.01, 1e-6};
  opt.step(1e-3);
  EXPECT_NEAR(p->value[0], -1e-3, 1e-8);
  EXPECT_NEAR(p->value[1], 1e-3, 1e-8);
  // Tiny gradients stay in the eps-dominated regime but keep the sign.
  EXPECT_LT(p->value[2], 0.0);
}

TEST(AdamOpt, ConstantGradientApproachesSignedStep) {
  auto p = mrx::nn::make_tensor({1}, {10.0}, true);
  Adam opt({p});
  double prev = p->value[0];
  double last_step = 0.0;
  for (int i = 0; i < 200; ++i) {
    p->ensure_grad();
    p->grad = {3.7};
    opt.step(1e-3);
    last_step = prev - p->value[0];
    prev = p->value[0];
  }
  EXPECT_NEAR(last_step, 1e-3, 1e-5);
}

TEST(Plateau, ImprovingLossKeepsLr) {
  PlateauScheduler s;
  s.lr = 1e-3;
  for (double loss : {5.0, 4.0, 3.0, 2.0, 1.0}) EXPECT_DOUBLE_EQ(s.on_epoch(loss), 1e-3);
}

TEST(Plateau, FlatLossHalvesAfterFourthEpoch) {
  PlateauScheduler s;
  s.lr = 1e-3;
  EXPECT_DOUBLE_EQ(s.on_epoch(1.0), 1e-3);
  EXPECT_DOUBLE_EQ(s.on_epoch(1.0), 1e-3);
  EXPECT_DOUBLE_EQ(s.on_epoch(1.0), 1e-3);
  EXPECT_DOUBLE_EQ(s.on_epoch(1.0), 5e-4);  // 3 consecutive non-improvements
}

TEST(Plateau, PatienceResetsAfterHalving) {
  PlateauScheduler s;
  s.lr = 1e-3;
  for (int i = 0; i < 4; ++i) s.on_epoch(2.0);
  EXPECT_DOUBLE_EQ(s.lr, 5e-4);
  EXPECT_EQ(s.bad_epochs, 0);
  // Two more flat epochs do not halve again yet.
  EXPECT_DOUBLE_EQ(s.on_epoch(2.0), 5e-4);
  EXPECT_DOUBLE_EQ(s.on_epoch(2.0), 5e-4);
  EXPECT_DOUBLE_EQ(s.on_epoch(2.0), 2.5e-4);
}

TEST(Plateau, ImprovementMustBeStrict) {
  PlateauScheduler s;
  s.lr = 1e-3;
  s.on_epoch(1.0);
  s.on_epoch(1.0);  // equal is not an improvement
  s.on_epoch(0.5);  // strict improvement resets
  EXPECT_EQ(s.bad_epochs, 0);
  s.on_epoch(0.5);
  s.on_epoch(0.5);
  EXPECT_DOUBLE_EQ(s.on_epoch(0.5), 5e-4);
}

}  // namespace
