// Copyright 2026 The provaudit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "provaudit/audit_model.h"

#include <cmath>
#include <cstring>
#include <random>

#include "gtest/gtest.h"
#include "test_util.h"

namespace provaudit {
namespace {

using testing::TempDir;

MembershipFeature RandomFeature(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  MembershipFeature f;
  f.sample_id = "f";
  for (int i = 0; i < n; ++i) {
    f.align_diffs.push_back(u(rng) * 0.3);
    f.similarities.push_back(u(rng));
  }
  return f;
}

TEST(AuditModelTest, LayerShapes) {
  ASSERT_OK_AND_ASSIGN(AuditModel two, AuditModel::Create(16, ModelVariant::kTwoBranch, 0));
  ASSERT_EQ(two.layers().size(), 6u);
  EXPECT_EQ(two.layers()[0].in, 16);
  EXPECT_EQ(two.layers()[0].out, 128);
  EXPECT_EQ(two.layers()[1].out, 64);
  EXPECT_EQ(two.layers()[2].in, 16);
  EXPECT_EQ(two.layers()[4].in, 128);
  EXPECT_EQ(two.layers()[4].out, 64);
  EXPECT_EQ(two.layers()[5].out, 1);
  EXPECT_FALSE(two.layers()[5].tanh);
  const size_t expected = 2 * (16 * 128 + 128 + 128 * 64 + 64) + (128 * 64 + 64) + (64 + 1);
  EXPECT_EQ(two.num_params(), expected);

  ASSERT_OK_AND_ASSIGN(AuditModel one, AuditModel::Create(16, ModelVariant::kOneBranch, 0));
  ASSERT_EQ(one.layers().size(), 4u);
  EXPECT_EQ(one.layers()[0].in, 32);
  EXPECT_FALSE(AuditModel::Create(0, ModelVariant::kTwoBranch, 0).ok());
}

TEST(AuditModelTest, ZeroWeightsGiveExactlyOneHalf) {
  std::mt19937_64 rng(1);
  for (auto variant : {ModelVariant::kTwoBranch, ModelVariant::kOneBranch}) {
    ASSERT_OK_AND_ASSIGN(AuditModel model, AuditModel::Create(8, variant, 0));
    for (int i = 0; i < 20; ++i) {
      ASSERT_OK_AND_ASSIGN(double p, Forward(model, RandomFeature(rng, 8)));
      EXPECT_EQ(p, 0.5);
    }
  }
}

TEST(AuditModelTest, InitIsBitwiseReproducible) {
  ASSERT_OK_AND_ASSIGN(AuditModel a, InitModel(8, ModelVariant::kTwoBranch, 42));
  ASSERT_OK_AND_ASSIGN(AuditModel b, InitModel(8, ModelVariant::kTwoBranch, 42));
  ASSERT_OK_AND_ASSIGN(AuditModel c, InitModel(8, ModelVariant::kTwoBranch, 43));
  ASSERT_EQ(a.num_params(), b.num_params());
  EXPECT_EQ(std::memcmp(a.params().data(), b.params().data(),
                        a.num_params() * sizeof(double)),
            0);
  EXPECT_NE(a.params()[0], c.params()[0]);
}

TEST(AuditModelTest, InitDrawsNormalWeightsAndZeroBiases) {
  ASSERT_OK_AND_ASSIGN(AuditModel m, InitModel(32, ModelVariant::kTwoBranch, 7, 0.02));
  double sum = 0.0, sq = 0.0;
  size_t count = 0;
  for (const auto& layer : m.layers()) {
    for (int o = 0; o < layer.out; ++o) EXPECT_EQ(m.params()[layer.bias_offset + o], 0.0);
    for (size_t k = 0; k < size_t(layer.in) * layer.out; ++k) {
      const double w = m.params()[layer.weight_offset + k];
      sum += w;
      sq += w * w;
      ++count;
    }
  }
  const double mean = sum / count;
  EXPECT_NEAR(mean, 0.0, 0.001);
  EXPECT_NEAR(std::sqrt(sq / count - mean * mean), 0.02, 0.001);
}

TEST(AuditModelTest, SigmoidIsStable) {
  EXPECT_EQ(Sigmoid(0.0), 0.5);
  EXPECT_EQ(Sigmoid(1000.0), 1.0);
  EXPECT_EQ(Sigmoid(-1000.0), 0.0);
  EXPECT_NEAR(Sigmoid(2.0) + Sigmoid(-2.0), 1.0, 1e-15);
}

void GradientCheck(ModelVariant variant) {
  std::mt19937_64 rng(99);
  ASSERT_OK_AND_ASSIGN(AuditModel model, InitModel(4, variant, 5, /*init_std=*/0.3));
  const MembershipFeature feature = RandomFeature(rng, 4);
  std::vector<double> analytic(model.num_params());
  ASSERT_OK(ForwardWithGradient(model, feature, analytic).status());

  constexpr double kStep = 1e-5;
  double worst_rel = 0.0;
  int checked = 0;
  for (size_t k = 0; k < model.num_params(); ++k) {
    const double saved = model.params()[k];
    model.params()[k] = saved + kStep;
    const double up = *Forward(model, feature);
    model.params()[k] = saved - kStep;
    const double down = *Forward(model, feature);
    model.params()[k] = saved;
    const double numeric = (up - down) / (2 * kStep);
    const double scale = std::max(std::abs(numeric), std::abs(analytic[k]));
    if (scale < 1e-7) {
      EXPECT_LE(std::abs(numeric - analytic[k]), 1e-9) << "param " << k;
      continue;
    }
    ++checked;
    worst_rel = std::max(worst_rel, std::abs(numeric - analytic[k]) / scale);
  }
  EXPECT_GT(checked, int(model.num_params() / 2));
  EXPECT_LE(worst_rel, 1e-4);
}

TEST(AuditModelTest, GradientMatchesCentralDifferencesTwoBranch) {
  GradientCheck(ModelVariant::kTwoBranch);
}

TEST(AuditModelTest, GradientMatchesCentralDifferencesOneBranch) {
  GradientCheck(ModelVariant::kOneBranch);
}

TEST(AuditModelTest, ArityIsChecked) {
  ASSERT_OK_AND_ASSIGN(AuditModel model, InitModel(4, ModelVariant::kTwoBranch, 0));
  std::mt19937_64 rng(1);
  EXPECT_EQ(Forward(model, RandomFeature(rng, 5)).status().code(),
            absl::StatusCode::kInvalidArgument);
  std::vector<double> small(3);
  EXPECT_FALSE(ForwardWithGradient(model, RandomFeature(rng, 4), small).ok());
}

TEST(AuditModelTest, StreamsSeeOnlyTheirOwnInputs) {
  // In the two-branch model, perturbing d moves only the align stream's
  // first-layer gradient rows onto d and leaves the similarity stream's
  // inputs untouched.
  ASSERT_OK_AND_ASSIGN(AuditModel model, InitModel(4, ModelVariant::kTwoBranch, 3, 0.3));
  MembershipFeature f{"f", {0.0, 0.0, 0.0, 0.0}, {0.5, 0.1, -0.2, 0.3}, 0.0};
  std::vector<double> grad(model.num_params());
  ASSERT_OK(ForwardWithGradient(model, f, grad).status());
  const DenseLayer& align_in = model.layers()[0];
  for (size_t k = 0; k < size_t(align_in.in) * align_in.out; ++k) {
    EXPECT_EQ(grad[align_in.weight_offset + k], 0.0);
  }
}

TEST(CheckpointTest, RoundTripsBitwise) {
  TempDir dir;
  ASSERT_OK_AND_ASSIGN(AuditModel model, InitModel(6, ModelVariant::kOneBranch, 11));
  ASSERT_OK(SaveCheckpoint(dir / "ck/model.json", {model, "enc-7", 42}));
  ASSERT_OK_AND_ASSIGN(Checkpoint back, LoadCheckpoint(dir / "ck/model.json"));
  EXPECT_EQ(back.model, model);
  EXPECT_EQ(back.encoder_id, "enc-7");
  EXPECT_EQ(back.selected_epoch, 42);
  EXPECT_EQ(LoadCheckpoint(dir / "missing.json").status().code(),
            absl::StatusCode::kNotFound);
}

}  // namespace
}  // namespace provaudit
