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

#include "provaudit/kernels.h"

#include <omp.h>

#include <random>

#include "gtest/gtest.h"
#include "test_util.h"

namespace provaudit::kernels {
namespace {

using ::provaudit::testing::RandomEmbedding;

std::vector<SampleEmbeddings> RandomSamples(int count, int n, int dim, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<SampleEmbeddings> out(count);
  for (int i = 0; i < count; ++i) {
    out[i].sample_id = "s" + std::to_string(i);
    out[i].text = RandomEmbedding(rng, dim, Modality::kText);
    out[i].image = RandomEmbedding(rng, dim, Modality::kImage);
    for (int k = 0; k < n; ++k) out[i].generated.push_back(RandomEmbedding(rng, dim));
  }
  return out;
}

class KernelsTest : public ::testing::TestWithParam<int> {
 protected:
  void SetUp() override { omp_set_num_threads(GetParam()); }
};

TEST_P(KernelsTest, FeaturesBitwiseEqualToSerial) {
  const auto samples = RandomSamples(517, 16, 64, 1);
  for (bool sort : {true, false}) {
    ASSERT_OK_AND_ASSIGN(auto serial, BuildFeaturesSerial(samples, sort));
    ASSERT_OK_AND_ASSIGN(auto parallel, BuildFeaturesParallel(samples, sort));
    EXPECT_EQ(serial, parallel);
  }
}

TEST_P(KernelsTest, PredictionsBitwiseEqualToSerial) {
  const auto samples = RandomSamples(300, 8, 32, 2);
  ASSERT_OK_AND_ASSIGN(auto features, BuildFeaturesSerial(samples));
  ASSERT_OK_AND_ASSIGN(AuditModel model,
                       InitModel(8, ModelVariant::kTwoBranch, 5, /*init_std=*/0.3));
  ASSERT_OK_AND_ASSIGN(auto serial, PredictProbabilitiesSerial(model, features));
  ASSERT_OK_AND_ASSIGN(auto parallel, PredictProbabilitiesParallel(model, features));
  EXPECT_EQ(serial, parallel);
}

TEST_P(KernelsTest, PixelErrorEqualToSerial) {
  std::mt19937_64 rng(3);
  auto random_image = [&](int w, int h) {
    RgbImage img(w, h);
    for (auto& b : img.pixels) b = rng() & 0xff;
    return img;
  };
  const RgbImage image = random_image(40, 30);
  std::vector<RgbImage> generated;
  for (int i = 0; i < 9; ++i) generated.push_back(random_image(20 + i, 50 - i));
  ASSERT_OK_AND_ASSIGN(double serial, PixelErrorScore(image, generated));
  ASSERT_OK_AND_ASSIGN(double parallel, PixelErrorScoreParallel(image, generated));
  EXPECT_EQ(serial, parallel);
}

TEST_P(KernelsTest, ErrorsPropagate) {
  auto samples = RandomSamples(50, 4, 16, 4);
  std::mt19937_64 rng(0);
  samples[31].generated.back() = RandomEmbedding(rng, 8);  // wrong dimension
  EXPECT_FALSE(BuildFeaturesSerial(samples).ok());
  EXPECT_FALSE(BuildFeaturesParallel(samples).ok());
  EXPECT_FALSE(PixelErrorScoreParallel(RgbImage(1, 1), {}).ok());
}

INSTANTIATE_TEST_SUITE_P(Threads, KernelsTest, ::testing::Values(1, 2, 4, 7));

}  // namespace
}  // namespace provaudit::kernels
