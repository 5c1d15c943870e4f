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

#include "provaudit/encoders.h"

#include <cmath>
#include <limits>
#include <random>

#include "gtest/gtest.h"
#include "provaudit/features.h"
#include "test_util.h"

namespace provaudit {
namespace {

TEST(NormalizeTest, ProducesUnitNorm) {
  std::vector<double> v = {3.0, 4.0};
  ASSERT_OK(NormalizeInPlace(v));
  EXPECT_DOUBLE_EQ(v[0], 0.6);
  EXPECT_DOUBLE_EQ(v[1], 0.8);
}

TEST(NormalizeTest, IsIdempotentToRounding) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(1 + trial % 97);
    for (double& x : v) x = normal(rng) * 100.0;
    ASSERT_OK(NormalizeInPlace(v));
    std::vector<double> again = v;
    ASSERT_OK(NormalizeInPlace(again));
    for (size_t k = 0; k < v.size(); ++k) EXPECT_NEAR(again[k], v[k], 1e-15);
  }
}

TEST(NormalizeTest, RejectsZeroAndNonFinite) {
  std::vector<double> zero(4, 0.0);
  EXPECT_FALSE(NormalizeInPlace(zero).ok());
  std::vector<double> nan = {1.0, std::numeric_limits<double>::quiet_NaN()};
  EXPECT_FALSE(NormalizeInPlace(nan).ok());
}

TEST(MockEncoderTest, DeterministicUnitVectors) {
  MockEncoder a(32, 5), b(32, 5);
  ASSERT_OK_AND_ASSIGN(EmbeddingVector x, a.EmbedText("a cat on a mat"));
  ASSERT_OK_AND_ASSIGN(EmbeddingVector y, b.EmbedText("a cat on a mat"));
  EXPECT_EQ(x.values, y.values);
  EXPECT_EQ(x.modality, Modality::kText);
  EXPECT_EQ(x.dim(), 32u);
  EXPECT_NEAR(Cosine(x.values, x.values), 1.0, 1e-12);
}

TEST(MockEncoderTest, SeedAndInputChangeTheEmbedding) {
  MockEncoder a(16, 1), b(16, 2);
  ASSERT_OK_AND_ASSIGN(EmbeddingVector x, a.EmbedText("text"));
  ASSERT_OK_AND_ASSIGN(EmbeddingVector y, b.EmbedText("text"));
  ASSERT_OK_AND_ASSIGN(EmbeddingVector z, a.EmbedText("text2"));
  EXPECT_NE(x.values, y.values);
  EXPECT_NE(x.values, z.values);
  EXPECT_NE(a.Id(), b.Id());
}

TEST(MockEncoderTest, CosineOfEmbeddingsIsBounded) {
  MockEncoder encoder(24, 3);
  RgbImage image(2, 2);
  for (int i = 0; i < 300; ++i) {
    image.pixels[i % image.pixels.size()] = static_cast<uint8_t>(i);
    ASSERT_OK_AND_ASSIGN(EmbeddingVector t, encoder.EmbedText("t" + std::to_string(i)));
    ASSERT_OK_AND_ASSIGN(EmbeddingVector v, encoder.EmbedImage(image));
    EXPECT_EQ(v.modality, Modality::kImage);
    const double c = Cosine(t.values, v.values);
    EXPECT_LE(std::abs(c), 1.0 + 1e-12);
  }
}

TEST(MockEncoderTest, RejectsEmptyTextAndInvalidImages) {
  MockEncoder encoder(8, 0);
  EXPECT_EQ(encoder.EmbedText("").status().code(),
            absl::StatusCode::kInvalidArgument);
  EXPECT_FALSE(encoder.EmbedImage(RgbImage()).ok());
}

TEST(MockEncoderTest, SharesOneSpace) {
  EXPECT_OK(CheckSharedSpace(MockEncoder(8, 0)));
  EXPECT_FALSE(CheckSharedSpace(MockEncoder(0, 0)).ok());
}

class LopsidedEncoder : public MockEncoder {
 public:
  LopsidedEncoder() : MockEncoder(8, 0) {}
  int ImageDim() const override { return 4; }
};

TEST(MockEncoderTest, MismatchedTowersAreRejected) {
  EXPECT_EQ(CheckSharedSpace(LopsidedEncoder()).code(),
            absl::StatusCode::kFailedPrecondition);
}

TEST(MockCaptionerTest, CaptionFollowsImageContent) {
  MockCaptioner captioner;
  RgbImage a(2, 2), b(2, 2);
  b.pixels[0] = 9;
  ASSERT_OK_AND_ASSIGN(std::string ca, CaptionImage(captioner, a));
  ASSERT_OK_AND_ASSIGN(std::string cb, CaptionImage(captioner, b));
  ASSERT_OK_AND_ASSIGN(std::string ca2, CaptionImage(captioner, a));
  EXPECT_EQ(ca.rfind("img-", 0), 0u);
  EXPECT_EQ(ca, ca2);
  EXPECT_NE(ca, cb);
}

class SilentCaptioner : public Captioner {
 public:
  std::string Id() const override { return "silent"; }
  absl::StatusOr<std::string> Caption(const RgbImage&) const override {
    return std::string();
  }
};

TEST(MockCaptionerTest, EmptyCaptionIsAnError) {
  EXPECT_FALSE(CaptionImage(SilentCaptioner(), RgbImage(1, 1)).ok());
}

}  // namespace
}  // namespace provaudit
