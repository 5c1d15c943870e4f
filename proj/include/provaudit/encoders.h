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

#ifndef PROVAUDIT_ENCODERS_H_
#define PROVAUDIT_ENCODERS_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"
#include "provaudit/image.h"

namespace provaudit {

enum class Modality { kText, kImage };

// A point in the shared text/image representation space. Vectors handed out
// by Encoder are unit L2 norm.
struct EmbeddingVector {
  std::vector<double> values;
  Modality modality = Modality::kText;

  size_t dim() const { return values.size(); }
};

// Scales `values` to unit L2 norm. Fails on zero or non-finite input.
absl::Status NormalizeInPlace(std::span<double> values);

// A multimodal encoder pair (text tower + image tower). The same instance
// embeds real and generated images within one audit run.
class Encoder {
 public:
  virtual ~Encoder() = default;

  // Name plus weight digest; stamped into every feature file.
  virtual std::string Id() const = 0;
  virtual int TextDim() const = 0;
  virtual int ImageDim() const = 0;

  absl::StatusOr<EmbeddingVector> EmbedText(std::string_view text) const;
  absl::StatusOr<EmbeddingVector> EmbedImage(const RgbImage& image) const;

 protected:
  virtual absl::StatusOr<std::vector<double>> RawText(
      std::string_view text) const = 0;
  virtual absl::StatusOr<std::vector<double>> RawImage(
      const RgbImage& image) const = 0;
};

// Rejects encoders whose text and image towers disagree on dimension.
absl::Status CheckSharedSpace(const Encoder& encoder);

// Seeded pseudo-random unit vector from `key`. Pure function of its inputs.
std::vector<double> SeededGaussianVector(std::string_view key, uint64_t seed,
                                         int dim);

// Deterministic stand-in: text and image bytes are hashed into seeded
// Gaussian directions.
class MockEncoder : public Encoder {
 public:
  MockEncoder(int dim, uint64_t seed) : dim_(dim), seed_(seed) {}

  std::string Id() const override;
  int TextDim() const override { return dim_; }
  int ImageDim() const override { return dim_; }

 protected:
  absl::StatusOr<std::vector<double>> RawText(
      std::string_view text) const override;
  absl::StatusOr<std::vector<double>> RawImage(
      const RgbImage& image) const override;

  int dim_;
  uint64_t seed_;
};

class Captioner {
 public:
  virtual ~Captioner() = default;
  virtual std::string Id() const = 0;
  virtual absl::StatusOr<std::string> Caption(const RgbImage& image) const = 0;
};

// Wraps Captioner::Caption and enforces a non-empty result.
absl::StatusOr<std::string> CaptionImage(const Captioner& captioner,
                                         const RgbImage& image);

// Captions are "img-<first 16 hex digits of the image digest>".
class MockCaptioner : public Captioner {
 public:
  std::string Id() const override { return "mock-captioner"; }
  absl::StatusOr<std::string> Caption(const RgbImage& image) const override;
};

}  // namespace provaudit

#endif  // PROVAUDIT_ENCODERS_H_
