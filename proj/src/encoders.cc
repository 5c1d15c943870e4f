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
#include <random>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "provaudit/digest.h"
#include "provaudit/status_macros.h"

namespace provaudit {

absl::Status NormalizeInPlace(std::span<double> values) {
  double sq = 0.0;
  for (double v : values) {
    if (!std::isfinite(v)) {
      return absl::InvalidArgumentError("non-finite embedding entry");
    }
    sq += v * v;
  }
  if (sq <= 0.0) return absl::InvalidArgumentError("zero embedding vector");
  const double inv = 1.0 / std::sqrt(sq);
  for (double& v : values) v *= inv;
  return absl::OkStatus();
}

absl::StatusOr<EmbeddingVector> Encoder::EmbedText(
    std::string_view text) const {
  if (text.empty()) return absl::InvalidArgumentError("empty text");
  ASSIGN_OR_RETURN(std::vector<double> raw, RawText(text));
  if (static_cast<int>(raw.size()) != TextDim()) {
    return absl::InternalError("text tower returned wrong dimension");
  }
  RETURN_IF_ERROR(NormalizeInPlace(raw));
  return EmbeddingVector{std::move(raw), Modality::kText};
}

absl::StatusOr<EmbeddingVector> Encoder::EmbedImage(
    const RgbImage& image) const {
  RETURN_IF_ERROR(ValidateImage(image));
  ASSIGN_OR_RETURN(std::vector<double> raw, RawImage(image));
  if (static_cast<int>(raw.size()) != ImageDim()) {
    return absl::InternalError("image tower returned wrong dimension");
  }
  RETURN_IF_ERROR(NormalizeInPlace(raw));
  return EmbeddingVector{std::move(raw), Modality::kImage};
}

absl::Status CheckSharedSpace(const Encoder& encoder) {
  if (encoder.TextDim() != encoder.ImageDim()) {
    return absl::FailedPreconditionError(absl::StrCat(
        "encoder ", encoder.Id(), " embeds text in dimension ",
        encoder.TextDim(), " but images in dimension ", encoder.ImageDim()));
  }
  if (encoder.TextDim() < 1) {
    return absl::FailedPreconditionError("encoder dimension must be positive");
  }
  return absl::OkStatus();
}

std::vector<double> SeededGaussianVector(std::string_view key, uint64_t seed,
                                         int dim) {
  std::string buf = absl::StrCat(seed, "|");
  buf.append(key);
  std::mt19937_64 rng(Sha256Prefix64(buf));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> out(dim);
  for (double& v : out) v = normal(rng);
  return out;
}

std::string MockEncoder::Id() const {
  return absl::StrCat("mock-d", dim_, "-s", seed_);
}

absl::StatusOr<std::vector<double>> MockEncoder::RawText(
    std::string_view text) const {
  return SeededGaussianVector(absl::StrCat("text:", std::string(text)), seed_, dim_);
}

absl::StatusOr<std::vector<double>> MockEncoder::RawImage(
    const RgbImage& image) const {
  return SeededGaussianVector(absl::StrCat("image:", ImageDigest(image)), seed_,
                              dim_);
}

absl::StatusOr<std::string> CaptionImage(const Captioner& captioner,
                                         const RgbImage& image) {
  RETURN_IF_ERROR(ValidateImage(image));
  ASSIGN_OR_RETURN(std::string caption, captioner.Caption(image));
  if (caption.empty()) {
    return absl::InternalError(
        absl::StrCat("captioner ", captioner.Id(), " returned empty caption"));
  }
  return caption;
}

absl::StatusOr<std::string> MockCaptioner::Caption(const RgbImage& image) const {
  return absl::StrCat("img-", ImageDigest(image).substr(0, 16));
}

}  // namespace provaudit
