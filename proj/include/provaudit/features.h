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

#ifndef PROVAUDIT_FEATURES_H_
#define PROVAUDIT_FEATURES_H_

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "provaudit/encoders.h"
#include "provaudit/image.h"

namespace provaudit {

// Input to the auditing model for one text-image pair.
//   align_diffs[i]  = cos(text, generated_i) - base
//   similarities[i] = cos(image, generated_i)
//   base            = cos(text, image)
// Both vectors are sorted descending unless built with sort = false.
struct MembershipFeature {
  std::string sample_id;
  std::vector<double> align_diffs;
  std::vector<double> similarities;
  double base = 0.0;

  int n() const { return static_cast<int>(align_diffs.size()); }

  friend bool operator==(const MembershipFeature&,
                         const MembershipFeature&) = default;
};

// Plain dot product; inputs are unit vectors so this is the cosine.
double Cosine(std::span<const double> a, std::span<const double> b);

absl::StatusOr<std::vector<double>> AlignmentScores(
    const EmbeddingVector& text, std::span<const EmbeddingVector> generated);
absl::StatusOr<double> AlignmentBase(const EmbeddingVector& text,
                                     const EmbeddingVector& image);
absl::StatusOr<std::vector<double>> SimilarityScores(
    const EmbeddingVector& image, std::span<const EmbeddingVector> generated);

absl::StatusOr<MembershipFeature> BuildFeature(std::span<const double> alignments,
                                               double base,
                                               std::span<const double> similarities,
                                               std::string sample_id,
                                               bool sort = true);

inline constexpr int kPixelErrorSide = 64;

// Black-box reconstruction baseline: min over generated images of the mean
// squared error after resampling both sides to `side` x `side` in [0, 1].
// Lower is more member-like.
absl::StatusOr<double> PixelErrorScore(const RgbImage& image,
                                       std::span<const RgbImage> generated,
                                       int side = kPixelErrorSide);

double MeanSquaredError(std::span<const double> a, std::span<const double> b);

// One row of a feature file.
struct FeatureRecord {
  MembershipFeature feature;
  std::string fingerprint;  // generation batch the row was built from
  std::optional<double> pixel_error;
};

// Feature file: JSON lines. The first line is a header
//   {"format": "provaudit-features/1", "encoder_id", "n", "sorted"}
// and each further line one record
//   {"id", "d", "s", "base", "encoder_id", "n", "fingerprint"[, "pixel_error"]}.
struct FeatureTable {
  std::string encoder_id;
  int n = 0;
  bool sorted = true;
  std::vector<FeatureRecord> rows;

  const FeatureRecord* Find(std::string_view sample_id) const;
};

absl::Status WriteFeatureTable(const std::filesystem::path& path,
                               const FeatureTable& table);
// Rejects files whose rows disagree with the header on encoder or N.
absl::StatusOr<FeatureTable> ReadFeatureTable(const std::filesystem::path& path);

}  // namespace provaudit

#endif  // PROVAUDIT_FEATURES_H_
