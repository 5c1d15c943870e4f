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

#include <algorithm>
#include <limits>

#include "absl/status/status.h"
#include "provaudit/status_macros.h"

namespace provaudit::kernels {
namespace {

template <typename T>
absl::StatusOr<std::vector<T>> Collect(std::vector<absl::StatusOr<T>>& slots) {
  std::vector<T> out;
  out.reserve(slots.size());
  for (auto& slot : slots) {
    if (!slot.ok()) return slot.status();
    out.push_back(*std::move(slot));
  }
  return out;
}

}  // namespace

absl::StatusOr<MembershipFeature> FeatureForSample(const SampleEmbeddings& sample,
                                                   bool sort) {
  ASSIGN_OR_RETURN(std::vector<double> alignments,
                   AlignmentScores(sample.text, sample.generated));
  ASSIGN_OR_RETURN(double base, AlignmentBase(sample.text, sample.image));
  ASSIGN_OR_RETURN(std::vector<double> similarities,
                   SimilarityScores(sample.image, sample.generated));
  return BuildFeature(alignments, base, similarities, sample.sample_id, sort);
}

absl::StatusOr<std::vector<MembershipFeature>> BuildFeaturesSerial(
    std::span<const SampleEmbeddings> samples, bool sort) {
  std::vector<MembershipFeature> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    ASSIGN_OR_RETURN(MembershipFeature f, FeatureForSample(s, sort));
    out.push_back(std::move(f));
  }
  return out;
}

absl::StatusOr<std::vector<MembershipFeature>> BuildFeaturesParallel(
    std::span<const SampleEmbeddings> samples, bool sort) {
  std::vector<absl::StatusOr<MembershipFeature>> slots(samples.size());
  const int64_t count = static_cast<int64_t>(samples.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (int64_t i = 0; i < count; ++i) {
    slots[i] = FeatureForSample(samples[i], sort);
  }
  return Collect(slots);
}

absl::StatusOr<std::vector<double>> PredictProbabilitiesSerial(
    const AuditModel& model, std::span<const MembershipFeature> features) {
  std::vector<double> out;
  out.reserve(features.size());
  for (const auto& f : features) {
    ASSIGN_OR_RETURN(double p, Forward(model, f));
    out.push_back(p);
  }
  return out;
}

absl::StatusOr<std::vector<double>> PredictProbabilitiesParallel(
    const AuditModel& model, std::span<const MembershipFeature> features) {
  std::vector<absl::StatusOr<double>> slots(features.size());
  const int64_t count = static_cast<int64_t>(features.size());
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < count; ++i) slots[i] = Forward(model, features[i]);
  return Collect(slots);
}

absl::StatusOr<double> PixelErrorScoreParallel(const RgbImage& image,
                                               std::span<const RgbImage> generated,
                                               int side) {
  if (generated.empty()) {
    return absl::InvalidArgumentError("pixel error needs a generated image");
  }
  if (side < 1) return absl::InvalidArgumentError("side must be positive");
  RETURN_IF_ERROR(ValidateImage(image));
  for (const auto& g : generated) RETURN_IF_ERROR(ValidateImage(g));
  const std::vector<double> reference = ResampleUnitSquare(image, side);
  const int64_t count = static_cast<int64_t>(generated.size());
  double best = std::numeric_limits<double>::infinity();
#pragma omp parallel for reduction(min : best) schedule(static)
  for (int64_t i = 0; i < count; ++i) {
    best = std::min(best,
                    MeanSquaredError(reference, ResampleUnitSquare(generated[i], side)));
  }
  return best;
}

}  // namespace provaudit::kernels
