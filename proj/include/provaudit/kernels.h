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

#ifndef PROVAUDIT_KERNELS_H_
#define PROVAUDIT_KERNELS_H_

#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "provaudit/audit_model.h"
#include "provaudit/encoders.h"
#include "provaudit/features.h"

// Batch kernels over many samples. Each has a serial reference and an
// OpenMP version; both produce bit-identical results.
namespace provaudit::kernels {

struct SampleEmbeddings {
  std::string sample_id;
  EmbeddingVector text;
  EmbeddingVector image;
  std::vector<EmbeddingVector> generated;
};

absl::StatusOr<MembershipFeature> FeatureForSample(const SampleEmbeddings& sample,
                                                   bool sort);

absl::StatusOr<std::vector<MembershipFeature>> BuildFeaturesSerial(
    std::span<const SampleEmbeddings> samples, bool sort = true);
absl::StatusOr<std::vector<MembershipFeature>> BuildFeaturesParallel(
    std::span<const SampleEmbeddings> samples, bool sort = true);

absl::StatusOr<std::vector<double>> PredictProbabilitiesSerial(
    const AuditModel& model, std::span<const MembershipFeature> features);
absl::StatusOr<std::vector<double>> PredictProbabilitiesParallel(
    const AuditModel& model, std::span<const MembershipFeature> features);

// Parallel over generated images; matches PixelErrorScore exactly.
absl::StatusOr<double> PixelErrorScoreParallel(const RgbImage& image,
                                               std::span<const RgbImage> generated,
                                               int side = kPixelErrorSide);

}  // namespace provaudit::kernels

#endif  // PROVAUDIT_KERNELS_H_
