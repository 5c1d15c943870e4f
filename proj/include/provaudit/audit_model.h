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

#ifndef PROVAUDIT_AUDIT_MODEL_H_
#define PROVAUDIT_AUDIT_MODEL_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"
#include "provaudit/features.h"

namespace provaudit {

enum class ModelVariant { kTwoBranch, kOneBranch };

std::string_view ModelVariantName(ModelVariant variant);
absl::StatusOr<ModelVariant> ParseModelVariant(std::string_view name);

// Hidden widths. Each stream maps its input to kStreamWidths; the fusion
// stack maps the stream output(s) through kFusionWidths to one logit.
inline constexpr std::array<int, 2> kStreamWidths = {128, 64};
inline constexpr std::array<int, 2> kFusionWidths = {64, 1};
inline constexpr double kDefaultInitStd = 0.02;

// Fully connected layer; weights are row-major [out x in] in the flat
// parameter array, followed by the bias block.
struct DenseLayer {
  int in = 0;
  int out = 0;
  size_t weight_offset = 0;
  size_t bias_offset = 0;
  bool tanh = true;

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

// Per-call activations kept for the backward pass.
struct ForwardCache {
  std::vector<std::vector<double>> inputs;   // per layer
  std::vector<std::vector<double>> outputs;  // per layer, post-activation
  double logit = 0.0;
};

// Two-branch: align stream over d, similarity stream over s, fusion over
// their concatenation. One-branch: a single stream over concat(d, s) feeding
// the same fusion shape. Tanh between fully connected layers; the final
// layer is linear and the probability is its sigmoid.
class AuditModel {
 public:
  static absl::StatusOr<AuditModel> Create(int n, ModelVariant variant,
                                           uint64_t seed);

  int n() const { return n_; }
  ModelVariant variant() const { return variant_; }
  uint64_t seed() const { return seed_; }
  std::span<const DenseLayer> layers() const { return layers_; }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  size_t num_params() const { return params_.size(); }

  // Logit for raw (d, s) inputs; lengths must equal n().
  double Logit(std::span<const double> d, std::span<const double> s) const;
  double LogitCached(std::span<const double> d, std::span<const double> s,
                     ForwardCache& cache) const;

  // grad += dlogit * d(logit)/d(params), using activations in `cache`.
  void Backward(const ForwardCache& cache, double dlogit,
                std::span<double> grad) const;

  friend bool operator==(const AuditModel&, const AuditModel&) = default;

 private:
  AuditModel() = default;

  int n_ = 0;
  ModelVariant variant_ = ModelVariant::kTwoBranch;
  uint64_t seed_ = 0;
  std::vector<DenseLayer> layers_;
  std::vector<double> params_;
};

// Weights ~ Normal(0, init_std), biases exactly 0. Bitwise reproducible for
// a fixed seed.
absl::StatusOr<AuditModel> InitModel(int n, ModelVariant variant, uint64_t seed,
                                     double init_std = kDefaultInitStd);

double Sigmoid(double x);

// Membership probability in [0, 1].
absl::StatusOr<double> Forward(const AuditModel& model,
                               const MembershipFeature& feature);

// Gradient of the output probability with respect to every parameter.
absl::StatusOr<double> ForwardWithGradient(const AuditModel& model,
                                           const MembershipFeature& feature,
                                           std::span<double> grad);

struct Checkpoint {
  AuditModel model;
  std::string encoder_id;
  int selected_epoch = 0;
};

// JSON: header fields (variant, n, widths, seed, encoder_id,
// selected_epoch) plus the flat "params" array.
absl::Status SaveCheckpoint(const std::filesystem::path& path,
                            const Checkpoint& checkpoint);
absl::StatusOr<Checkpoint> LoadCheckpoint(const std::filesystem::path& path);

}  // namespace provaudit

#endif  // PROVAUDIT_AUDIT_MODEL_H_
