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

#ifndef PROVAUDIT_TRAINING_H_
#define PROVAUDIT_TRAINING_H_

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"
#include "json.hpp"
#include "provaudit/audit_model.h"
#include "provaudit/features.h"

namespace provaudit {

struct TrainConfig {
  int batch_size = 100;
  double learning_rate = 0.001;
  double weight_decay = 0.0005;
  int epochs = 100;
  double init_std = kDefaultInitStd;
  // Stratified held-out slice of the training features used for per-epoch
  // recalls and recall-balance checkpoint selection.
  double validation_fraction = 0.1;
  // Adam moments.
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  uint64_t seed = 0;
};

absl::Status ValidateTrainConfig(const TrainConfig& config);

enum class Selection { kLastEpoch, kRecallBalance };

std::string_view SelectionName(Selection selection);
absl::StatusOr<Selection> ParseSelection(std::string_view name);

struct EpochRecord {
  int epoch = 0;  // 1-based
  double loss = 0.0;
  double recall_member = 0.0;
  double recall_nonmember = 0.0;
  double balance = 0.0;
  double validation_accuracy = 0.0;
};

// Harmonic mean of member and non-member recall; 0 when both are 0.
double RecallBalanceScore(double recall_member, double recall_nonmember);

// 1-based epoch with the highest balance score; ties go to the earliest.
// Scores closer than this count as tied; ties go to the earliest epoch.
inline constexpr double kBalanceTieTolerance = 1e-12;
bool ImprovesBalance(double candidate, double best);

// Earliest epoch with the highest balance.
absl::StatusOr<int> SelectCheckpointEpoch(std::span<const EpochRecord> history);

// Yields batches with exactly batch_size / 2 members and batch_size / 2
// non-members. An epoch has ceil(max(#members, #non-members) / half)
// batches; each class is drawn from a stream of seeded permutations, so the
// smaller class cycles when exhausted.
class BalancedBatcher {
 public:
  static absl::StatusOr<BalancedBatcher> Create(std::vector<size_t> members,
                                                std::vector<size_t> nonmembers,
                                                int batch_size, uint64_t seed);

  int batches_per_epoch() const { return batches_per_epoch_; }
  int half() const { return half_; }

  // Batches of sample indices for `epoch` (0-based). Pure in (seed, epoch).
  std::vector<std::vector<size_t>> Epoch(int epoch) const;

 private:
  BalancedBatcher() = default;

  std::vector<size_t> members_;
  std::vector<size_t> nonmembers_;
  int half_ = 0;
  int batches_per_epoch_ = 0;
  uint64_t seed_ = 0;
};

struct TrainResult {
  AuditModel model;
  std::vector<EpochRecord> history;
  int selected_epoch = 0;
  double train_accuracy = 0.0;
};

// Minimizes binary cross-entropy with Adam (L2 weight decay folded into the
// gradient). Deterministic for a fixed config seed. Non-finite loss aborts
// with the offending epoch.
absl::StatusOr<TrainResult> Train(const AuditModel& initial,
                                  std::span<const MembershipFeature> features,
                                  const std::vector<bool>& labels,
                                  const TrainConfig& config,
                                  Selection selection);

struct Prediction {
  bool member = false;
  double probability = 0.0;
};

// member iff probability >= threshold.
absl::StatusOr<Prediction> Predict(const AuditModel& model,
                                   const MembershipFeature& feature,
                                   double threshold = 0.5);
bool ThresholdVerdict(double probability, double threshold);

nlohmann::json HistoryToJson(std::span<const EpochRecord> history);

}  // namespace provaudit

#endif  // PROVAUDIT_TRAINING_H_
