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

#include "provaudit/training.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "provaudit/corpus.h"
#include "provaudit/digest.h"
#include "provaudit/status_macros.h"

namespace provaudit {
namespace {

uint64_t DeriveSeed(uint64_t seed, std::string_view purpose, int64_t index) {
  return Sha256Prefix64(absl::StrCat(std::string(purpose), "|", seed, "|", index));
}

// Endless stream of seeded permutations of `pool`.
class PermutationStream {
 public:
  PermutationStream(std::span<const size_t> pool, uint64_t seed)
      : pool_(pool), rng_(seed) {}

  size_t Next() {
    if (pos_ == order_.size()) {
      order_.assign(pool_.begin(), pool_.end());
      std::shuffle(order_.begin(), order_.end(), rng_);
      pos_ = 0;
    }
    return order_[pos_++];
  }

 private:
  std::span<const size_t> pool_;
  std::mt19937_64 rng_;
  std::vector<size_t> order_;
  size_t pos_ = 0;
};

double BinaryCrossEntropyFromLogit(double logit, bool label) {
  // log(1 + exp(-|x|)) + max(x, 0) - x * y
  const double y = label ? 1.0 : 0.0;
  return std::max(logit, 0.0) - logit * y + std::log1p(std::exp(-std::abs(logit)));
}

struct SliceMetrics {
  double recall_member = 0.0;
  double recall_nonmember = 0.0;
  double accuracy = 0.0;
};

SliceMetrics Measure(const AuditModel& model,
                     std::span<const MembershipFeature> features,
                     const std::vector<bool>& labels,
                     std::span<const size_t> indices) {
  int64_t pos = 0, neg = 0, tp = 0, tn = 0;
  for (size_t idx : indices) {
    const auto& f = features[idx];
    const bool verdict =
        ThresholdVerdict(Sigmoid(model.Logit(f.align_diffs, f.similarities)), 0.5);
    if (labels[idx]) {
      ++pos;
      tp += verdict;
    } else {
      ++neg;
      tn += !verdict;
    }
  }
  SliceMetrics m;
  m.recall_member = pos ? double(tp) / pos : 0.0;
  m.recall_nonmember = neg ? double(tn) / neg : 0.0;
  m.accuracy = indices.empty() ? 0.0 : double(tp + tn) / indices.size();
  return m;
}

}  // namespace

absl::Status ValidateTrainConfig(const TrainConfig& config) {
  if (config.batch_size < 2 || config.batch_size % 2 != 0) {
    return absl::InvalidArgumentError("batch_size must be even and >= 2");
  }
  if (config.epochs < 1) return absl::InvalidArgumentError("epochs must be >= 1");
  if (!(config.learning_rate > 0.0)) {
    return absl::InvalidArgumentError("learning_rate must be positive");
  }
  if (config.weight_decay < 0.0) {
    return absl::InvalidArgumentError("weight_decay must be non-negative");
  }
  if (!(config.validation_fraction >= 0.0 && config.validation_fraction < 1.0)) {
    return absl::InvalidArgumentError("validation_fraction must lie in [0, 1)");
  }
  return absl::OkStatus();
}

std::string_view SelectionName(Selection selection) {
  return selection == Selection::kLastEpoch ? "last_epoch" : "recall_balance";
}

absl::StatusOr<Selection> ParseSelection(std::string_view name) {
  if (name == "last_epoch") return Selection::kLastEpoch;
  if (name == "recall_balance") return Selection::kRecallBalance;
  return absl::InvalidArgumentError(absl::StrCat("unknown selection ", std::string(name)));
}

double RecallBalanceScore(double recall_member, double recall_nonmember) {
  const double lo = std::min(recall_member, recall_nonmember);
  const double hi = std::max(recall_member, recall_nonmember);
  if (hi + lo == 0.0) return 0.0;
  // 2ab/(a+b) rewritten as lo + lo(hi-lo)/(hi+lo): symmetric bit for bit and
  // exact when the recalls are equal.
  return lo + lo * (hi - lo) / (hi + lo);
}

bool ImprovesBalance(double candidate, double best) {
  return candidate > best + kBalanceTieTolerance;
}

absl::StatusOr<int> SelectCheckpointEpoch(std::span<const EpochRecord> history) {
  if (history.empty()) return absl::InvalidArgumentError("empty history");
  size_t best = 0;
  for (size_t i = 1; i < history.size(); ++i) {
    if (ImprovesBalance(history[i].balance, history[best].balance)) best = i;
  }
  return history[best].epoch;
}

absl::StatusOr<BalancedBatcher> BalancedBatcher::Create(
    std::vector<size_t> members, std::vector<size_t> nonmembers, int batch_size,
    uint64_t seed) {
  if (members.empty() || nonmembers.empty()) {
    return absl::InvalidArgumentError(
        "balanced batches need both members and non-members");
  }
  if (batch_size < 2 || batch_size % 2 != 0) {
    return absl::InvalidArgumentError("batch_size must be even and >= 2");
  }
  BalancedBatcher b;
  b.half_ = batch_size / 2;
  const size_t larger = std::max(members.size(), nonmembers.size());
  b.batches_per_epoch_ = static_cast<int>((larger + b.half_ - 1) / b.half_);
  b.members_ = std::move(members);
  b.nonmembers_ = std::move(nonmembers);
  b.seed_ = seed;
  return b;
}

std::vector<std::vector<size_t>> BalancedBatcher::Epoch(int epoch) const {
  PermutationStream pos(members_, DeriveSeed(seed_, "members", epoch));
  PermutationStream neg(nonmembers_, DeriveSeed(seed_, "nonmembers", epoch));
  std::vector<std::vector<size_t>> batches(batches_per_epoch_);
  for (auto& batch : batches) {
    batch.reserve(2 * half_);
    for (int k = 0; k < half_; ++k) batch.push_back(pos.Next());
    for (int k = 0; k < half_; ++k) batch.push_back(neg.Next());
  }
  return batches;
}

absl::StatusOr<TrainResult> Train(const AuditModel& initial,
                                  std::span<const MembershipFeature> features,
                                  const std::vector<bool>& labels,
                                  const TrainConfig& config,
                                  Selection selection) {
  RETURN_IF_ERROR(ValidateTrainConfig(config));
  if (features.size() != labels.size()) {
    return absl::InvalidArgumentError("features and labels differ in length");
  }
  for (const auto& f : features) {
    if (f.n() != initial.n() ||
        static_cast<int>(f.similarities.size()) != initial.n()) {
      return absl::InvalidArgumentError(absl::StrCat(
          "feature ", f.sample_id, " has N=", f.n(), ", model expects ",
          initial.n()));
    }
  }

  // Stratified validation slice.
  std::vector<size_t> members, nonmembers;
  for (size_t i = 0; i < labels.size(); ++i) {
    (labels[i] ? members : nonmembers).push_back(i);
  }
  std::mt19937_64 split_rng(DeriveSeed(config.seed, "validation", 0));
  std::shuffle(members.begin(), members.end(), split_rng);
  std::shuffle(nonmembers.begin(), nonmembers.end(), split_rng);
  std::vector<size_t> val, train_m, train_n;
  auto carve = [&](const std::vector<size_t>& pool, std::vector<size_t>& train) {
    int64_t k = config.validation_fraction > 0.0
                    ? std::max<int64_t>(
                          1, ProportionCount(pool.size(),
                                             config.validation_fraction))
                    : 0;
    if (k >= int64_t(pool.size())) k = int64_t(pool.size()) - 1;
    val.insert(val.end(), pool.begin(), pool.begin() + std::max<int64_t>(k, 0));
    train.assign(pool.begin() + std::max<int64_t>(k, 0), pool.end());
  };
  carve(members, train_m);
  carve(nonmembers, train_n);
  std::sort(val.begin(), val.end());
  if (selection == Selection::kRecallBalance && val.empty()) {
    return absl::FailedPreconditionError(
        "recall-balance selection needs a validation slice");
  }
  std::vector<size_t> train_all(train_m);
  train_all.insert(train_all.end(), train_n.begin(), train_n.end());
  std::sort(train_all.begin(), train_all.end());
  const std::span<const size_t> eval_slice =
      val.empty() ? std::span<const size_t>(train_all) : std::span<const size_t>(val);

  ASSIGN_OR_RETURN(BalancedBatcher batcher,
                   BalancedBatcher::Create(train_m, train_n, config.batch_size,
                                           DeriveSeed(config.seed, "batches", 0)));

  AuditModel model = initial;
  std::span<double> params = model.params();
  const size_t P = params.size();
  std::vector<double> grad(P), m1(P, 0.0), m2(P, 0.0);
  ForwardCache cache;
  int64_t step = 0;

  TrainResult result{model, {}, 0, 0.0};
  double best_balance = -1.0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double loss_sum = 0.0;
    int64_t loss_count = 0;
    for (const auto& batch : batcher.Epoch(epoch)) {
      std::fill(grad.begin(), grad.end(), 0.0);
      const double scale = 1.0 / batch.size();
      for (size_t idx : batch) {
        const auto& f = features[idx];
        const double logit = model.LogitCached(f.align_diffs, f.similarities, cache);
        const double loss = BinaryCrossEntropyFromLogit(logit, labels[idx]);
        if (!std::isfinite(loss)) {
          return absl::InternalError(
              absl::StrCat("training diverged at epoch ", epoch + 1));
        }
        loss_sum += loss;
        ++loss_count;
        const double y = labels[idx] ? 1.0 : 0.0;
        model.Backward(cache, (Sigmoid(logit) - y) * scale, grad);
      }
      ++step;
      const double bc1 = 1.0 - std::pow(config.beta1, double(step));
      const double bc2 = 1.0 - std::pow(config.beta2, double(step));
      for (size_t k = 0; k < P; ++k) {
        const double g = grad[k] + config.weight_decay * params[k];
        m1[k] = config.beta1 * m1[k] + (1.0 - config.beta1) * g;
        m2[k] = config.beta2 * m2[k] + (1.0 - config.beta2) * g * g;
        const double mhat = m1[k] / bc1;
        const double vhat = m2[k] / bc2;
        params[k] -= config.learning_rate * mhat / (std::sqrt(vhat) + config.epsilon);
      }
    }
    const double mean_loss = loss_sum / std::max<int64_t>(loss_count, 1);
    if (!std::isfinite(mean_loss)) {
      return absl::InternalError(
          absl::StrCat("training diverged at epoch ", epoch + 1));
    }
    const SliceMetrics m = Measure(model, features, labels, eval_slice);
    EpochRecord record{epoch + 1,
                       mean_loss,
                       m.recall_member,
                       m.recall_nonmember,
                       RecallBalanceScore(m.recall_member, m.recall_nonmember),
                       m.accuracy};
    result.history.push_back(record);
    if (selection == Selection::kRecallBalance && ImprovesBalance(record.balance, best_balance)) {
      best_balance = record.balance;
      result.model = model;
      result.selected_epoch = record.epoch;
    }
  }
  if (selection == Selection::kLastEpoch) {
    result.model = model;
    result.selected_epoch = config.epochs;
  }
  result.train_accuracy =
      Measure(result.model, features, labels, train_all).accuracy;
  return result;
}

bool ThresholdVerdict(double probability, double threshold) {
  return probability >= threshold;
}

absl::StatusOr<Prediction> Predict(const AuditModel& model,
                                   const MembershipFeature& feature,
                                   double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    return absl::InvalidArgumentError("threshold must lie in (0, 1)");
  }
  ASSIGN_OR_RETURN(double p, Forward(model, feature));
  return Prediction{ThresholdVerdict(p, threshold), p};
}

nlohmann::json HistoryToJson(std::span<const EpochRecord> history) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : history) {
    out.push_back({{"epoch", r.epoch},
                   {"loss", r.loss},
                   {"recall_member", r.recall_member},
                   {"recall_nonmember", r.recall_nonmember},
                   {"balance", r.balance},
                   {"validation_accuracy", r.validation_accuracy}});
  }
  return out;
}

}  // namespace provaudit
