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

#ifndef PROVAUDIT_METRICS_H_
#define PROVAUDIT_METRICS_H_

#include <cstdint>
#include <span>
#include <vector>

#include "absl/status/statusor.h"
#include "json.hpp"

namespace provaudit {

struct ConfusionCounts {
  int64_t tp = 0;
  int64_t fp = 0;
  int64_t tn = 0;
  int64_t fn = 0;
};

// Confusion-derived rates. A ratio with a zero denominator is reported as 0
// and flagged.
struct BasicMetrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  ConfusionCounts counts;
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f1_undefined = false;
};

BasicMetrics MetricsFromCounts(const ConfusionCounts& counts);

absl::StatusOr<BasicMetrics> ComputeBasicMetrics(const std::vector<bool>& labels,
                                                 const std::vector<bool>& verdicts);

// Mann-Whitney form: P(member score > non-member score) + P(tie) / 2.
absl::StatusOr<double> RocAuc(const std::vector<bool>& labels,
                              std::span<const double> scores);

inline constexpr double kDefaultFprTarget = 0.01;

// Highest TPR among thresholds with FPR <= target, sweeping every distinct
// score (predict member iff score >= threshold) plus +infinity. No
// interpolation.
absl::StatusOr<double> TprAtFpr(const std::vector<bool>& labels,
                                std::span<const double> scores,
                                double fpr_target = kDefaultFprTarget);

struct RocPoint {
  double threshold = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;
};

// Step ROC, starting at (+inf, 0, 0) and ending at (min score, 1, 1).
absl::StatusOr<std::vector<RocPoint>> RocCurve(const std::vector<bool>& labels,
                                               std::span<const double> scores);

struct EvalReport {
  BasicMetrics basic;
  double auc = 0.0;
  double tpr_at_fpr = 0.0;
  double fpr_target = kDefaultFprTarget;
  double threshold = 0.5;
};

// Verdicts use `probability >= threshold`; AUC and TPR@FPR use raw scores.
absl::StatusOr<EvalReport> Evaluate(const std::vector<bool>& labels,
                                    std::span<const double> probabilities,
                                    double threshold = 0.5,
                                    double fpr_target = kDefaultFprTarget);

nlohmann::json ToJson(const BasicMetrics& metrics);
nlohmann::json ToJson(const EvalReport& report);

}  // namespace provaudit

#endif  // PROVAUDIT_METRICS_H_
