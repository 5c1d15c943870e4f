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

#include "provaudit/metrics.h"

#include <algorithm>
#include <numeric>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "provaudit/status_macros.h"
#include "provaudit/training.h"

namespace provaudit {
namespace {

absl::Status CheckScored(const std::vector<bool>& labels,
                         std::span<const double> scores) {
  if (labels.size() != scores.size()) {
    return absl::InvalidArgumentError("labels and scores differ in length");
  }
  const auto positives = std::count(labels.begin(), labels.end(), true);
  if (positives == 0 || positives == static_cast<int64_t>(labels.size())) {
    return absl::InvalidArgumentError("both classes must be present");
  }
  return absl::OkStatus();
}

// Indices ordered by descending score.
std::vector<size_t> DescendingOrder(std::span<const double> scores) {
  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return scores[a] > scores[b]; });
  return order;
}

}  // namespace

BasicMetrics MetricsFromCounts(const ConfusionCounts& c) {
  BasicMetrics m;
  m.counts = c;
  const int64_t total = c.tp + c.fp + c.tn + c.fn;
  m.accuracy = total ? double(c.tp + c.tn) / total : 0.0;
  if (c.tp + c.fp > 0) {
    m.precision = double(c.tp) / (c.tp + c.fp);
  } else {
    m.precision_undefined = true;
  }
  if (c.tp + c.fn > 0) {
    m.recall = double(c.tp) / (c.tp + c.fn);
  } else {
    m.recall_undefined = true;
  }
  if (m.precision + m.recall > 0.0) {
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  } else {
    m.f1_undefined = true;
  }
  return m;
}

absl::StatusOr<BasicMetrics> ComputeBasicMetrics(
    const std::vector<bool>& labels, const std::vector<bool>& verdicts) {
  if (labels.empty() || labels.size() != verdicts.size()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "need equal non-empty inputs, got ", labels.size(), " labels and ",
        verdicts.size(), " verdicts"));
  }
  ConfusionCounts c;
  for (size_t i = 0; i < labels.size(); ++i) {
    if (labels[i]) {
      (verdicts[i] ? c.tp : c.fn)++;
    } else {
      (verdicts[i] ? c.fp : c.tn)++;
    }
  }
  return MetricsFromCounts(c);
}

absl::StatusOr<double> RocAuc(const std::vector<bool>& labels,
                              std::span<const double> scores) {
  RETURN_IF_ERROR(CheckScored(labels, scores));
  const auto order = DescendingOrder(scores);
  const double P = std::count(labels.begin(), labels.end(), true);
  const double N = labels.size() - P;
  // Walk tie groups from the top; each positive beats every negative strictly
  // below it and half-beats the negatives in its own group.
  double negatives_above = 0.0;
  double wins = 0.0;
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    double pos = 0.0, neg = 0.0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] ? pos : neg) += 1.0;
      ++j;
    }
    const double negatives_below = N - negatives_above - neg;
    wins += pos * negatives_below + 0.5 * pos * neg;
    negatives_above += neg;
    i = j;
  }
  return wins / (P * N);
}

absl::StatusOr<std::vector<RocPoint>> RocCurve(const std::vector<bool>& labels,
                                               std::span<const double> scores) {
  RETURN_IF_ERROR(CheckScored(labels, scores));
  const auto order = DescendingOrder(scores);
  const double P = std::count(labels.begin(), labels.end(), true);
  const double N = labels.size() - P;
  std::vector<RocPoint> curve;
  curve.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  double tp = 0.0, fp = 0.0;
  size_t i = 0;
  while (i < order.size()) {
    const double threshold = scores[order[i]];
    while (i < order.size() && scores[order[i]] == threshold) {
      (labels[order[i]] ? tp : fp) += 1.0;
      ++i;
    }
    curve.push_back({threshold, fp / N, tp / P});
  }
  return curve;
}

absl::StatusOr<double> TprAtFpr(const std::vector<bool>& labels,
                                std::span<const double> scores,
                                double fpr_target) {
  ASSIGN_OR_RETURN(std::vector<RocPoint> curve, RocCurve(labels, scores));
  double best = 0.0;
  for (const auto& point : curve) {
    if (point.fpr <= fpr_target) best = std::max(best, point.tpr);
  }
  return best;
}

absl::StatusOr<EvalReport> Evaluate(const std::vector<bool>& labels,
                                    std::span<const double> probabilities,
                                    double threshold, double fpr_target) {
  std::vector<bool> verdicts;
  verdicts.reserve(probabilities.size());
  for (double p : probabilities) verdicts.push_back(ThresholdVerdict(p, threshold));
  EvalReport report;
  ASSIGN_OR_RETURN(report.basic, ComputeBasicMetrics(labels, verdicts));
  ASSIGN_OR_RETURN(report.auc, RocAuc(labels, probabilities));
  ASSIGN_OR_RETURN(report.tpr_at_fpr, TprAtFpr(labels, probabilities, fpr_target));
  report.fpr_target = fpr_target;
  report.threshold = threshold;
  return report;
}

nlohmann::json ToJson(const BasicMetrics& m) {
  return {{"acc", m.accuracy},
          {"pre", m.precision},
          {"rec", m.recall},
          {"f1", m.f1},
          {"counts",
           {{"tp", m.counts.tp},
            {"fp", m.counts.fp},
            {"tn", m.counts.tn},
            {"fn", m.counts.fn}}},
          {"undefined",
           {{"pre", m.precision_undefined},
            {"rec", m.recall_undefined},
            {"f1", m.f1_undefined}}}};
}

nlohmann::json ToJson(const EvalReport& r) {
  nlohmann::json j = ToJson(r.basic);
  j["auc"] = r.auc;
  j["tpr_at_fpr"] = r.tpr_at_fpr;
  j["fpr_target"] = r.fpr_target;
  j["threshold"] = r.threshold;
  return j;
}

}  // namespace provaudit
