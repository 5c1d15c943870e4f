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

#include "provaudit/userlevel.h"

#include <cmath>
#include <random>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "provaudit/status_macros.h"
#include "provaudit/training.h"

namespace provaudit {

absl::StatusOr<UserRole> UserVerdict(const std::vector<bool>& sample_verdicts) {
  if (sample_verdicts.empty()) {
    return absl::InvalidArgumentError("user has no sample verdicts");
  }
  for (bool member : sample_verdicts) {
    if (member) return UserRole::kVictim;
  }
  return UserRole::kFortunate;
}

double FortunateSuccessProbability(double accuracy, int n) {
  return std::pow(accuracy, n);
}

absl::StatusOr<BasicMetrics> UserMetrics(
    const std::vector<std::pair<std::string, UserRole>>& verdicts,
    const std::unordered_map<std::string, UserRole>& roles) {
  if (verdicts.empty()) return absl::InvalidArgumentError("no user verdicts");
  ConfusionCounts c;
  for (const auto& [user, verdict] : verdicts) {
    auto it = roles.find(user);
    if (it == roles.end()) {
      return absl::NotFoundError(absl::StrCat("no role for user ", user));
    }
    const bool truth = it->second == UserRole::kVictim;
    const bool said = verdict == UserRole::kVictim;
    if (truth) {
      (said ? c.tp : c.fn)++;
    } else {
      (said ? c.fp : c.tn)++;
    }
  }
  return MetricsFromCounts(c);
}

absl::StatusOr<UserAuditReport> AuditUsers(std::span<const UserScores> users,
                                           double threshold) {
  if (users.empty()) return absl::InvalidArgumentError("empty cohort");
  if (!(threshold > 0.0 && threshold < 1.0)) {
    return absl::InvalidArgumentError("threshold must lie in (0, 1)");
  }
  UserAuditReport report;
  report.threshold = threshold;
  report.samples_per_user = static_cast<int>(users.front().probabilities.size());
  std::unordered_map<std::string, UserRole> roles;
  for (const auto& user : users) {
    std::vector<bool> verdicts;
    verdicts.reserve(user.probabilities.size());
    for (double p : user.probabilities) {
      if (!(p >= 0.0 && p <= 1.0)) {
        return absl::InvalidArgumentError(
            absl::StrCat("probability ", p, " for ", user.user_id, " outside [0, 1]"));
      }
      verdicts.push_back(ThresholdVerdict(p, threshold));
    }
    ASSIGN_OR_RETURN(UserRole verdict, UserVerdict(verdicts));
    report.verdicts.emplace_back(user.user_id, verdict);
    roles.emplace(user.user_id, user.role);
  }
  ASSIGN_OR_RETURN(report.metrics, UserMetrics(report.verdicts, roles));
  return report;
}

absl::StatusOr<GridSearchResult> ThresholdGridSearch(
    std::span<const UserScores> users, double step) {
  if (users.empty()) return absl::InvalidArgumentError("empty cohort");
  if (!(step > 0.0 && step < 1.0)) {
    return absl::InvalidArgumentError("grid step must lie in (0, 1)");
  }
  const int divisions = static_cast<int>(std::lround(1.0 / step));
  const int points = divisions - 1;
  std::vector<absl::StatusOr<UserAuditReport>> reports(points);
#pragma omp parallel for schedule(static)
  for (int k = 1; k <= points; ++k) {
    reports[k - 1] = AuditUsers(users, double(k) / divisions);
  }
  GridSearchResult result;
  int best = -1;
  for (int k = 0; k < points; ++k) {
    if (!reports[k].ok()) return reports[k].status();
    result.sweep.push_back({reports[k]->threshold, reports[k]->metrics});
    if (best < 0 ||
        reports[k]->metrics.accuracy > reports[best]->metrics.accuracy) {
      best = k;
    }
  }
  result.best_threshold = reports[best]->threshold;
  result.report = *std::move(reports[best]);
  return result;
}

std::map<int, double> DefaultPerNThresholds() {
  return {{1, 0.52}, {2, 0.52}, {4, 0.53}, {8, 0.56}, {10, 0.61}};
}

double ThresholdForN(const std::map<int, double>& table, int n) {
  auto it = table.upper_bound(n);
  if (it == table.begin()) return 0.5;
  return std::prev(it)->second;
}

BernoulliCohortResult SimulateBernoulliCohort(double accuracy, int n,
                                              int n_users_each, int trials,
                                              uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution correct(std::clamp(accuracy, 0.0, 1.0));
  int64_t cleared = 0, caught = 0;
  const int64_t users = int64_t(trials) * n_users_each;
  for (int64_t u = 0; u < users; ++u) {
    bool all_clear = true;
    for (int k = 0; k < n; ++k) all_clear &= correct(rng);
    cleared += all_clear;
    bool any_flagged = false;
    for (int k = 0; k < n; ++k) any_flagged |= correct(rng);
    caught += any_flagged;
  }
  BernoulliCohortResult r;
  if (users > 0) {
    r.fortunate_cleared_rate = double(cleared) / users;
    r.victim_caught_rate = double(caught) / users;
  }
  return r;
}

nlohmann::json ToJson(const UserAuditReport& report) {
  nlohmann::json verdicts = nlohmann::json::object();
  for (const auto& [user, role] : report.verdicts) {
    verdicts[user] = UserRoleName(role);
  }
  return {{"threshold", report.threshold},
          {"samples_per_user", report.samples_per_user},
          {"metrics", ToJson(report.metrics)},
          {"verdicts", std::move(verdicts)}};
}

nlohmann::json ToJson(const GridSearchResult& result) {
  nlohmann::json sweep = nlohmann::json::array();
  for (const auto& row : result.sweep) {
    sweep.push_back({{"threshold", row.threshold},
                     {"acc", row.metrics.accuracy},
                     {"pre", row.metrics.precision},
                     {"rec", row.metrics.recall},
                     {"f1", row.metrics.f1}});
  }
  return {{"best_threshold", result.best_threshold},
          {"report", ToJson(result.report)},
          {"sweep", std::move(sweep)}};
}

}  // namespace provaudit
