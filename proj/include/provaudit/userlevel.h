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

#ifndef PROVAUDIT_USERLEVEL_H_
#define PROVAUDIT_USERLEVEL_H_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "absl/status/statusor.h"
#include "json.hpp"
#include "provaudit/corpus.h"
#include "provaudit/metrics.h"

namespace provaudit {

// victim iff at least one sample verdict is member.
absl::StatusOr<UserRole> UserVerdict(const std::vector<bool>& sample_verdicts);

// Chance that all n samples of a fortunate user are cleared when each
// per-sample verdict is right with probability `accuracy`: accuracy^n.
double FortunateSuccessProbability(double accuracy, int n);

// Member probabilities for one cohort user, with the ground-truth role.
struct UserScores {
  std::string user_id;
  std::vector<double> probabilities;
  UserRole role = UserRole::kFortunate;
};

// Victim is the positive class.
absl::StatusOr<BasicMetrics> UserMetrics(
    const std::vector<std::pair<std::string, UserRole>>& verdicts,
    const std::unordered_map<std::string, UserRole>& roles);

struct UserAuditReport {
  std::vector<std::pair<std::string, UserRole>> verdicts;
  double threshold = 0.5;
  BasicMetrics metrics;
  int samples_per_user = 0;
};

absl::StatusOr<UserAuditReport> AuditUsers(std::span<const UserScores> users,
                                           double threshold);

struct SweepRow {
  double threshold = 0.0;
  BasicMetrics metrics;
};

struct GridSearchResult {
  double best_threshold = 0.5;
  UserAuditReport report;
  std::vector<SweepRow> sweep;
};

inline constexpr double kDefaultGridStep = 0.01;

// Sweeps tau = step, 2*step, ... < 1 and keeps the tau with the highest
// user-level accuracy; ties go to the smallest tau.
absl::StatusOr<GridSearchResult> ThresholdGridSearch(
    std::span<const UserScores> users, double step = kDefaultGridStep);

// Deployment thresholds per samples-per-user.
std::map<int, double> DefaultPerNThresholds();

// Entry for the largest tabulated n' <= n; 0.5 below the first entry.
double ThresholdForN(const std::map<int, double>& table, int n);

struct BernoulliCohortResult {
  double fortunate_cleared_rate = 0.0;
  double victim_caught_rate = 0.0;
};

// Each per-sample verdict is independently correct with probability
// `accuracy`. Victims hold only member samples. Rates are over
// trials * n_users_each users per role.
BernoulliCohortResult SimulateBernoulliCohort(double accuracy, int n,
                                              int n_users_each, int trials,
                                              uint64_t seed);

nlohmann::json ToJson(const UserAuditReport& report);
nlohmann::json ToJson(const GridSearchResult& result);

}  // namespace provaudit

#endif  // PROVAUDIT_USERLEVEL_H_
