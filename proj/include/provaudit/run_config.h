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

#ifndef PROVAUDIT_RUN_CONFIG_H_
#define PROVAUDIT_RUN_CONFIG_H_

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"
#include "json.hpp"
#include "provaudit/audit_model.h"
#include "provaudit/corpus.h"
#include "provaudit/features.h"
#include "provaudit/generation.h"
#include "provaudit/synthworld.h"
#include "provaudit/training.h"

namespace provaudit {

enum class CorpusKind { kManifest, kSynth };
enum class BackendKind { kSynth, kRemote, kStub };
enum class EncoderKind { kSynth, kMock };
enum class SettingKind { kPartial, kShadow };
enum class ThresholdMode { kFixed, kPerN, kGrid };
enum class CalibrationMode { kDisjoint, kEvaluation };

// A population to audit: its corpus and the system it is queried against.
struct SourceConfig {
  CorpusKind corpus_kind = CorpusKind::kSynth;
  std::string manifest;
  SynthConfig synth;
  bool pseudo_text = false;  // caption empty texts before querying
  BackendKind backend_kind = BackendKind::kSynth;
  std::string endpoint;
  int timeout_seconds = 300;
};

struct RunConfig {
  std::filesystem::path output_dir = "provaudit-run";
  std::filesystem::path cache_dir;  // empty: <output_dir>/cache

  SourceConfig target;
  SettingKind setting = SettingKind::kPartial;
  double proportion = 0.5;
  uint64_t split_seed = 0;
  std::optional<SourceConfig> public_source;  // shadow setting only

  EncoderKind encoder_kind = EncoderKind::kSynth;
  int encoder_dim = 64;
  uint64_t encoder_seed = 0;

  GenerationRequest query;  // text left empty; per-sample
  int workers = 4;
  RetryPolicy retry;

  bool sort_features = true;
  bool pixel_error = false;
  int pixel_side = kPixelErrorSide;

  ModelVariant variant = ModelVariant::kTwoBranch;
  TrainConfig train;
  Selection selection = Selection::kLastEpoch;

  double eval_threshold = 0.5;
  double fpr_target = 0.01;

  ThresholdMode threshold_mode = ThresholdMode::kPerN;
  double fixed_threshold = 0.5;
  std::map<int, double> per_n_thresholds;
  CalibrationMode calibration = CalibrationMode::kDisjoint;
  double grid_step = 0.01;
  CohortSpec cohort;

  // Fully defaulted JSON this config was parsed from, and its SHA-256.
  nlohmann::json resolved;
  std::string digest;

  std::filesystem::path CacheDir() const;
};

// Every key with its default value.
nlohmann::json DefaultConfigJson();

// Where each default recipe value comes from; emitted with every report.
nlohmann::json DefaultsProvenance();

// Applies "a.b.c=value" overrides. Values parse as JSON when they can and
// are taken as strings otherwise.
absl::Status ApplyOverrides(nlohmann::json& config,
                            const std::vector<std::string>& overrides);

// Merges `user` over the defaults, then parses and validates.
absl::StatusOr<RunConfig> ResolveRunConfig(const nlohmann::json& user);

absl::StatusOr<RunConfig> LoadRunConfig(const std::filesystem::path& path,
                                        const std::vector<std::string>& overrides);

RunConfig DefaultRunConfig();

}  // namespace provaudit

#endif  // PROVAUDIT_RUN_CONFIG_H_
