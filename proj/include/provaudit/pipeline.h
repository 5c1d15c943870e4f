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

#ifndef PROVAUDIT_PIPELINE_H_
#define PROVAUDIT_PIPELINE_H_

#include <filesystem>
#include <memory>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/statusor.h"
#include "json.hpp"
#include "provaudit/corpus.h"
#include "provaudit/encoders.h"
#include "provaudit/generation.h"
#include "provaudit/run_config.h"

namespace provaudit {

// Exclusive claim on an output directory, held for the duration of one
// command. A stale lock left by a crashed process must be removed by hand.
class OutputLock {
 public:
  static absl::StatusOr<OutputLock> Acquire(const std::filesystem::path& dir);

  OutputLock(OutputLock&& other) noexcept;
  OutputLock& operator=(OutputLock&& other) noexcept;
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;
  ~OutputLock();

 private:
  explicit OutputLock(std::filesystem::path path) : path_(std::move(path)) {}
  std::filesystem::path path_;
};

// A corpus together with the system it is queried against.
struct Source {
  std::string name;  // "target" or "public"
  Corpus corpus;
  std::shared_ptr<const GenerationBackend> backend;
};

absl::StatusOr<Source> OpenSource(const SourceConfig& config, std::string name);

// The target source, followed by the public source in the shadow setting.
absl::StatusOr<std::vector<Source>> OpenSources(const RunConfig& config);

absl::StatusOr<std::shared_ptr<const Encoder>> MakeEncoder(
    const RunConfig& config);

// A labeled corpus drawn from one source.
struct Slice {
  std::string source;
  Corpus corpus;
};

// Partial setting: the two sides of a stratified split of the target.
// Shadow setting: the whole public corpus for training and the whole target
// for evaluation; TrainingSlice never opens the target.
absl::StatusOr<Slice> TrainingSlice(const RunConfig& config);
absl::StatusOr<Slice> EvaluationSlice(const RunConfig& config);

// Request for one sample; the text is the only per-sample field.
GenerationRequest RequestFor(const RunConfig& config, const SamplePair& sample);

// Artifact locations inside the output directory.
std::filesystem::path FeaturePath(const RunConfig& config,
                                  std::string_view source);
std::filesystem::path CheckpointPath(const RunConfig& config);
std::filesystem::path ReportPath(const RunConfig& config, std::string_view name);

// The five pipeline stages. Each returns the report it also writes under
// <output_dir>/reports. Progress lines go to `log` when it is non-null.
absl::StatusOr<nlohmann::json> CmdGenerate(const RunConfig& config,
                                           std::ostream* log = nullptr);
absl::StatusOr<nlohmann::json> CmdFeatures(const RunConfig& config,
                                           std::ostream* log = nullptr);
absl::StatusOr<nlohmann::json> CmdTrain(const RunConfig& config,
                                        std::ostream* log = nullptr);
absl::StatusOr<nlohmann::json> CmdEval(const RunConfig& config,
                                       std::ostream* log = nullptr);
absl::StatusOr<nlohmann::json> CmdUserAudit(const RunConfig& config,
                                            std::ostream* log = nullptr);

// Machine-readable form of a failed command.
nlohmann::json ErrorReport(std::string_view command, const absl::Status& status);

}  // namespace provaudit

#endif  // PROVAUDIT_PIPELINE_H_
