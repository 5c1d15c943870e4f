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

#ifndef PROVAUDIT_GENERATION_CACHE_H_
#define PROVAUDIT_GENERATION_CACHE_H_

#include <atomic>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>

#include "absl/status/statusor.h"
#include "provaudit/generation.h"

namespace provaudit {

// Content-addressed store of generation batches. Layout:
//
//   <root>/<fingerprint>/meta.json
//   <root>/<fingerprint>/img-000.ppm ...
//
// meta.json is written last, so a directory without it is an incomplete
// entry. Corrupt or incomplete entries are treated as misses and rewritten.
class GenerationCache {
 public:
  using WarningHandler = std::function<void(std::string_view)>;

  explicit GenerationCache(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }

  // Concurrent calls with the same fingerprint issue at most one backend
  // query between them.
  absl::StatusOr<GenerationBatch> CachedGenerate(
      const GenerationBackend& backend, const GenerationRequest& request,
      const RetryPolicy& retry = {});

  // Returns the stored batch, or nullopt on a miss or corrupt entry.
  std::optional<GenerationBatch> Lookup(std::string_view fingerprint) const;
  bool Contains(std::string_view fingerprint) const;

  absl::Status Store(const GenerationRequest& request,
                     const GenerationBatch& batch);

  void set_warning_handler(WarningHandler handler) {
    warn_ = std::move(handler);
  }

  int64_t hits() const { return hits_.load(); }
  int64_t misses() const { return misses_.load(); }

 private:
  std::shared_ptr<std::mutex> LockFor(std::string_view fingerprint);
  void Warn(std::string_view message) const;

  std::filesystem::path root_;
  WarningHandler warn_;
  std::mutex locks_mu_;
  std::unordered_map<std::string, std::shared_ptr<std::mutex>> locks_;
  std::atomic<int64_t> hits_{0};
  std::atomic<int64_t> misses_{0};
};

}  // namespace provaudit

#endif  // PROVAUDIT_GENERATION_CACHE_H_
