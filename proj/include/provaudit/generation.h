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

#ifndef PROVAUDIT_GENERATION_H_
#define PROVAUDIT_GENERATION_H_

#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"
#include "provaudit/image.h"

namespace provaudit {

inline constexpr int kDefaultQueryNumber = 64;
inline constexpr int kDefaultInferenceSteps = 50;

// One black-box query: `n` images for `text`. Image i is requested with seed
// base_seed + i.
struct GenerationRequest {
  std::string text;
  int n = kDefaultQueryNumber;
  int inference_steps = kDefaultInferenceSteps;
  int64_t base_seed = 0;
  std::map<std::string, std::string> extra_params;  // opaque passthrough
};

absl::Status ValidateRequest(const GenerationRequest& request);

struct GenerationBatch {
  std::string fingerprint;
  std::vector<RgbImage> images;
  std::string backend_id;
};

// The target text-to-image system. Only text goes in and only images come
// out. Implementations must be safe to call concurrently.
class GenerationBackend {
 public:
  virtual ~GenerationBackend() = default;
  virtual std::string Id() const = 0;

  // Transport problems surface as kUnavailable or kDeadlineExceeded, which
  // Generate() retries. Anything else is final.
  virtual absl::StatusOr<std::vector<RgbImage>> Generate(
      const GenerationRequest& request) const = 0;
};

// SHA-256 over a canonical encoding of the request and backend id. Extra
// params are encoded in key order.
std::string Fingerprint(const GenerationRequest& request,
                        std::string_view backend_id);

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};
  double backoff_multiplier = 2.0;
};

bool IsRetryable(const absl::Status& status);

// Validates, queries with bounded retries, and checks the response shape.
// A retried attempt replaces the previous response wholesale.
absl::StatusOr<GenerationBatch> Generate(const GenerationBackend& backend,
                                         const GenerationRequest& request,
                                         const RetryPolicy& retry = {});

// Deterministic backend whose images are flat colors derived from
// (text, steps, seed). Can simulate outages for failure-path tests.
class StubBackend : public GenerationBackend {
 public:
  struct Options {
    int side = 8;
    bool offline = false;
    int fail_first = 0;  // calls that fail with kUnavailable before success
  };

  StubBackend() = default;
  explicit StubBackend(Options options) : options_(options) {}

  std::string Id() const override { return "stub"; }
  absl::StatusOr<std::vector<RgbImage>> Generate(
      const GenerationRequest& request) const override;

  int64_t calls() const { return calls_.load(); }

 private:
  Options options_;
  mutable std::atomic<int64_t> calls_{0};
};

}  // namespace provaudit

#endif  // PROVAUDIT_GENERATION_H_
