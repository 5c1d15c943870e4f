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

#include "provaudit/generation.h"

#include <thread>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "provaudit/digest.h"
#include "provaudit/status_macros.h"

namespace provaudit {
namespace {

// Length-prefixed so no field boundary can be forged by content.
void AppendField(std::string& out, std::string_view name,
                 std::string_view value) {
  absl::StrAppend(&out, std::string(name), ":", value.size(), ":",
                  std::string(value), ";");
}

}  // namespace

absl::Status ValidateRequest(const GenerationRequest& request) {
  if (request.n < 1) {
    return absl::InvalidArgumentError("query number n must be >= 1");
  }
  if (request.inference_steps < 1) {
    return absl::InvalidArgumentError("inference_steps must be >= 1");
  }
  return absl::OkStatus();
}

std::string Fingerprint(const GenerationRequest& request,
                        std::string_view backend_id) {
  std::string canonical = "provaudit-gen/1;";
  AppendField(canonical, "backend", backend_id);
  AppendField(canonical, "text", request.text);
  AppendField(canonical, "n", absl::StrCat(request.n));
  AppendField(canonical, "steps", absl::StrCat(request.inference_steps));
  AppendField(canonical, "seed", absl::StrCat(request.base_seed));
  for (const auto& [key, value] : request.extra_params) {
    AppendField(canonical, "pk", key);
    AppendField(canonical, "pv", value);
  }
  return Sha256Hex(canonical);
}

bool IsRetryable(const absl::Status& status) {
  return absl::IsUnavailable(status) || absl::IsDeadlineExceeded(status);
}

absl::StatusOr<GenerationBatch> Generate(const GenerationBackend& backend,
                                         const GenerationRequest& request,
                                         const RetryPolicy& retry) {
  RETURN_IF_ERROR(ValidateRequest(request));
  const int attempts = std::max(1, retry.max_attempts);
  auto backoff = retry.initial_backoff;
  absl::Status last;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    auto images = backend.Generate(request);
    if (images.ok()) {
      if (static_cast<int>(images->size()) != request.n) {
        return absl::DataLossError(
            absl::StrCat("malformed response from ", backend.Id(), ": got ",
                         images->size(), " images, expected ", request.n));
      }
      for (const auto& image : *images) {
        if (auto st = ValidateImage(image); !st.ok()) {
          return absl::DataLossError(absl::StrCat(
              "malformed response from ", backend.Id(), ": ", st.message()));
        }
      }
      return GenerationBatch{Fingerprint(request, backend.Id()),
                             *std::move(images), backend.Id()};
    }
    last = images.status();
    if (!IsRetryable(last)) return last;
    if (attempt < attempts && backoff.count() > 0) {
      std::this_thread::sleep_for(backoff);
      backoff = std::chrono::milliseconds(static_cast<int64_t>(
          backoff.count() * retry.backoff_multiplier));
    }
  }
  return absl::UnavailableError(absl::StrCat("backend ", backend.Id(),
                                             " unavailable after ", attempts,
                                             " attempts: ", last.message()));
}

absl::StatusOr<std::vector<RgbImage>> StubBackend::Generate(
    const GenerationRequest& request) const {
  const int64_t call = calls_.fetch_add(1);
  if (options_.offline) {
    return absl::UnavailableError("stub backend offline");
  }
  if (call < options_.fail_first) {
    return absl::UnavailableError("stub backend transient failure");
  }
  std::vector<RgbImage> images;
  images.reserve(request.n);
  for (int i = 0; i < request.n; ++i) {
    const uint64_t h = Sha256Prefix64(
        absl::StrCat(request.text, "|", request.inference_steps, "|",
                     request.base_seed + i));
    RgbImage image(options_.side, options_.side);
    for (size_t p = 0; p < image.pixels.size(); p += 3) {
      image.pixels[p] = static_cast<uint8_t>(h);
      image.pixels[p + 1] = static_cast<uint8_t>(h >> 8);
      image.pixels[p + 2] = static_cast<uint8_t>(h >> 16);
    }
    images.push_back(std::move(image));
  }
  return images;
}

}  // namespace provaudit
