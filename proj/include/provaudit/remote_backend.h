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

#ifndef PROVAUDIT_REMOTE_BACKEND_H_
#define PROVAUDIT_REMOTE_BACKEND_H_

#include <chrono>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "json.hpp"
#include "provaudit/generation.h"

namespace provaudit {

// Environment variable holding the bearer token for remote endpoints.
inline constexpr char kApiKeyEnvVar[] = "PROVAUDIT_API_KEY";

// Client for an HTTP generation endpoint.
//
// Request (POST, application/json):
//   {"text": str, "num_images": int, "steps": int, "seed": int,
//    "params": {str: str}}
// Response (200, application/json):
//   {"images": [base64 PNG or PPM bytes, ...]}
//
// 429 and 5xx map to kUnavailable (retried); other 4xx are refusals.
class RemoteBackend : public GenerationBackend {
 public:
  struct Options {
    std::string url;  // e.g. "http://127.0.0.1:8080/generate"
    std::string api_key;
    std::chrono::seconds timeout{300};
  };

  explicit RemoteBackend(Options options);

  std::string Id() const override { return "remote:" + options_.url; }
  absl::StatusOr<std::vector<RgbImage>> Generate(
      const GenerationRequest& request) const override;

 private:
  Options options_;
  std::string scheme_host_port_;
  std::string path_;
};

// Wire helpers shared by the client and by test servers.
nlohmann::json EncodeGenerationRequest(const GenerationRequest& request);
absl::StatusOr<GenerationRequest> DecodeGenerationRequest(
    const nlohmann::json& body);
absl::StatusOr<nlohmann::json> EncodeGenerationResponse(
    const std::vector<RgbImage>& images);
absl::StatusOr<std::vector<RgbImage>> DecodeGenerationResponse(
    const nlohmann::json& body);

}  // namespace provaudit

#endif  // PROVAUDIT_REMOTE_BACKEND_H_
