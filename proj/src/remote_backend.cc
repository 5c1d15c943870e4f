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

#include "provaudit/remote_backend.h"

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "httplib.h"
#include "provaudit/digest.h"
#include "provaudit/status_macros.h"

namespace provaudit {

using nlohmann::json;

RemoteBackend::RemoteBackend(Options options) : options_(std::move(options)) {
  // Split "scheme://host:port/path" into the client origin and request path.
  const std::string& url = options_.url;
  size_t start = url.find("://");
  start = start == std::string::npos ? 0 : start + 3;
  size_t slash = url.find('/', start);
  if (slash == std::string::npos) {
    scheme_host_port_ = url;
    path_ = "/";
  } else {
    scheme_host_port_ = url.substr(0, slash);
    path_ = url.substr(slash);
  }
}

json EncodeGenerationRequest(const GenerationRequest& request) {
  return {{"text", request.text},
          {"num_images", request.n},
          {"steps", request.inference_steps},
          {"seed", request.base_seed},
          {"params", request.extra_params}};
}

absl::StatusOr<GenerationRequest> DecodeGenerationRequest(const json& body) {
  if (!body.is_object() || !body.contains("text") ||
      !body.contains("num_images") || !body.contains("steps") ||
      !body.contains("seed")) {
    return absl::InvalidArgumentError("generation request missing fields");
  }
  try {
    GenerationRequest request;
    request.text = body.at("text").get<std::string>();
    request.n = body.at("num_images").get<int>();
    request.inference_steps = body.at("steps").get<int>();
    request.base_seed = body.at("seed").get<int64_t>();
    if (auto params = body.find("params"); params != body.end()) {
      request.extra_params =
          params->get<std::map<std::string, std::string>>();
    }
    return request;
  } catch (const json::exception& e) {
    return absl::InvalidArgumentError(
        absl::StrCat("generation request has bad field types: ", e.what()));
  }
}

absl::StatusOr<json> EncodeGenerationResponse(
    const std::vector<RgbImage>& images) {
  json encoded = json::array();
  for (const auto& image : images) {
    ASSIGN_OR_RETURN(std::vector<uint8_t> png, EncodePng(image));
    encoded.push_back(Base64Encode(png));
  }
  return json{{"images", std::move(encoded)}};
}

absl::StatusOr<std::vector<RgbImage>> DecodeGenerationResponse(
    const json& body) {
  auto images = body.find("images");
  if (!body.is_object() || images == body.end() || !images->is_array()) {
    return absl::DataLossError("response lacks an 'images' array");
  }
  std::vector<RgbImage> out;
  out.reserve(images->size());
  for (const auto& item : *images) {
    if (!item.is_string()) {
      return absl::DataLossError("image payload is not a string");
    }
    auto bytes = Base64Decode(item.get<std::string>());
    if (!bytes.ok()) return absl::DataLossError(bytes.status().message());
    auto image = DecodeImage(*bytes);
    if (!image.ok()) return absl::DataLossError(image.status().message());
    out.push_back(*std::move(image));
  }
  return out;
}

absl::StatusOr<std::vector<RgbImage>> RemoteBackend::Generate(
    const GenerationRequest& request) const {
  httplib::Client client(scheme_host_port_);
  client.set_connection_timeout(10);
  client.set_read_timeout(static_cast<time_t>(options_.timeout.count()));
  httplib::Headers headers;
  if (!options_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + options_.api_key);
  }
  auto result = client.Post(path_, headers,
                            EncodeGenerationRequest(request).dump(),
                            "application/json");
  if (!result) {
    return absl::UnavailableError(
        absl::StrCat("transport failure talking to ", options_.url, ": ",
                     httplib::to_string(result.error())));
  }
  const int status = result->status;
  if (status == 429 || status >= 500) {
    return absl::UnavailableError(
        absl::StrCat(options_.url, " returned HTTP ", status));
  }
  if (status != 200) {
    return absl::PermissionDeniedError(absl::StrCat(
        options_.url, " refused the request with HTTP ", status, ": ",
        result->body.substr(0, 200)));
  }
  json body = json::parse(result->body, nullptr, /*allow_exceptions=*/false);
  if (body.is_discarded()) {
    return absl::DataLossError("response body is not JSON");
  }
  return DecodeGenerationResponse(body);
}

}  // namespace provaudit
