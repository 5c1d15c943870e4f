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

#include "provaudit/generation_cache.h"

#include <cstdio>
#include <fstream>
#include <iostream>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "json.hpp"
#include "provaudit/digest.h"
#include "provaudit/status_macros.h"

namespace provaudit {
namespace {

using nlohmann::json;

constexpr char kMetaFile[] = "meta.json";

std::string ImageFileName(size_t i) { return absl::StrFormat("img-%03d.ppm", i); }

}  // namespace

GenerationCache::GenerationCache(std::filesystem::path root)
    : root_(std::move(root)) {
  std::error_code ec;
  std::filesystem::create_directories(root_, ec);
}

void GenerationCache::Warn(std::string_view message) const {
  if (warn_) {
    warn_(message);
  } else {
    std::cerr << "W provaudit: " << message << '\n';
  }
}

std::shared_ptr<std::mutex> GenerationCache::LockFor(
    std::string_view fingerprint) {
  std::lock_guard<std::mutex> guard(locks_mu_);
  auto& slot = locks_[std::string(fingerprint)];
  if (!slot) slot = std::make_shared<std::mutex>();
  return slot;
}

bool GenerationCache::Contains(std::string_view fingerprint) const {
  return std::filesystem::exists(root_ / std::string(fingerprint) / kMetaFile);
}

std::optional<GenerationBatch> GenerationCache::Lookup(
    std::string_view fingerprint) const {
  const auto dir = root_ / std::string(fingerprint);
  const auto meta_path = dir / kMetaFile;
  if (!std::filesystem::exists(meta_path)) return std::nullopt;

  auto corrupt = [&](std::string_view why) -> std::optional<GenerationBatch> {
    Warn(absl::StrCat("cache entry ", std::string(fingerprint), " is corrupt (",
                      std::string(why),
                      "); regenerating"));
    return std::nullopt;
  };

  std::ifstream in(meta_path);
  json meta = json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (meta.is_discarded() || !meta.is_object()) {
    return corrupt("unreadable metadata");
  }
  if (meta.value("fingerprint", "") != fingerprint) {
    return corrupt("fingerprint mismatch");
  }
  const auto images = meta.find("images");
  if (images == meta.end() || !images->is_array() ||
      images->size() != meta.value("n", size_t{0})) {
    return corrupt("image list does not match n");
  }
  GenerationBatch batch;
  batch.fingerprint = std::string(fingerprint);
  batch.backend_id = meta.value("backend_id", "");
  for (const auto& entry : *images) {
    const std::string file = entry.value("file", "");
    auto bytes = ReadFileBytes(dir / file);
    if (!bytes.ok()) return corrupt(absl::StrCat("missing ", file));
    if (Sha256Hex(std::span<const uint8_t>(*bytes)) !=
        entry.value("sha256", "")) {
      return corrupt(absl::StrCat("checksum mismatch in ", file));
    }
    auto image = DecodeImage(*bytes);
    if (!image.ok()) return corrupt(absl::StrCat("undecodable ", file));
    batch.images.push_back(*std::move(image));
  }
  return batch;
}

absl::Status GenerationCache::Store(const GenerationRequest& request,
                                    const GenerationBatch& batch) {
  const auto dir = root_ / batch.fingerprint;
  std::error_code ec;
  std::filesystem::remove(dir / kMetaFile, ec);
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    return absl::PermissionDeniedError(
        absl::StrCat("cannot create cache entry ", dir.string()));
  }
  json images = json::array();
  for (size_t i = 0; i < batch.images.size(); ++i) {
    const std::vector<uint8_t> bytes = EncodePpm(batch.images[i]);
    RETURN_IF_ERROR(WriteFileBytes(dir / ImageFileName(i), bytes));
    images.push_back({{"file", ImageFileName(i)},
                      {"sha256", Sha256Hex(std::span<const uint8_t>(bytes))}});
  }
  json meta = {{"fingerprint", batch.fingerprint},
               {"backend_id", batch.backend_id},
               {"text", request.text},
               {"n", request.n},
               {"inference_steps", request.inference_steps},
               {"base_seed", request.base_seed},
               {"extra_params", request.extra_params},
               {"images", std::move(images)}};
  const auto tmp = dir / "meta.json.tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << meta.dump(2) << '\n';
    if (!out) return absl::DataLossError("short write to cache metadata");
  }
  std::filesystem::rename(tmp, dir / kMetaFile, ec);
  if (ec) return absl::InternalError("cannot commit cache metadata");
  return absl::OkStatus();
}

absl::StatusOr<GenerationBatch> GenerationCache::CachedGenerate(
    const GenerationBackend& backend, const GenerationRequest& request,
    const RetryPolicy& retry) {
  RETURN_IF_ERROR(ValidateRequest(request));
  const std::string fp = Fingerprint(request, backend.Id());
  auto lock = LockFor(fp);
  std::lock_guard<std::mutex> guard(*lock);
  if (auto cached = Lookup(fp)) {
    hits_.fetch_add(1);
    return *std::move(cached);
  }
  misses_.fetch_add(1);
  ASSIGN_OR_RETURN(GenerationBatch batch, Generate(backend, request, retry));
  RETURN_IF_ERROR(Store(request, batch));
  return batch;
}

}  // namespace provaudit
