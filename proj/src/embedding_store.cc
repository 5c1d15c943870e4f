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

#include "provaudit/embedding_store.h"

#include <bit>
#include <fstream>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "json.hpp"

namespace provaudit {

static_assert(std::endian::native == std::endian::little,
              "embedding store assumes a little-endian host");

namespace {
constexpr char kMagic[] = "PVEMB1";
}  // namespace

absl::Status EmbeddingStore::Add(std::string id, std::span<const double> values) {
  if (static_cast<int>(values.size()) != dim_) {
    return absl::InvalidArgumentError(absl::StrCat(
        "embedding for ", id, " has dimension ", values.size(), ", store expects ",
        dim_));
  }
  if (index_.contains(id)) {
    return absl::AlreadyExistsError(absl::StrCat("duplicate embedding id ", id));
  }
  index_.emplace(id, ids_.size());
  ids_.push_back(std::move(id));
  values_.insert(values_.end(), values.begin(), values.end());
  return absl::OkStatus();
}

std::optional<std::span<const double>> EmbeddingStore::Find(
    std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return std::span<const double>(values_).subspan(it->second * dim_, dim_);
}

absl::Status EmbeddingStore::Write(const std::filesystem::path& path) const {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    return absl::PermissionDeniedError(
        absl::StrCat("cannot write ", path.string()));
  }
  nlohmann::json header = {{"encoder_id", encoder_id_},
                           {"dim", dim_},
                           {"normalized", normalized_},
                           {"ids", ids_}};
  out << kMagic << '\n' << header.dump() << '\n';
  out.write(reinterpret_cast<const char*>(values_.data()),
            static_cast<std::streamsize>(values_.size() * sizeof(double)));
  if (!out) return absl::DataLossError("short write to embedding store");
  return absl::OkStatus();
}

absl::StatusOr<EmbeddingStore> EmbeddingStore::Read(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    return absl::NotFoundError(absl::StrCat("cannot open ", path.string()));
  }
  std::string magic, header_line;
  std::getline(in, magic);
  std::getline(in, header_line);
  if (magic != kMagic) {
    return absl::DataLossError(
        absl::StrCat(path.string(), " is not an embedding store"));
  }
  auto header = nlohmann::json::parse(header_line, nullptr, false);
  if (header.is_discarded() || !header.contains("ids")) {
    return absl::DataLossError("embedding store header is malformed");
  }
  EmbeddingStore store(header.value("encoder_id", ""), header.value("dim", 0),
                       header.value("normalized", false));
  const auto ids = header["ids"].get<std::vector<std::string>>();
  std::vector<double> row(store.dim_);
  for (const auto& id : ids) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(double)));
    if (!in) return absl::DataLossError("embedding store is truncated");
    if (auto st = store.Add(id, row); !st.ok()) return st;
  }
  return store;
}

}  // namespace provaudit
