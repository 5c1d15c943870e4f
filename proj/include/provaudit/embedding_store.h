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

#ifndef PROVAUDIT_EMBEDDING_STORE_H_
#define PROVAUDIT_EMBEDDING_STORE_H_

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "absl/status/statusor.h"

namespace provaudit {

// Columnar id -> vector table for one corpus and one encoder.
//
// On disk: a "PVEMB1\n" magic line, one JSON header line
// {"encoder_id", "dim", "normalized", "ids": [...]}, then ids.size() * dim
// little-endian float64 values, row-major.
class EmbeddingStore {
 public:
  EmbeddingStore(std::string encoder_id, int dim, bool normalized)
      : encoder_id_(std::move(encoder_id)), dim_(dim), normalized_(normalized) {}

  const std::string& encoder_id() const { return encoder_id_; }
  int dim() const { return dim_; }
  bool normalized() const { return normalized_; }
  size_t size() const { return ids_.size(); }
  std::span<const std::string> ids() const { return ids_; }

  absl::Status Add(std::string id, std::span<const double> values);
  std::optional<std::span<const double>> Find(std::string_view id) const;

  absl::Status Write(const std::filesystem::path& path) const;
  static absl::StatusOr<EmbeddingStore> Read(const std::filesystem::path& path);

 private:
  std::string encoder_id_;
  int dim_;
  bool normalized_;
  std::vector<std::string> ids_;
  std::vector<double> values_;
  std::unordered_map<std::string, size_t> index_;
};

}  // namespace provaudit

#endif  // PROVAUDIT_EMBEDDING_STORE_H_
