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

#ifndef PROVAUDIT_DIGEST_H_
#define PROVAUDIT_DIGEST_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"

namespace provaudit {

// Lower-case hex SHA-256 of `data`.
std::string Sha256Hex(std::string_view data);
std::string Sha256Hex(std::span<const uint8_t> data);

// First 8 bytes of the SHA-256 digest, little-endian. Used to derive RNG
// seeds from content.
uint64_t Sha256Prefix64(std::string_view data);

std::string Base64Encode(std::span<const uint8_t> data);
absl::StatusOr<std::vector<uint8_t>> Base64Decode(std::string_view text);

}  // namespace provaudit

#endif  // PROVAUDIT_DIGEST_H_
