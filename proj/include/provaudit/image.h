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

#ifndef PROVAUDIT_IMAGE_H_
#define PROVAUDIT_IMAGE_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"

namespace provaudit {

// Interleaved 8-bit RGB raster, row-major.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> pixels;  // width * height * 3

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), pixels(size_t(w) * h * 3) {}

  uint8_t* at(int x, int y) { return &pixels[(size_t(y) * width + x) * 3]; }
  const uint8_t* at(int x, int y) const {
    return &pixels[(size_t(y) * width + x) * 3];
  }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

absl::Status ValidateImage(const RgbImage& image);

// Decodes binary PPM (P6, maxval 255) or PNG, chosen by magic bytes.
absl::StatusOr<RgbImage> DecodeImage(std::span<const uint8_t> bytes);

std::vector<uint8_t> EncodePpm(const RgbImage& image);
absl::StatusOr<std::vector<uint8_t>> EncodePng(const RgbImage& image);

absl::StatusOr<std::vector<uint8_t>> ReadFileBytes(
    const std::filesystem::path& path);
absl::Status WriteFileBytes(const std::filesystem::path& path,
                            std::span<const uint8_t> bytes);

absl::StatusOr<RgbImage> ReadImageFile(const std::filesystem::path& path);
// Format follows the extension: ".png" writes PNG, anything else PPM.
absl::Status WriteImageFile(const std::filesystem::path& path,
                            const RgbImage& image);

// Bilinear resample to side x side with channels scaled to [0, 1].
// Output is interleaved RGB doubles, row-major.
std::vector<double> ResampleUnitSquare(const RgbImage& image, int side);

// Digest over dimensions and pixel bytes; stable across encodings.
std::string ImageDigest(const RgbImage& image);

}  // namespace provaudit

#endif  // PROVAUDIT_IMAGE_H_
