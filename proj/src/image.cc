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

#include "provaudit/image.h"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "provaudit/digest.h"
#include "provaudit/status_macros.h"

namespace provaudit {
namespace {

constexpr uint8_t kPngMagic[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

bool IsPng(std::span<const uint8_t> bytes) {
  return bytes.size() >= 8 && std::memcmp(bytes.data(), kPngMagic, 8) == 0;
}

// Reads one whitespace-delimited PPM header integer, skipping comments.
bool ReadPpmInt(std::span<const uint8_t> bytes, size_t& pos, int& value) {
  while (pos < bytes.size()) {
    if (bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(bytes[pos])) {
      ++pos;
    } else {
      break;
    }
  }
  if (pos >= bytes.size() || !std::isdigit(bytes[pos])) return false;
  long v = 0;
  while (pos < bytes.size() && std::isdigit(bytes[pos])) {
    v = v * 10 + (bytes[pos] - '0');
    if (v > (1 << 24)) return false;
    ++pos;
  }
  value = static_cast<int>(v);
  return true;
}

absl::StatusOr<RgbImage> DecodePpm(std::span<const uint8_t> bytes) {
  size_t pos = 2;
  int width = 0, height = 0, maxval = 0;
  if (!ReadPpmInt(bytes, pos, width) || !ReadPpmInt(bytes, pos, height) ||
      !ReadPpmInt(bytes, pos, maxval)) {
    return absl::InvalidArgumentError("malformed PPM header");
  }
  if (maxval != 255) {
    return absl::InvalidArgumentError("only 8-bit PPM is supported");
  }
  if (width < 1 || height < 1) {
    return absl::InvalidArgumentError("PPM has empty dimensions");
  }
  ++pos;  // single whitespace byte before the raster
  RgbImage image(width, height);
  if (bytes.size() < pos + image.pixels.size()) {
    return absl::InvalidArgumentError("truncated PPM raster");
  }
  std::copy_n(bytes.begin() + pos, image.pixels.size(), image.pixels.begin());
  return image;
}

absl::StatusOr<RgbImage> DecodePng(std::span<const uint8_t> bytes) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size())) {
    return absl::InvalidArgumentError(
        absl::StrCat("PNG decode failed: ", png.message));
  }
  png.format = PNG_FORMAT_RGB;
  if (png.width < 1 || png.height < 1) {
    png_image_free(&png);
    return absl::InvalidArgumentError("PNG has empty dimensions");
  }
  RgbImage image(static_cast<int>(png.width), static_cast<int>(png.height));
  if (!png_image_finish_read(&png, nullptr, image.pixels.data(), 0, nullptr)) {
    std::string msg = png.message;
    png_image_free(&png);
    return absl::InvalidArgumentError(absl::StrCat("PNG decode failed: ", msg));
  }
  return image;
}

}  // namespace

absl::Status ValidateImage(const RgbImage& image) {
  if (image.width < 1 || image.height < 1) {
    return absl::InvalidArgumentError("image has empty dimensions");
  }
  if (image.pixels.size() != size_t(image.width) * image.height * 3) {
    return absl::InvalidArgumentError("pixel buffer does not match dimensions");
  }
  return absl::OkStatus();
}

absl::StatusOr<RgbImage> DecodeImage(std::span<const uint8_t> bytes) {
  if (IsPng(bytes)) return DecodePng(bytes);
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') {
    return DecodePpm(bytes);
  }
  return absl::InvalidArgumentError("unrecognized image encoding");
}

std::vector<uint8_t> EncodePpm(const RgbImage& image) {
  std::string header =
      absl::StrCat("P6\n", image.width, " ", image.height, "\n255\n");
  std::vector<uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.pixels.begin(), image.pixels.end());
  return out;
}

absl::StatusOr<std::vector<uint8_t>> EncodePng(const RgbImage& image) {
  RETURN_IF_ERROR(ValidateImage(image));
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = image.width;
  png.height = image.height;
  png.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, image.pixels.data(),
                                 0, nullptr)) {
    return absl::InternalError(absl::StrCat("PNG encode failed: ", png.message));
  }
  std::vector<uint8_t> out(size);
  if (!png_image_write_to_memory(&png, out.data(), &size, 0,
                                 image.pixels.data(), 0, nullptr)) {
    return absl::InternalError(absl::StrCat("PNG encode failed: ", png.message));
  }
  out.resize(size);
  return out;
}

absl::StatusOr<std::vector<uint8_t>> ReadFileBytes(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    return absl::NotFoundError(absl::StrCat("cannot open ", path.string()));
  }
  return std::vector<uint8_t>(std::istreambuf_iterator<char>(in),
                              std::istreambuf_iterator<char>());
}

absl::Status WriteFileBytes(const std::filesystem::path& path,
                            std::span<const uint8_t> bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    return absl::PermissionDeniedError(
        absl::StrCat("cannot write ", path.string()));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    return absl::DataLossError(absl::StrCat("short write to ", path.string()));
  }
  return absl::OkStatus();
}

absl::StatusOr<RgbImage> ReadImageFile(const std::filesystem::path& path) {
  ASSIGN_OR_RETURN(std::vector<uint8_t> bytes, ReadFileBytes(path));
  return DecodeImage(bytes);
}

absl::Status WriteImageFile(const std::filesystem::path& path,
                            const RgbImage& image) {
  RETURN_IF_ERROR(ValidateImage(image));
  if (path.extension() == ".png") {
    ASSIGN_OR_RETURN(std::vector<uint8_t> bytes, EncodePng(image));
    return WriteFileBytes(path, bytes);
  }
  return WriteFileBytes(path, EncodePpm(image));
}

std::vector<double> ResampleUnitSquare(const RgbImage& image, int side) {
  std::vector<double> out(size_t(side) * side * 3);
  const double sx = double(image.width) / side;
  const double sy = double(image.height) / side;
  for (int y = 0; y < side; ++y) {
    double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, image.height - 1.0);
    int y0 = static_cast<int>(fy);
    int y1 = std::min(y0 + 1, image.height - 1);
    double wy = fy - y0;
    for (int x = 0; x < side; ++x) {
      double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, image.width - 1.0);
      int x0 = static_cast<int>(fx);
      int x1 = std::min(x0 + 1, image.width - 1);
      double wx = fx - x0;
      for (int c = 0; c < 3; ++c) {
        double top = (1 - wx) * image.at(x0, y0)[c] + wx * image.at(x1, y0)[c];
        double bot = (1 - wx) * image.at(x0, y1)[c] + wx * image.at(x1, y1)[c];
        out[(size_t(y) * side + x) * 3 + c] = ((1 - wy) * top + wy * bot) / 255.0;
      }
    }
  }
  return out;
}

std::string ImageDigest(const RgbImage& image) {
  std::string buf = absl::StrCat(image.width, "x", image.height, ":");
  buf.append(reinterpret_cast<const char*>(image.pixels.data()),
             image.pixels.size());
  return Sha256Hex(buf);
}

}  // namespace provaudit
