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

#include "provaudit/features.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "json.hpp"
#include "provaudit/status_macros.h"

namespace provaudit {
namespace {

using nlohmann::json;

constexpr char kFeatureFormat[] = "provaudit-features/1";

absl::Status CheckSameDim(const EmbeddingVector& anchor,
                          std::span<const EmbeddingVector> others) {
  for (const auto& v : others) {
    if (v.dim() != anchor.dim()) {
      return absl::InvalidArgumentError(absl::StrCat(
          "dimension mismatch: ", anchor.dim(), " vs ", v.dim()));
    }
  }
  return absl::OkStatus();
}

absl::StatusOr<std::vector<double>> AnchorScores(
    const EmbeddingVector& anchor, std::span<const EmbeddingVector> generated) {
  RETURN_IF_ERROR(CheckSameDim(anchor, generated));
  std::vector<double> scores;
  scores.reserve(generated.size());
  for (const auto& g : generated) scores.push_back(Cosine(anchor.values, g.values));
  return scores;
}

}  // namespace

double Cosine(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (size_t k = 0; k < a.size(); ++k) sum += a[k] * b[k];
  return sum;
}

absl::StatusOr<std::vector<double>> AlignmentScores(
    const EmbeddingVector& text, std::span<const EmbeddingVector> generated) {
  return AnchorScores(text, generated);
}

absl::StatusOr<double> AlignmentBase(const EmbeddingVector& text,
                                     const EmbeddingVector& image) {
  RETURN_IF_ERROR(CheckSameDim(text, std::span(&image, 1)));
  return Cosine(text.values, image.values);
}

absl::StatusOr<std::vector<double>> SimilarityScores(
    const EmbeddingVector& image, std::span<const EmbeddingVector> generated) {
  return AnchorScores(image, generated);
}

absl::StatusOr<MembershipFeature> BuildFeature(
    std::span<const double> alignments, double base,
    std::span<const double> similarities, std::string sample_id, bool sort) {
  if (alignments.empty() || alignments.size() != similarities.size()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "feature for ", sample_id, ": ", alignments.size(),
        " alignment scores vs ", similarities.size(), " similarity scores"));
  }
  MembershipFeature f;
  f.sample_id = std::move(sample_id);
  f.base = base;
  f.align_diffs.reserve(alignments.size());
  for (double a : alignments) f.align_diffs.push_back(a - base);
  f.similarities.assign(similarities.begin(), similarities.end());
  if (sort) {
    std::sort(f.align_diffs.begin(), f.align_diffs.end(), std::greater<>());
    std::sort(f.similarities.begin(), f.similarities.end(), std::greater<>());
  }
  return f;
}

double MeanSquaredError(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum / static_cast<double>(a.size());
}

absl::StatusOr<double> PixelErrorScore(const RgbImage& image,
                                       std::span<const RgbImage> generated,
                                       int side) {
  if (generated.empty()) {
    return absl::InvalidArgumentError("pixel error needs a generated image");
  }
  if (side < 1) return absl::InvalidArgumentError("side must be positive");
  RETURN_IF_ERROR(ValidateImage(image));
  const std::vector<double> reference = ResampleUnitSquare(image, side);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& g : generated) {
    RETURN_IF_ERROR(ValidateImage(g));
    best = std::min(best, MeanSquaredError(reference, ResampleUnitSquare(g, side)));
  }
  return best;
}

const FeatureRecord* FeatureTable::Find(std::string_view sample_id) const {
  for (const auto& row : rows) {
    if (row.feature.sample_id == sample_id) return &row;
  }
  return nullptr;
}

absl::Status WriteFeatureTable(const std::filesystem::path& path,
                               const FeatureTable& table) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    return absl::PermissionDeniedError(
        absl::StrCat("cannot write ", path.string()));
  }
  out << json{{"format", kFeatureFormat},
              {"encoder_id", table.encoder_id},
              {"n", table.n},
              {"sorted", table.sorted}}
             .dump()
      << '\n';
  for (const auto& row : table.rows) {
    if (row.feature.n() != table.n) {
      return absl::InvalidArgumentError(
          absl::StrCat("row ", row.feature.sample_id, " has N=", row.feature.n(),
                       ", table has N=", table.n));
    }
    json j = {{"id", row.feature.sample_id},
              {"d", row.feature.align_diffs},
              {"s", row.feature.similarities},
              {"base", row.feature.base},
              {"encoder_id", table.encoder_id},
              {"n", table.n},
              {"fingerprint", row.fingerprint}};
    if (row.pixel_error) j["pixel_error"] = *row.pixel_error;
    out << j.dump() << '\n';
  }
  if (!out) return absl::DataLossError("short write to feature file");
  return absl::OkStatus();
}

absl::StatusOr<FeatureTable> ReadFeatureTable(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    return absl::NotFoundError(
        absl::StrCat("feature file not found: ", path.string()));
  }
  std::string line;
  if (!std::getline(in, line)) {
    return absl::DataLossError(absl::StrCat(path.string(), " is empty"));
  }
  json header = json::parse(line, nullptr, false);
  if (header.is_discarded() || header.value("format", "") != kFeatureFormat) {
    return absl::DataLossError(
        absl::StrCat(path.string(), " is not a feature file"));
  }
  FeatureTable table;
  table.encoder_id = header.value("encoder_id", "");
  table.n = header.value("n", 0);
  table.sorted = header.value("sorted", true);
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      return absl::DataLossError(
          absl::StrCat(path.string(), ":", line_no, ": malformed row"));
    }
    if (j.value("encoder_id", "") != table.encoder_id) {
      return absl::FailedPreconditionError(absl::StrCat(
          path.string(), ":", line_no, ": mixed encoder ids (",
          j.value("encoder_id", ""), " vs ", table.encoder_id, ")"));
    }
    FeatureRecord row;
    try {
      row.feature.sample_id = j.at("id").get<std::string>();
      row.feature.align_diffs = j.at("d").get<std::vector<double>>();
      row.feature.similarities = j.at("s").get<std::vector<double>>();
      row.feature.base = j.at("base").get<double>();
      row.fingerprint = j.value("fingerprint", "");
      if (j.contains("pixel_error")) {
        row.pixel_error = j["pixel_error"].get<double>();
      }
    } catch (const json::exception& e) {
      return absl::DataLossError(
          absl::StrCat(path.string(), ":", line_no, ": ", e.what()));
    }
    if (row.feature.n() != table.n ||
        static_cast<int>(row.feature.similarities.size()) != table.n) {
      return absl::DataLossError(absl::StrCat(
          path.string(), ":", line_no, ": row length does not match N"));
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace provaudit
