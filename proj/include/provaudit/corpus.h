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

#ifndef PROVAUDIT_CORPUS_H_
#define PROVAUDIT_CORPUS_H_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "absl/status/statusor.h"
#include "provaudit/encoders.h"
#include "provaudit/image.h"

namespace provaudit {

// Either a filesystem path or an in-memory raster. Manifest-loaded corpora
// always carry absolute paths.
struct ImageRef {
  std::string path;
  std::shared_ptr<const RgbImage> inline_image;

  friend bool operator==(const ImageRef& a, const ImageRef& b) {
    if (a.path != b.path) return false;
    if (!a.inline_image || !b.inline_image) {
      return a.inline_image == b.inline_image;
    }
    return *a.inline_image == *b.inline_image;
  }
};

// One text-image record. `member` is ground truth when known.
struct SamplePair {
  std::string id;
  std::string text;
  ImageRef image;
  std::optional<bool> member;
  std::optional<std::string> owner;

  friend bool operator==(const SamplePair&, const SamplePair&) = default;
};

struct LabelCounts {
  int64_t members = 0;
  int64_t nonmembers = 0;
  int64_t unlabeled = 0;
};

// Ordered, non-empty collection of samples with unique ids. Immutable after
// construction.
class Corpus {
 public:
  static absl::StatusOr<Corpus> Create(std::string name,
                                       std::vector<SamplePair> samples);

  const std::string& name() const { return name_; }
  std::span<const SamplePair> samples() const { return samples_; }
  size_t size() const { return samples_.size(); }
  const SamplePair& operator[](size_t i) const { return samples_[i]; }

  const SamplePair* Find(std::string_view id) const;
  LabelCounts label_counts() const;
  bool fully_labeled() const;

  absl::StatusOr<RgbImage> LoadImage(const SamplePair& sample) const;

  // Samples whose id is in `ids`, in corpus order.
  absl::StatusOr<Corpus> Subset(std::string name,
                                std::span<const std::string> ids) const;

  friend bool operator==(const Corpus& a, const Corpus& b) {
    return a.name_ == b.name_ && a.samples_ == b.samples_;
  }

 private:
  Corpus() = default;

  std::string name_;
  std::vector<SamplePair> samples_;
  std::unordered_map<std::string, size_t> index_;
};

// Reads a line-delimited JSON manifest. Relative image paths resolve against
// the manifest directory. Every image is decoded once to verify it.
absl::StatusOr<Corpus> LoadManifest(const std::filesystem::path& path);

// Inline images are written next to the manifest under "<stem>_images/".
absl::Status WriteManifest(const Corpus& corpus,
                           const std::filesystem::path& path);

// Seeded stratified split: `proportion` of members and of non-members go to
// the first corpus, the remainder to the second. Both keep corpus order.
absl::StatusOr<std::pair<Corpus, Corpus>> SplitPartial(const Corpus& corpus,
                                                       double proportion,
                                                       uint64_t seed);

// Round-half-up count used for proportions throughout.
int64_t ProportionCount(int64_t total, double proportion);

enum class UserRole { kVictim, kFortunate };

std::string_view UserRoleName(UserRole role);

struct CohortUser {
  std::string user_id;
  std::vector<std::string> sample_ids;
  UserRole role = UserRole::kFortunate;
  double member_proportion = 0.0;
};

struct UserCohort {
  std::vector<CohortUser> users;
  int samples_per_user = 0;
};

struct CohortSpec {
  int n_victims = 100;
  int n_fortunate = 100;
  int samples_per_user = 10;
  double proportion = 1.0;
  uint64_t seed = 0;
};

// Victims draw round(n * proportion) members and fill up with non-members;
// fortunate users draw non-members only. No sample is assigned twice.
absl::StatusOr<UserCohort> BuildCohort(const Corpus& member_pool,
                                       const Corpus& nonmember_pool,
                                       const CohortSpec& spec);

// Fills empty texts with captioner output; present texts are untouched.
// Failures are collected and reported together.
absl::StatusOr<Corpus> AttachPseudoText(const Corpus& corpus,
                                        const Captioner& captioner);

}  // namespace provaudit

#endif  // PROVAUDIT_CORPUS_H_
