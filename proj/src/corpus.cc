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

#include "provaudit/corpus.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <unordered_set>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "json.hpp"
#include "provaudit/digest.h"
#include "provaudit/status_macros.h"

namespace provaudit {
namespace {

using nlohmann::json;

absl::StatusOr<SamplePair> ParseRecord(const json& record, size_t line_no) {
  auto field_error = [&](std::string_view what) {
    return absl::InvalidArgumentError(
        absl::StrCat("manifest line ", line_no, ": ", std::string(what)));
  };
  if (!record.is_object()) return field_error("record is not an object");
  SamplePair sample;
  auto id = record.find("id");
  if (id == record.end() || !id->is_string()) {
    return field_error("missing string field 'id'");
  }
  sample.id = id->get<std::string>();
  auto text = record.find("text");
  if (text == record.end() || !text->is_string()) {
    return field_error("missing string field 'text'");
  }
  sample.text = text->get<std::string>();
  auto image = record.find("image_ref");
  if (image == record.end() || !image->is_string()) {
    return field_error("missing string field 'image_ref'");
  }
  sample.image.path = image->get<std::string>();
  if (auto member = record.find("member");
      member != record.end() && !member->is_null()) {
    if (!member->is_boolean()) return field_error("'member' must be true/false");
    sample.member = member->get<bool>();
  }
  if (auto owner = record.find("owner");
      owner != record.end() && !owner->is_null()) {
    if (!owner->is_string()) return field_error("'owner' must be a string");
    sample.owner = owner->get<std::string>();
  }
  return sample;
}

}  // namespace

absl::StatusOr<Corpus> Corpus::Create(std::string name,
                                      std::vector<SamplePair> samples) {
  if (samples.empty()) {
    return absl::InvalidArgumentError(
        absl::StrCat("corpus '", name, "' is empty"));
  }
  Corpus corpus;
  corpus.name_ = std::move(name);
  corpus.index_.reserve(samples.size());
  for (size_t i = 0; i < samples.size(); ++i) {
    if (!corpus.index_.emplace(samples[i].id, i).second) {
      return absl::AlreadyExistsError(
          absl::StrCat("duplicate sample id \"", samples[i].id, "\""));
    }
  }
  corpus.samples_ = std::move(samples);
  return corpus;
}

const SamplePair* Corpus::Find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &samples_[it->second];
}

LabelCounts Corpus::label_counts() const {
  LabelCounts counts;
  for (const auto& s : samples_) {
    if (!s.member.has_value()) {
      ++counts.unlabeled;
    } else if (*s.member) {
      ++counts.members;
    } else {
      ++counts.nonmembers;
    }
  }
  return counts;
}

bool Corpus::fully_labeled() const { return label_counts().unlabeled == 0; }

absl::StatusOr<RgbImage> Corpus::LoadImage(const SamplePair& sample) const {
  if (sample.image.inline_image) return *sample.image.inline_image;
  auto image = ReadImageFile(sample.image.path);
  if (!image.ok()) {
    return absl::Status(image.status().code(),
                        absl::StrCat("sample ", sample.id, ": ",
                                     image.status().message()));
  }
  return image;
}

absl::StatusOr<Corpus> Corpus::Subset(std::string name,
                                      std::span<const std::string> ids) const {
  std::unordered_set<std::string> wanted(ids.begin(), ids.end());
  for (const auto& id : wanted) {
    if (!Find(id)) {
      return absl::NotFoundError(absl::StrCat("unknown sample id \"", id, "\""));
    }
  }
  std::vector<SamplePair> picked;
  picked.reserve(wanted.size());
  for (const auto& s : samples_) {
    if (wanted.contains(s.id)) picked.push_back(s);
  }
  return Create(std::move(name), std::move(picked));
}

absl::StatusOr<Corpus> LoadManifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    return absl::NotFoundError(
        absl::StrCat("manifest not found: ", path.string()));
  }
  const std::filesystem::path base =
      std::filesystem::absolute(path).parent_path();
  std::vector<SamplePair> samples;
  std::unordered_set<std::string> seen;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json record = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (record.is_discarded()) {
      return absl::InvalidArgumentError(
          absl::StrCat("manifest line ", line_no, ": malformed JSON"));
    }
    ASSIGN_OR_RETURN(SamplePair sample, ParseRecord(record, line_no));
    if (!seen.insert(sample.id).second) {
      return absl::AlreadyExistsError(
          absl::StrCat("duplicate sample id \"", sample.id, "\""));
    }
    std::filesystem::path image_path(sample.image.path);
    if (image_path.is_relative()) image_path = base / image_path;
    sample.image.path = image_path.lexically_normal().string();
    samples.push_back(std::move(sample));
  }

  std::vector<std::string> bad;
  for (const auto& s : samples) {
    if (!ReadImageFile(s.image.path).ok()) bad.push_back(s.id);
  }
  if (!bad.empty()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "undecodable images for ids: ", absl::StrJoin(bad, ", ")));
  }
  return Corpus::Create(path.stem().string(), std::move(samples));
}

absl::Status WriteManifest(const Corpus& corpus,
                           const std::filesystem::path& path) {
  const std::filesystem::path image_dir =
      std::filesystem::absolute(path).parent_path() /
      (path.stem().string() + "_images");
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    return absl::PermissionDeniedError(
        absl::StrCat("cannot write manifest ", path.string()));
  }
  for (const auto& s : corpus.samples()) {
    std::string image_ref = s.image.path;
    if (s.image.inline_image) {
      std::filesystem::create_directories(image_dir);
      auto file = image_dir / (Sha256Hex(s.id).substr(0, 24) + ".ppm");
      RETURN_IF_ERROR(WriteImageFile(file, *s.image.inline_image));
      image_ref = file.string();
    }
    json record = {{"id", s.id}, {"text", s.text}, {"image_ref", image_ref}};
    if (s.member.has_value()) record["member"] = *s.member;
    if (s.owner.has_value()) record["owner"] = *s.owner;
    out << record.dump() << '\n';
  }
  if (!out) return absl::DataLossError("short write to manifest");
  return absl::OkStatus();
}

int64_t ProportionCount(int64_t total, double proportion) {
  return static_cast<int64_t>(std::floor(total * proportion + 0.5));
}

absl::StatusOr<std::pair<Corpus, Corpus>> SplitPartial(const Corpus& corpus,
                                                       double proportion,
                                                       uint64_t seed) {
  if (!(proportion > 0.0 && proportion < 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("proportion ", proportion, " outside (0, 1)"));
  }
  if (!corpus.fully_labeled()) {
    return absl::FailedPreconditionError(
        absl::StrCat("corpus '", corpus.name(), "' has unlabeled samples"));
  }
  std::vector<size_t> members, nonmembers;
  for (size_t i = 0; i < corpus.size(); ++i) {
    (*corpus[i].member ? members : nonmembers).push_back(i);
  }
  const int64_t take_m = ProportionCount(members.size(), proportion);
  const int64_t take_n = ProportionCount(nonmembers.size(), proportion);
  if (take_m < 1) {
    return absl::InvalidArgumentError(
        "proportion selects no member samples for training");
  }
  std::mt19937_64 rng(seed);
  std::shuffle(members.begin(), members.end(), rng);
  std::shuffle(nonmembers.begin(), nonmembers.end(), rng);
  std::vector<bool> in_train(corpus.size(), false);
  for (int64_t i = 0; i < take_m; ++i) in_train[members[i]] = true;
  for (int64_t i = 0; i < take_n; ++i) in_train[nonmembers[i]] = true;

  std::vector<SamplePair> train, eval;
  for (size_t i = 0; i < corpus.size(); ++i) {
    (in_train[i] ? train : eval).push_back(corpus[i]);
  }
  ASSIGN_OR_RETURN(Corpus train_corpus,
                   Corpus::Create(corpus.name() + ".train", std::move(train)));
  ASSIGN_OR_RETURN(Corpus eval_corpus,
                   Corpus::Create(corpus.name() + ".eval", std::move(eval)));
  return std::make_pair(std::move(train_corpus), std::move(eval_corpus));
}

std::string_view UserRoleName(UserRole role) {
  return role == UserRole::kVictim ? "victim" : "fortunate";
}

absl::StatusOr<UserCohort> BuildCohort(const Corpus& member_pool,
                                       const Corpus& nonmember_pool,
                                       const CohortSpec& spec) {
  if (spec.samples_per_user < 1) {
    return absl::InvalidArgumentError("samples_per_user must be positive");
  }
  if (spec.n_victims < 0 || spec.n_fortunate < 0 ||
      spec.n_victims + spec.n_fortunate == 0) {
    return absl::InvalidArgumentError("cohort needs at least one user");
  }
  if (!(spec.proportion > 0.0 && spec.proportion <= 1.0)) {
    return absl::InvalidArgumentError("victim proportion outside (0, 1]");
  }
  for (const auto& s : member_pool.samples()) {
    if (s.member.has_value() && !*s.member) {
      return absl::InvalidArgumentError(
          absl::StrCat("member pool holds non-member ", s.id));
    }
  }
  for (const auto& s : nonmember_pool.samples()) {
    if (s.member.has_value() && *s.member) {
      return absl::InvalidArgumentError(
          absl::StrCat("non-member pool holds member ", s.id));
    }
  }
  const int n = spec.samples_per_user;
  const int64_t per_victim_members = ProportionCount(n, spec.proportion);
  const int64_t need_members = spec.n_victims * per_victim_members;
  const int64_t need_nonmembers =
      spec.n_victims * (n - per_victim_members) +
      int64_t(spec.n_fortunate) * n;
  if (need_members > int64_t(member_pool.size()) ||
      need_nonmembers > int64_t(nonmember_pool.size())) {
    return absl::ResourceExhaustedError(absl::StrCat(
        "cohort needs ", need_members, " members and ", need_nonmembers,
        " non-members; pools hold ", member_pool.size(), " and ",
        nonmember_pool.size()));
  }

  std::vector<size_t> m_order(member_pool.size()), n_order(nonmember_pool.size());
  std::iota(m_order.begin(), m_order.end(), 0);
  std::iota(n_order.begin(), n_order.end(), 0);
  std::mt19937_64 rng(spec.seed);
  std::shuffle(m_order.begin(), m_order.end(), rng);
  std::shuffle(n_order.begin(), n_order.end(), rng);
  size_t next_m = 0, next_n = 0;

  UserCohort cohort;
  cohort.samples_per_user = n;
  int serial = 0;
  auto new_user = [&](UserRole role, double proportion) {
    CohortUser user;
    user.user_id = absl::StrCat("user-", serial++);
    user.role = role;
    user.member_proportion = proportion;
    return user;
  };
  for (int v = 0; v < spec.n_victims; ++v) {
    CohortUser user = new_user(UserRole::kVictim, spec.proportion);
    for (int64_t k = 0; k < per_victim_members; ++k) {
      user.sample_ids.push_back(member_pool[m_order[next_m++]].id);
    }
    for (int64_t k = per_victim_members; k < n; ++k) {
      user.sample_ids.push_back(nonmember_pool[n_order[next_n++]].id);
    }
    cohort.users.push_back(std::move(user));
  }
  for (int f = 0; f < spec.n_fortunate; ++f) {
    CohortUser user = new_user(UserRole::kFortunate, 0.0);
    for (int k = 0; k < n; ++k) {
      user.sample_ids.push_back(nonmember_pool[n_order[next_n++]].id);
    }
    cohort.users.push_back(std::move(user));
  }
  return cohort;
}

absl::StatusOr<Corpus> AttachPseudoText(const Corpus& corpus,
                                        const Captioner& captioner) {
  std::vector<SamplePair> samples(corpus.samples().begin(),
                                  corpus.samples().end());
  std::vector<std::string> failures;
  for (auto& s : samples) {
    if (!s.text.empty()) continue;
    auto image = corpus.LoadImage(s);
    if (!image.ok()) {
      failures.push_back(absl::StrCat(s.id, " (", image.status().message(), ")"));
      continue;
    }
    auto caption = CaptionImage(captioner, *image);
    if (!caption.ok()) {
      failures.push_back(
          absl::StrCat(s.id, " (", caption.status().message(), ")"));
      continue;
    }
    s.text = *std::move(caption);
  }
  if (!failures.empty()) {
    return absl::InternalError(absl::StrCat("captioning failed for: ",
                                            absl::StrJoin(failures, ", ")));
  }
  return Corpus::Create(corpus.name(), std::move(samples));
}

}  // namespace provaudit
