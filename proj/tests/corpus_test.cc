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

#include <fstream>
#include <set>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace provaudit {
namespace {

using ::testing::HasSubstr;
using testing::TempDir;

SamplePair Inline(std::string id, std::optional<bool> member, uint8_t shade = 0) {
  auto image = std::make_shared<RgbImage>(2, 2);
  image->pixels.assign(image->pixels.size(), shade);
  SamplePair s;
  s.id = id;
  s.text = "caption for " + id;
  s.image.inline_image = std::move(image);
  s.member = member;
  return s;
}

Corpus Labeled(int members, int nonmembers, std::string name = "c") {
  std::vector<SamplePair> samples;
  for (int i = 0; i < members + nonmembers; ++i) {
    samples.push_back(Inline("s" + std::to_string(i), i < members,
                             static_cast<uint8_t>(i)));
  }
  return *Corpus::Create(std::move(name), std::move(samples));
}

void WriteLines(const std::filesystem::path& path,
                const std::vector<std::string>& lines) {
  std::ofstream out(path);
  for (const auto& l : lines) out << l << "\n";
}

TEST(CorpusTest, CreateRejectsEmptyAndDuplicates) {
  EXPECT_FALSE(Corpus::Create("x", {}).ok());
  auto dup = Corpus::Create("x", {Inline("a", true), Inline("a", false)});
  EXPECT_EQ(dup.status().code(), absl::StatusCode::kAlreadyExists);
  EXPECT_THAT(std::string(dup.status().message()), HasSubstr("\"a\""));
}

TEST(CorpusTest, LabelCountsAndLookup) {
  ASSERT_OK_AND_ASSIGN(Corpus c, Corpus::Create("x", {Inline("a", true),
                                                      Inline("b", false),
                                                      Inline("c", std::nullopt)}));
  const LabelCounts counts = c.label_counts();
  EXPECT_EQ(counts.members, 1);
  EXPECT_EQ(counts.nonmembers, 1);
  EXPECT_EQ(counts.unlabeled, 1);
  EXPECT_FALSE(c.fully_labeled());
  ASSERT_NE(c.Find("b"), nullptr);
  EXPECT_EQ(c.Find("b")->text, "caption for b");
  EXPECT_EQ(c.Find("zz"), nullptr);
}

TEST(CorpusTest, SubsetKeepsCorpusOrder) {
  const Corpus c = Labeled(3, 3);
  const std::vector<std::string> ids = {"s4", "s1"};
  ASSERT_OK_AND_ASSIGN(Corpus sub, c.Subset("sub", ids));
  ASSERT_EQ(sub.size(), 2u);
  EXPECT_EQ(sub[0].id, "s1");
  EXPECT_EQ(sub[1].id, "s4");
  const std::vector<std::string> unknown = {"nope"};
  EXPECT_EQ(c.Subset("sub", unknown).status().code(), absl::StatusCode::kNotFound);
}

TEST(ManifestTest, LoadsRecordsAndResolvesRelativePaths) {
  TempDir dir;
  std::filesystem::create_directories(dir / "imgs");
  ASSERT_OK(WriteImageFile(dir / "imgs/a.png", RgbImage(3, 3)));
  ASSERT_OK(WriteImageFile(dir / "imgs/b.ppm", RgbImage(2, 5)));
  WriteLines(dir / "m.jsonl",
             {R"({"id":"a","text":"a dog","image_ref":"imgs/a.png","member":true,"owner":"u1"})",
              "",
              R"({"id":"b","text":"a cat","image_ref":"imgs/b.ppm"})"});
  ASSERT_OK_AND_ASSIGN(Corpus c, LoadManifest(dir / "m.jsonl"));
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c.name(), "m");
  EXPECT_EQ(c[0].member, true);
  EXPECT_EQ(c[0].owner, "u1");
  EXPECT_FALSE(c[1].member.has_value());
  EXPECT_TRUE(std::filesystem::path(c[0].image.path).is_absolute());
  ASSERT_OK_AND_ASSIGN(RgbImage img, c.LoadImage(c[1]));
  EXPECT_EQ(img.height, 5);
}

TEST(ManifestTest, ReportsMalformedRecords) {
  TempDir dir;
  ASSERT_OK(WriteImageFile(dir / "a.png", RgbImage(1, 1)));
  WriteLines(dir / "bad.jsonl", {R"({"id":"a","text":"t"})"});
  auto missing_field = LoadManifest(dir / "bad.jsonl");
  EXPECT_THAT(std::string(missing_field.status().message()), HasSubstr("image_ref"));

  WriteLines(dir / "json.jsonl", {"{not json"});
  EXPECT_THAT(std::string(LoadManifest(dir / "json.jsonl").status().message()),
              HasSubstr("line 1"));

  WriteLines(dir / "dup.jsonl",
             {R"({"id":"a","text":"t","image_ref":"a.png"})",
              R"({"id":"a","text":"u","image_ref":"a.png"})"});
  EXPECT_EQ(LoadManifest(dir / "dup.jsonl").status().code(),
            absl::StatusCode::kAlreadyExists);

  WriteLines(dir / "label.jsonl",
             {R"({"id":"a","text":"t","image_ref":"a.png","member":"yes"})"});
  EXPECT_FALSE(LoadManifest(dir / "label.jsonl").ok());

  EXPECT_EQ(LoadManifest(dir / "nothing.jsonl").status().code(),
            absl::StatusCode::kNotFound);
}

TEST(ManifestTest, ListsEveryUndecodableImage) {
  TempDir dir;
  ASSERT_OK(WriteImageFile(dir / "ok.png", RgbImage(1, 1)));
  {
    std::ofstream junk(dir / "junk.png");
    junk << "junk";
  }
  WriteLines(dir / "m.jsonl",
             {R"({"id":"good","text":"t","image_ref":"ok.png"})",
              R"({"id":"x1","text":"t","image_ref":"junk.png"})",
              R"({"id":"x2","text":"t","image_ref":"gone.png"})"});
  auto c = LoadManifest(dir / "m.jsonl");
  ASSERT_FALSE(c.ok());
  const std::string message(c.status().message());
  EXPECT_THAT(message, HasSubstr("x1"));
  EXPECT_THAT(message, HasSubstr("x2"));
  EXPECT_THAT(message, ::testing::Not(HasSubstr("good")));
}

TEST(ManifestTest, WriteThenLoadRoundTrips) {
  TempDir dir;
  std::vector<SamplePair> samples;
  for (int i = 0; i < 12; ++i) {
    SamplePair s = Inline("id-" + std::to_string(i),
                          i % 3 == 0 ? std::nullopt : std::optional<bool>(i % 2 == 0),
                          static_cast<uint8_t>(10 * i));
    s.text = "text with \"quotes\" and unicode é " + std::to_string(i);
    if (i % 4 == 0) s.owner = "owner-" + std::to_string(i / 4);
    samples.push_back(std::move(s));
  }
  ASSERT_OK_AND_ASSIGN(Corpus c, Corpus::Create("orig", samples));
  ASSERT_OK(WriteManifest(c, dir / "out.jsonl"));
  ASSERT_OK_AND_ASSIGN(Corpus back, LoadManifest(dir / "out.jsonl"));
  ASSERT_EQ(back.size(), c.size());
  for (size_t i = 0; i < c.size(); ++i) {
    EXPECT_EQ(back[i].id, c[i].id);
    EXPECT_EQ(back[i].text, c[i].text);
    EXPECT_EQ(back[i].member, c[i].member);
    EXPECT_EQ(back[i].owner, c[i].owner);
    ASSERT_OK_AND_ASSIGN(RgbImage img, back.LoadImage(back[i]));
    EXPECT_EQ(img, *c[i].image.inline_image);
  }
  ASSERT_OK(WriteManifest(back, dir / "again.jsonl"));
  ASSERT_OK_AND_ASSIGN(Corpus twice, LoadManifest(dir / "again.jsonl"));
  for (size_t i = 0; i < back.size(); ++i) EXPECT_EQ(twice[i], back[i]);
}

TEST(ProportionCountTest, RoundsHalfUp) {
  EXPECT_EQ(ProportionCount(10, 0.5), 5);
  EXPECT_EQ(ProportionCount(5, 0.5), 3);
  EXPECT_EQ(ProportionCount(10, 0.25), 3);
  EXPECT_EQ(ProportionCount(10, 0.24), 2);
  EXPECT_EQ(ProportionCount(10, 1.0), 10);
  EXPECT_EQ(ProportionCount(7, 0.0), 0);
}

TEST(SplitPartialTest, HalfSplitOfBalancedCorpus) {
  const Corpus c = Labeled(50, 50);
  ASSERT_OK_AND_ASSIGN(auto split, SplitPartial(c, 0.5, 1));
  EXPECT_EQ(split.first.label_counts().members, 25);
  EXPECT_EQ(split.first.label_counts().nonmembers, 25);
  EXPECT_EQ(split.second.label_counts().members, 25);
  EXPECT_EQ(split.second.label_counts().nonmembers, 25);
}

TEST(SplitPartialTest, PartitionPropertyAcrossProportionsAndSeeds) {
  const Corpus c = Labeled(37, 23);
  for (double p : {0.05, 0.2, 0.5, 0.77, 0.95}) {
    for (uint64_t seed = 0; seed < 5; ++seed) {
      ASSERT_OK_AND_ASSIGN(auto split, SplitPartial(c, p, seed));
      std::multiset<std::string> seen;
      for (const auto& s : split.first.samples()) seen.insert(s.id);
      for (const auto& s : split.second.samples()) seen.insert(s.id);
      ASSERT_EQ(seen.size(), c.size());
      for (const auto& s : c.samples()) EXPECT_EQ(seen.count(s.id), 1u);
      EXPECT_EQ(split.first.label_counts().members, ProportionCount(37, p));
      EXPECT_EQ(split.first.label_counts().nonmembers, ProportionCount(23, p));
    }
  }
}

TEST(SplitPartialTest, DeterministicPerSeed) {
  const Corpus c = Labeled(20, 20);
  ASSERT_OK_AND_ASSIGN(auto a, SplitPartial(c, 0.5, 9));
  ASSERT_OK_AND_ASSIGN(auto b, SplitPartial(c, 0.5, 9));
  ASSERT_OK_AND_ASSIGN(auto d, SplitPartial(c, 0.5, 10));
  EXPECT_EQ(a.first, b.first);
  EXPECT_NE(a.first, d.first);
}

TEST(SplitPartialTest, Preconditions) {
  const Corpus c = Labeled(4, 4);
  EXPECT_FALSE(SplitPartial(c, 0.0, 0).ok());
  EXPECT_FALSE(SplitPartial(c, 1.0, 0).ok());
  EXPECT_FALSE(SplitPartial(c, 0.05, 0).ok());  // selects no member
  ASSERT_OK_AND_ASSIGN(Corpus unlabeled,
                       Corpus::Create("u", {Inline("a", true), Inline("b", std::nullopt)}));
  EXPECT_EQ(SplitPartial(unlabeled, 0.5, 0).status().code(),
            absl::StatusCode::kFailedPrecondition);
}

TEST(CohortTest, DisjointUsersWithCorrectRoles) {
  const Corpus all = Labeled(60, 80);
  std::vector<std::string> member_ids, nonmember_ids;
  for (const auto& s : all.samples()) {
    (*s.member ? member_ids : nonmember_ids).push_back(s.id);
  }
  ASSERT_OK_AND_ASSIGN(Corpus members, all.Subset("m", member_ids));
  ASSERT_OK_AND_ASSIGN(Corpus nonmembers, all.Subset("n", nonmember_ids));
  CohortSpec spec{.n_victims = 5, .n_fortunate = 4, .samples_per_user = 6,
                  .proportion = 0.5, .seed = 3};
  ASSERT_OK_AND_ASSIGN(UserCohort cohort, BuildCohort(members, nonmembers, spec));
  ASSERT_EQ(cohort.users.size(), 9u);
  EXPECT_EQ(cohort.samples_per_user, 6);
  std::set<std::string> used;
  for (const auto& user : cohort.users) {
    ASSERT_EQ(user.sample_ids.size(), 6u);
    int member_count = 0;
    for (const auto& id : user.sample_ids) {
      EXPECT_TRUE(used.insert(id).second) << id << " reused";
      member_count += *all.Find(id)->member ? 1 : 0;
    }
    if (user.role == UserRole::kVictim) {
      EXPECT_EQ(member_count, 3);
    } else {
      EXPECT_EQ(member_count, 0);
    }
  }
  EXPECT_EQ(cohort.users.front().role, UserRole::kVictim);
  EXPECT_EQ(cohort.users.back().role, UserRole::kFortunate);
}

TEST(CohortTest, RejectsSmallOrInconsistentPools) {
  const Corpus members = Labeled(5, 0, "m");
  const Corpus nonmembers = Labeled(0, 5, "n");
  CohortSpec spec{.n_victims = 1, .n_fortunate = 1, .samples_per_user = 10};
  EXPECT_EQ(BuildCohort(members, nonmembers, spec).status().code(),
            absl::StatusCode::kResourceExhausted);
  spec.samples_per_user = 2;
  EXPECT_OK(BuildCohort(members, nonmembers, spec).status());
  EXPECT_FALSE(BuildCohort(nonmembers, members, spec).ok());
  spec.samples_per_user = 0;
  EXPECT_FALSE(BuildCohort(members, nonmembers, spec).ok());
}

TEST(PseudoTextTest, CaptionsOnlyEmptyTexts) {
  SamplePair a = Inline("a", true, 1);
  a.text.clear();
  SamplePair b = Inline("b", false, 2);
  ASSERT_OK_AND_ASSIGN(Corpus c, Corpus::Create("c", {a, b}));
  ASSERT_OK_AND_ASSIGN(Corpus out, AttachPseudoText(c, MockCaptioner()));
  EXPECT_EQ(out[0].text.rfind("img-", 0), 0u);
  EXPECT_EQ(out[1].text, "caption for b");
  ASSERT_OK_AND_ASSIGN(std::string expected,
                       CaptionImage(MockCaptioner(), *a.image.inline_image));
  EXPECT_EQ(out[0].text, expected);
}

TEST(PseudoTextTest, CollectsCaptionFailures) {
  SamplePair a;
  a.id = "ghost";
  a.image.path = "/nonexistent/ghost.png";
  ASSERT_OK_AND_ASSIGN(Corpus c, Corpus::Create("c", {a}));
  auto out = AttachPseudoText(c, MockCaptioner());
  ASSERT_FALSE(out.ok());
  EXPECT_THAT(std::string(out.status().message()), HasSubstr("ghost"));
}

}  // namespace
}  // namespace provaudit
