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

#include "provaudit/pipeline.h"

#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "httplib.h"
#include "provaudit/audit_model.h"
#include "provaudit/remote_backend.h"
#include "test_util.h"

namespace provaudit {
namespace {

using ::testing::HasSubstr;
using json = nlohmann::json;
namespace fs = std::filesystem;

std::string ReadAll(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class PipelineTest : public ::testing::Test {
 protected:
  // Small synthetic run: `members` + `members` samples, N = `n`.
  RunConfig Config(int members, int n, std::vector<std::string> extra = {}) {
    json j = json::object();
    std::vector<std::string> overrides = {
        "output_dir=" + dir_.path().string(),
        "target.corpus.synth.n_members=" + std::to_string(members),
        "target.corpus.synth.n_nonmembers=" + std::to_string(members),
        "target.corpus.synth.dim=16",
        "setting.public.corpus.synth.dim=16",
        "encoder.dim=16",
        "query.n=" + std::to_string(n),
        "query.workers=2",
        "train.epochs=5",
        "train.batch_size=10",
    };
    overrides.insert(overrides.end(), extra.begin(), extra.end());
    EXPECT_OK(ApplyOverrides(j, overrides));
    auto config = ResolveRunConfig(j);
    EXPECT_TRUE(config.ok()) << config.status();
    return *config;
  }

  testing::TempDir dir_;
};

TEST_F(PipelineTest, GenerateCachesEveryBatch) {
  const RunConfig config = Config(10, 8);
  ASSERT_OK_AND_ASSIGN(json first, CmdGenerate(config));
  EXPECT_EQ(first["backend_calls"], 20);
  EXPECT_EQ(first["sources"][0]["images_generated"], 160);
  EXPECT_EQ(first["failed"], 0);
  EXPECT_EQ(first["config_digest"], config.digest);

  ASSERT_OK_AND_ASSIGN(json second, CmdGenerate(config));
  EXPECT_EQ(second["backend_calls"], 0);
  EXPECT_EQ(second["sources"][0]["cache_hits"], 20);

  const RunConfig more_steps = Config(10, 8, {"query.inference_steps=30"});
  ASSERT_OK_AND_ASSIGN(json third, CmdGenerate(more_steps));
  EXPECT_EQ(third["backend_calls"], 20);
  ASSERT_OK_AND_ASSIGN(json fourth, CmdGenerate(config));
  EXPECT_EQ(fourth["backend_calls"], 0);
}

TEST_F(PipelineTest, FeaturesAreCompleteAndReproducible) {
  const RunConfig config = Config(10, 8);
  ASSERT_OK(CmdGenerate(config).status());
  ASSERT_OK_AND_ASSIGN(json report, CmdFeatures(config));
  EXPECT_EQ(report["sources"][0]["rows"], 20);
  ASSERT_OK_AND_ASSIGN(FeatureTable table, ReadFeatureTable(FeaturePath(config, "target")));
  ASSERT_EQ(table.rows.size(), 20u);
  for (const auto& row : table.rows) {
    EXPECT_EQ(row.feature.align_diffs.size(), 8u);
    EXPECT_EQ(row.feature.similarities.size(), 8u);
    EXPECT_TRUE(std::is_sorted(row.feature.align_diffs.rbegin(),
                               row.feature.align_diffs.rend()));
  }
  const std::string bytes = ReadAll(FeaturePath(config, "target"));
  ASSERT_OK(CmdFeatures(config).status());
  EXPECT_EQ(ReadAll(FeaturePath(config, "target")), bytes);
}

TEST_F(PipelineTest, FeaturesRequireGeneratedBatches) {
  const RunConfig config = Config(10, 8);
  auto report = CmdFeatures(config);
  EXPECT_EQ(report.status().code(), absl::StatusCode::kFailedPrecondition);
  EXPECT_THAT(std::string(report.status().message()), HasSubstr("run generate first"));
}

TEST_F(PipelineTest, MixingEncodersIsAHardError) {
  const RunConfig config = Config(10, 8);
  ASSERT_OK(CmdGenerate(config).status());
  ASSERT_OK(CmdFeatures(config).status());
  const RunConfig other = Config(10, 8, {"encoder.kind=mock"});
  auto report = CmdFeatures(other);
  EXPECT_EQ(report.status().code(), absl::StatusCode::kFailedPrecondition);
  EXPECT_THAT(std::string(report.status().message()), HasSubstr("mixing encoders"));
}

// Serves stub images but refuses texts whose hash is odd, until healed.
class FlakyEndpoint {
 public:
  FlakyEndpoint() {
    server_.Post("/generate", [this](const httplib::Request& req, httplib::Response& res) {
      auto request = DecodeGenerationRequest(json::parse(req.body));
      if (!request.ok()) {
        res.status = 400;
        return;
      }
      if (!healed_.load() && std::hash<std::string>()(request->text) % 2 == 1) {
        res.status = 503;
        return;
      }
      calls_.fetch_add(1);
      auto images = StubBackend().Generate(*request);
      res.set_content(EncodeGenerationResponse(*images)->dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FlakyEndpoint() {
    server_.stop();
    thread_.join();
  }
  std::string url() const {
    return "http://127.0.0.1:" + std::to_string(port_) + "/generate";
  }
  void Heal() { healed_ = true; }
  int served() const { return calls_.load(); }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::atomic<bool> healed_{false};
  std::atomic<int> calls_{0};
};

TEST_F(PipelineTest, PartialFailureRecordsMissingBatchesAndResumes) {
  FlakyEndpoint endpoint;
  const RunConfig config =
      Config(10, 4, {"target.backend.kind=remote",
                     "target.backend.endpoint=" + endpoint.url(),
                     "query.max_attempts=1", "query.initial_backoff_ms=1",
                     "encoder.kind=mock"});
  auto failed = CmdGenerate(config);
  ASSERT_EQ(failed.status().code(), absl::StatusCode::kUnavailable);
  const fs::path missing = config.output_dir / "missing.jsonl";
  ASSERT_TRUE(fs::exists(missing));
  std::istringstream lines(ReadAll(missing));
  int missing_count = 0;
  for (std::string line; std::getline(lines, line);) {
    const json m = json::parse(line);
    EXPECT_TRUE(m.contains("sample_id"));
    EXPECT_TRUE(m.contains("fingerprint"));
    ++missing_count;
  }
  const int served_first = endpoint.served();
  ASSERT_GT(missing_count, 0);
  ASSERT_EQ(served_first + missing_count, 20);

  endpoint.Heal();
  ASSERT_OK_AND_ASSIGN(json resumed, CmdGenerate(config));
  EXPECT_EQ(resumed["backend_calls"], missing_count);
  EXPECT_EQ(endpoint.served(), 20);
  EXPECT_FALSE(fs::exists(missing));
  ASSERT_OK(CmdFeatures(config).status());
}

class TrainedPipelineTest : public PipelineTest {
 protected:
  RunConfig TrainedConfig(std::vector<std::string> extra = {}) {
    std::vector<std::string> overrides = {
        "user_audit.cohort.n_victims=4", "user_audit.cohort.n_fortunate=4",
        "user_audit.cohort.samples_per_user=10"};
    overrides.insert(overrides.end(), extra.begin(), extra.end());
    return Config(200, 10, overrides);
  }
  void Prepare(const RunConfig& config) {
    ASSERT_OK(CmdGenerate(config).status());
    ASSERT_OK(CmdFeatures(config).status());
    auto train = CmdTrain(config);
    ASSERT_TRUE(train.ok()) << train.status();
  }
};

TEST_F(TrainedPipelineTest, TrainEvalAndUserAuditReports) {
  const RunConfig config = TrainedConfig();
  Prepare(config);
  ASSERT_TRUE(fs::exists(CheckpointPath(config)));
  ASSERT_OK_AND_ASSIGN(Checkpoint checkpoint, LoadCheckpoint(CheckpointPath(config)));
  EXPECT_EQ(checkpoint.model.n(), 10);
  EXPECT_EQ(checkpoint.selected_epoch, 5);
  const json history = json::parse(ReadAll(ReportPath(config, "history.json")));
  EXPECT_EQ(history.size(), 5u);

  ASSERT_OK_AND_ASSIGN(json eval, CmdEval(config));
  EXPECT_EQ(eval["eval_samples"], 200);
  for (const char* key : {"acc", "pre", "rec", "f1", "auc", "tpr_at_fpr"}) {
    EXPECT_TRUE(eval["metrics"].contains(key)) << key;
  }
  EXPECT_TRUE(fs::exists(ReportPath(config, "roc.csv")));
  EXPECT_TRUE(fs::exists(ReportPath(config, "roc.png")));
  EXPECT_TRUE(eval.contains("defaults_provenance"));

  ASSERT_OK_AND_ASSIGN(json audit, CmdUserAudit(config));
  EXPECT_EQ(audit["threshold"], 0.61);
  EXPECT_EQ(audit["threshold_mode"], "per_n");
  EXPECT_EQ(audit["users"], 8);
  EXPECT_EQ(audit["samples_per_user"], 10);
  EXPECT_TRUE(audit["report"].contains("metrics"));
  EXPECT_TRUE(audit.contains("sample_accuracy_at_0_5"));
}

TEST_F(TrainedPipelineTest, GridModeWritesTheSweep) {
  const RunConfig config = TrainedConfig({"user_audit.threshold_mode=grid"});
  Prepare(config);
  ASSERT_OK_AND_ASSIGN(json audit, CmdUserAudit(config));
  EXPECT_EQ(audit["grid"]["sweep"].size(), 99u);
  EXPECT_TRUE(fs::exists(ReportPath(config, "sweep.csv")));
  EXPECT_TRUE(fs::exists(ReportPath(config, "sweep.png")));
  const double tau = audit["threshold"];
  EXPECT_GE(tau, 0.01);
  EXPECT_LE(tau, 0.99);
}

TEST_F(TrainedPipelineTest, ArityMismatchIsRejected) {
  const RunConfig config = TrainedConfig();
  Prepare(config);
  json j = config.resolved;
  j["query"]["n"] = 4;
  ASSERT_OK_AND_ASSIGN(RunConfig four, ResolveRunConfig(j));
  fs::remove(FeaturePath(four, "target"));
  fs::remove_all(four.output_dir / "embeddings");
  ASSERT_OK(CmdGenerate(four).status());
  ASSERT_OK(CmdFeatures(four).status());
  auto eval = CmdEval(four);
  ASSERT_FALSE(eval.ok());
  EXPECT_THAT(std::string(eval.status().message()), HasSubstr("arity mismatch"));
}

TEST_F(PipelineTest, ShadowTrainsOnPublicOnly) {
  const RunConfig config = Config(20, 4, {"setting.kind=shadow",
                                          "setting.public.corpus.synth.n_members=30",
                                          "setting.public.corpus.synth.n_nonmembers=30"});
  ASSERT_OK_AND_ASSIGN(json gen, CmdGenerate(config));
  ASSERT_EQ(gen["sources"].size(), 2u);
  ASSERT_OK(CmdFeatures(config).status());
  ASSERT_OK_AND_ASSIGN(json train, CmdTrain(config));
  EXPECT_EQ(train["train_source"], "public");
  EXPECT_EQ(train["train_samples"], 60);
  ASSERT_OK_AND_ASSIGN(json eval, CmdEval(config));
  EXPECT_EQ(eval["eval_source"], "target");
  EXPECT_EQ(eval["eval_samples"], 40);
}

TEST_F(PipelineTest, PartialSplitIsDisjoint) {
  const RunConfig config = Config(25, 4, {"setting.proportion=0.2"});
  ASSERT_OK_AND_ASSIGN(Slice train, TrainingSlice(config));
  ASSERT_OK_AND_ASSIGN(Slice eval, EvaluationSlice(config));
  EXPECT_EQ(train.corpus.size(), 10u);
  EXPECT_EQ(eval.corpus.size(), 40u);
  for (const auto& s : train.corpus.samples()) EXPECT_EQ(eval.corpus.Find(s.id), nullptr);
}

TEST_F(PipelineTest, OutputDirectoryLock) {
  const RunConfig config = Config(10, 4);
  fs::create_directories(config.output_dir);
  {
    ASSERT_OK_AND_ASSIGN(OutputLock lock, OutputLock::Acquire(config.output_dir));
    auto blocked = CmdGenerate(config);
    EXPECT_EQ(blocked.status().code(), absl::StatusCode::kAborted);
  }
  EXPECT_OK(CmdGenerate(config).status());
}

TEST(ErrorReportTest, Shape) {
  const json j = ErrorReport("train", absl::InvalidArgumentError("bad"));
  EXPECT_EQ(j["command"], "train");
  EXPECT_EQ(j["error"]["code"], "INVALID_ARGUMENT");
  EXPECT_EQ(j["error"]["message"], "bad");
}

}  // namespace
}  // namespace provaudit
