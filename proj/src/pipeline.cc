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

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <unordered_map>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_join.h"
#include "provaudit/audit_model.h"
#include "provaudit/embedding_store.h"
#include "provaudit/features.h"
#include "provaudit/generation_cache.h"
#include "provaudit/image.h"
#include "provaudit/kernels.h"
#include "provaudit/metrics.h"
#include "provaudit/plot.h"
#include "provaudit/remote_backend.h"
#include "provaudit/status_macros.h"
#include "provaudit/synthworld.h"
#include "provaudit/training.h"
#include "provaudit/userlevel.h"

namespace provaudit {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr size_t kFeatureChunk = 256;
constexpr size_t kMaxListedIds = 20;

// Serializes progress lines from worker threads.
class Progress {
 public:
  explicit Progress(std::ostream* out) : out_(out) {}
  void Line(std::string_view text) {
    if (out_ == nullptr) return;
    std::lock_guard<std::mutex> lock(mu_);
    *out_ << text << "\n";
    out_->flush();
  }

 private:
  std::ostream* out_;
  std::mutex mu_;
};

class CountingBackend : public GenerationBackend {
 public:
  explicit CountingBackend(const GenerationBackend& inner) : inner_(inner) {}
  std::string Id() const override { return inner_.Id(); }
  absl::StatusOr<std::vector<RgbImage>> Generate(
      const GenerationRequest& request) const override {
    calls_.fetch_add(1);
    return inner_.Generate(request);
  }
  int64_t calls() const { return calls_.load(); }

 private:
  const GenerationBackend& inner_;
  mutable std::atomic<int64_t> calls_{0};
};

absl::Status WriteText(const fs::path& path, std::string_view text) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      return absl::PermissionDeniedError(
          absl::StrCat("cannot write ", path.string()));
    }
    out << text;
    if (!out) return absl::DataLossError(absl::StrCat("short write to ", tmp.string()));
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    return absl::InternalError(absl::StrCat("rename to ", path.string(),
                                            " failed: ", ec.message()));
  }
  return absl::OkStatus();
}

json ReportHeader(const RunConfig& config, std::string_view command) {
  return {{"command", command},
          {"config_digest", config.digest},
          {"defaults_provenance", DefaultsProvenance()}};
}

absl::Status WriteReport(const RunConfig& config, std::string_view name,
                         const json& report) {
  return WriteText(ReportPath(config, name), report.dump(2) + "\n");
}

absl::Status WritePlot(const fs::path& path, std::span<const PlotSeries> series,
                       const PlotAxes& axes) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  return WriteImageFile(path, RenderLinePlot(series, axes));
}

std::string ListIds(const std::vector<std::string>& ids) {
  std::string out = absl::StrJoin(
      ids.begin(), ids.begin() + std::min(ids.size(), kMaxListedIds), ", ");
  if (ids.size() > kMaxListedIds) {
    absl::StrAppend(&out, ", ... (", ids.size() - kMaxListedIds, " more)");
  }
  return out;
}

absl::Status CheckEncoderId(const fs::path& artifact, const std::string& found,
                            const std::string& expected) {
  if (found == expected) return absl::OkStatus();
  return absl::FailedPreconditionError(absl::StrCat(
      artifact.string(), " was built with encoder ", found,
      " but this run uses ", expected,
      "; mixing encoders breaks the shared embedding space"));
}

// Features and labels of `corpus`, in corpus order, from its feature table.
struct LabeledFeatures {
  std::vector<MembershipFeature> features;
  std::vector<bool> labels;
  std::vector<std::optional<double>> pixel_errors;
};

absl::StatusOr<LabeledFeatures> Gather(const FeatureTable& table,
                                       const Corpus& corpus,
                                       const fs::path& table_path) {
  std::unordered_map<std::string, const FeatureRecord*> rows;
  rows.reserve(table.rows.size());
  for (const auto& row : table.rows) rows.emplace(row.feature.sample_id, &row);
  LabeledFeatures out;
  std::vector<std::string> missing, unlabeled;
  for (const auto& sample : corpus.samples()) {
    auto it = rows.find(sample.id);
    if (it == rows.end()) {
      missing.push_back(sample.id);
      continue;
    }
    if (!sample.member.has_value()) {
      unlabeled.push_back(sample.id);
      continue;
    }
    out.features.push_back(it->second->feature);
    out.labels.push_back(*sample.member);
    out.pixel_errors.push_back(it->second->pixel_error);
  }
  if (!missing.empty()) {
    return absl::FailedPreconditionError(
        absl::StrCat(table_path.string(), " has no row for ", missing.size(),
                     " samples: ", ListIds(missing), "; run features first"));
  }
  if (!unlabeled.empty()) {
    return absl::FailedPreconditionError(absl::StrCat(
        unlabeled.size(), " samples lack labels: ", ListIds(unlabeled)));
  }
  return out;
}

absl::StatusOr<std::vector<double>> PredictAll(const AuditModel& model,
                                               const FeatureTable& table,
                                               const fs::path& table_path,
                                               const Corpus& corpus,
                                               LabeledFeatures& gathered) {
  if (table.n != model.n()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "arity mismatch: checkpoint expects N=", model.n(), " but ",
        table_path.string(), " has N=", table.n));
  }
  ASSIGN_OR_RETURN(gathered, Gather(table, corpus, table_path));
  return kernels::PredictProbabilitiesParallel(model, gathered.features);
}

absl::StatusOr<Corpus> LabelSubset(const Corpus& corpus, bool member,
                                   std::string name) {
  std::vector<std::string> ids;
  for (const auto& s : corpus.samples()) {
    if (s.member == member) ids.push_back(s.id);
  }
  return corpus.Subset(std::move(name), ids);
}

absl::StatusOr<std::vector<UserScores>> ScoreCohort(
    const UserCohort& cohort,
    const std::unordered_map<std::string, double>& probability) {
  std::vector<UserScores> users;
  users.reserve(cohort.users.size());
  for (const auto& user : cohort.users) {
    UserScores u{user.user_id, {}, user.role};
    for (const auto& id : user.sample_ids) {
      auto it = probability.find(id);
      if (it == probability.end()) {
        return absl::FailedPreconditionError(
            absl::StrCat("cohort sample ", id, " has no prediction"));
      }
      u.probabilities.push_back(it->second);
    }
    users.push_back(std::move(u));
  }
  return users;
}

std::string_view ThresholdModeName(ThresholdMode mode) {
  switch (mode) {
    case ThresholdMode::kFixed:
      return "fixed";
    case ThresholdMode::kPerN:
      return "per_n";
    case ThresholdMode::kGrid:
      return "grid";
  }
  return "unknown";
}

std::string_view SettingName(SettingKind kind) {
  return kind == SettingKind::kPartial ? "partial" : "shadow";
}

}  // namespace

absl::StatusOr<OutputLock> OutputLock::Acquire(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    return absl::PermissionDeniedError(
        absl::StrCat("cannot create ", dir.string(), ": ", ec.message()));
  }
  fs::path path = dir / ".provaudit.lock";
  const int fd = ::open(path.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    return absl::AbortedError(absl::StrCat(
        "output directory ", dir.string(), " is locked by another command (",
        path.string(), ")"));
  }
  const std::string pid = std::to_string(::getpid()) + "\n";
  (void)!::write(fd, pid.data(), pid.size());
  ::close(fd);
  return OutputLock(std::move(path));
}

OutputLock::OutputLock(OutputLock&& other) noexcept
    : path_(std::exchange(other.path_, {})) {}

OutputLock& OutputLock::operator=(OutputLock&& other) noexcept {
  if (this != &other) {
    if (!path_.empty()) {
      std::error_code ec;
      fs::remove(path_, ec);
    }
    path_ = std::exchange(other.path_, {});
  }
  return *this;
}

OutputLock::~OutputLock() {
  if (path_.empty()) return;
  std::error_code ec;
  fs::remove(path_, ec);
}

absl::StatusOr<Source> OpenSource(const SourceConfig& config, std::string name) {
  std::optional<Corpus> corpus;
  std::shared_ptr<const GenerationBackend> backend;
  if (config.corpus_kind == CorpusKind::kSynth) {
    ASSIGN_OR_RETURN(SynthWorld world, MakeWorld(config.synth));
    corpus = std::move(world.corpus);
    backend = std::move(world.backend);
  } else {
    ASSIGN_OR_RETURN(corpus, LoadManifest(config.manifest));
  }
  if (config.pseudo_text) {
    ASSIGN_OR_RETURN(corpus, AttachPseudoText(*corpus, MockCaptioner()));
  }
  switch (config.backend_kind) {
    case BackendKind::kSynth:
      break;
    case BackendKind::kStub:
      backend = std::make_shared<StubBackend>();
      break;
    case BackendKind::kRemote: {
      const char* key = std::getenv(kApiKeyEnvVar);
      backend = std::make_shared<RemoteBackend>(RemoteBackend::Options{
          config.endpoint, key != nullptr ? key : "",
          std::chrono::seconds(config.timeout_seconds)});
      break;
    }
  }
  if (backend == nullptr) {
    return absl::InvalidArgumentError(
        absl::StrCat(name, ": no generation backend configured"));
  }
  return Source{std::move(name), *std::move(corpus), std::move(backend)};
}

absl::StatusOr<std::vector<Source>> OpenSources(const RunConfig& config) {
  std::vector<Source> sources;
  ASSIGN_OR_RETURN(Source target, OpenSource(config.target, "target"));
  sources.push_back(std::move(target));
  if (config.setting == SettingKind::kShadow) {
    ASSIGN_OR_RETURN(Source pub, OpenSource(*config.public_source, "public"));
    sources.push_back(std::move(pub));
  }
  return sources;
}

absl::StatusOr<std::shared_ptr<const Encoder>> MakeEncoder(
    const RunConfig& config) {
  std::shared_ptr<const Encoder> encoder;
  if (config.encoder_kind == EncoderKind::kSynth) {
    encoder = std::make_shared<LatentEncoder>(config.encoder_dim);
  } else {
    encoder = std::make_shared<MockEncoder>(config.encoder_dim, config.encoder_seed);
  }
  RETURN_IF_ERROR(CheckSharedSpace(*encoder));
  return encoder;
}

absl::StatusOr<Slice> TrainingSlice(const RunConfig& config) {
  if (config.setting == SettingKind::kShadow) {
    ASSIGN_OR_RETURN(Source pub, OpenSource(*config.public_source, "public"));
    if (!pub.corpus.fully_labeled()) {
      return absl::FailedPreconditionError(
          "the public corpus must be fully labeled for shadow training");
    }
    return Slice{"public", std::move(pub.corpus)};
  }
  ASSIGN_OR_RETURN(Source target, OpenSource(config.target, "target"));
  ASSIGN_OR_RETURN(auto split,
                   SplitPartial(target.corpus, config.proportion, config.split_seed));
  return Slice{"target", std::move(split.first)};
}

absl::StatusOr<Slice> EvaluationSlice(const RunConfig& config) {
  ASSIGN_OR_RETURN(Source target, OpenSource(config.target, "target"));
  if (config.setting == SettingKind::kShadow) {
    return Slice{"target", std::move(target.corpus)};
  }
  ASSIGN_OR_RETURN(auto split,
                   SplitPartial(target.corpus, config.proportion, config.split_seed));
  return Slice{"target", std::move(split.second)};
}

GenerationRequest RequestFor(const RunConfig& config, const SamplePair& sample) {
  GenerationRequest request = config.query;
  request.text = sample.text;
  return request;
}

fs::path FeaturePath(const RunConfig& config, std::string_view source) {
  return config.output_dir / "features" / absl::StrCat(std::string(source), ".jsonl");
}

fs::path CheckpointPath(const RunConfig& config) {
  return config.output_dir / "model" / "checkpoint.json";
}

fs::path ReportPath(const RunConfig& config, std::string_view name) {
  return config.output_dir / "reports" / std::string(name);
}

absl::StatusOr<json> CmdGenerate(const RunConfig& config, std::ostream* log) {
  ASSIGN_OR_RETURN(OutputLock lock, OutputLock::Acquire(config.output_dir));
  ASSIGN_OR_RETURN(std::vector<Source> sources, OpenSources(config));
  Progress progress(log);
  GenerationCache cache(config.CacheDir());
  cache.set_warning_handler(
      [&progress](std::string_view m) { progress.Line(absl::StrCat("warning: ", std::string(m))); });

  json report = ReportHeader(config, "generate");
  report["n"] = config.query.n;
  report["inference_steps"] = config.query.inference_steps;
  report["sources"] = json::array();
  std::vector<json> missing;
  int64_t total_calls = 0;

  for (const Source& source : sources) {
    CountingBackend counting(*source.backend);
    const int64_t count = source.corpus.size();
    const int64_t hits_before = cache.hits();
    std::vector<absl::Status> status(count);
    std::vector<std::string> fingerprints(count);
    std::atomic<int64_t> done{0};
    const int64_t step = std::max<int64_t>(1, count / 10);

#pragma omp parallel for num_threads(config.workers) schedule(dynamic)
    for (int64_t i = 0; i < count; ++i) {
      const GenerationRequest request = RequestFor(config, source.corpus[i]);
      fingerprints[i] = Fingerprint(request, counting.Id());
      status[i] = cache.CachedGenerate(counting, request, config.retry).status();
      const int64_t k = done.fetch_add(1) + 1;
      if (k % step == 0 || k == count) {
        progress.Line(absl::StrFormat("generate %s: %d/%d batches",
                                      source.name, k, count));
      }
    }

    int64_t failed = 0;
    for (int64_t i = 0; i < count; ++i) {
      if (status[i].ok()) continue;
      ++failed;
      missing.push_back({{"source", source.name},
                         {"sample_id", source.corpus[i].id},
                         {"fingerprint", fingerprints[i]},
                         {"error", std::string(status[i].message())}});
    }
    total_calls += counting.calls();
    report["sources"].push_back({{"source", source.name},
                                 {"backend_id", source.backend->Id()},
                                 {"samples", count},
                                 {"cache_hits", cache.hits() - hits_before},
                                 {"backend_calls", counting.calls()},
                                 {"images_generated",
                                  (count - failed - (cache.hits() - hits_before)) *
                                      config.query.n},
                                 {"failed", failed}});
  }
  report["backend_calls"] = total_calls;
  report["cache_dir"] = config.CacheDir().string();

  const fs::path missing_path = config.output_dir / "missing.jsonl";
  std::error_code ec;
  if (missing.empty()) {
    fs::remove(missing_path, ec);
  } else {
    std::string lines;
    for (const auto& m : missing) absl::StrAppend(&lines, m.dump(), "\n");
    RETURN_IF_ERROR(WriteText(missing_path, lines));
    report["missing_manifest"] = missing_path.string();
  }
  report["failed"] = missing.size();
  RETURN_IF_ERROR(WriteReport(config, "generate.json", report));
  if (!missing.empty()) {
    return absl::UnavailableError(absl::StrCat(
        missing.size(), " generation batches failed (first: ",
        missing.front()["error"].get<std::string>(), "); see ",
        missing_path.string(), " and rerun generate to resume"));
  }
  return report;
}

absl::StatusOr<json> CmdFeatures(const RunConfig& config, std::ostream* log) {
  ASSIGN_OR_RETURN(OutputLock lock, OutputLock::Acquire(config.output_dir));
  ASSIGN_OR_RETURN(std::vector<Source> sources, OpenSources(config));
  ASSIGN_OR_RETURN(std::shared_ptr<const Encoder> encoder, MakeEncoder(config));
  const std::string encoder_id = encoder->Id();
  Progress progress(log);
  GenerationCache cache(config.CacheDir());
  cache.set_warning_handler(
      [&progress](std::string_view m) { progress.Line(absl::StrCat("warning: ", std::string(m))); });

  json report = ReportHeader(config, "features");
  report["encoder_id"] = encoder_id;
  report["n"] = config.query.n;
  report["sorted"] = config.sort_features;
  report["sources"] = json::array();

  for (const Source& source : sources) {
    const fs::path table_path = FeaturePath(config, source.name);
    const fs::path emb_dir = config.output_dir / "embeddings";
    const fs::path text_path = emb_dir / (source.name + ".text.emb");
    const fs::path image_path = emb_dir / (source.name + ".image.emb");
    if (fs::exists(table_path)) {
      ASSIGN_OR_RETURN(FeatureTable existing, ReadFeatureTable(table_path));
      RETURN_IF_ERROR(CheckEncoderId(table_path, existing.encoder_id, encoder_id));
    }
    for (const fs::path& p : {text_path, image_path}) {
      if (!fs::exists(p)) continue;
      ASSIGN_OR_RETURN(EmbeddingStore existing, EmbeddingStore::Read(p));
      RETURN_IF_ERROR(CheckEncoderId(p, existing.encoder_id(), encoder_id));
    }

    const Corpus& corpus = source.corpus;
    const std::string backend_id = source.backend->Id();
    std::vector<std::string> fingerprints(corpus.size());
    std::vector<std::string> missing;
    for (size_t i = 0; i < corpus.size(); ++i) {
      fingerprints[i] = Fingerprint(RequestFor(config, corpus[i]), backend_id);
      if (!cache.Contains(fingerprints[i])) missing.push_back(corpus[i].id);
    }
    if (!missing.empty()) {
      return absl::FailedPreconditionError(absl::StrCat(
          "no cached generation batch for ", missing.size(), " ", source.name,
          " samples: ", ListIds(missing), "; run generate first"));
    }

    FeatureTable table{encoder_id, config.query.n, config.sort_features, {}};
    table.rows.reserve(corpus.size());
    EmbeddingStore text_store(encoder_id, encoder->TextDim(), true);
    EmbeddingStore image_store(encoder_id, encoder->ImageDim(), true);

    for (size_t start = 0; start < corpus.size(); start += kFeatureChunk) {
      const size_t m = std::min(kFeatureChunk, corpus.size() - start);
      std::vector<kernels::SampleEmbeddings> chunk(m);
      std::vector<absl::Status> status(m);
      std::vector<std::optional<double>> pixel(m);

#pragma omp parallel for schedule(dynamic)
      for (size_t j = 0; j < m; ++j) {
        status[j] = [&]() -> absl::Status {
          const SamplePair& sample = corpus[start + j];
          std::optional<GenerationBatch> batch = cache.Lookup(fingerprints[start + j]);
          if (!batch.has_value()) {
            return absl::DataLossError(absl::StrCat(
                "cached batch for ", sample.id, " became unreadable; rerun generate"));
          }
          ASSIGN_OR_RETURN(RgbImage image, corpus.LoadImage(sample));
          kernels::SampleEmbeddings& e = chunk[j];
          e.sample_id = sample.id;
          ASSIGN_OR_RETURN(e.text, encoder->EmbedText(sample.text));
          ASSIGN_OR_RETURN(e.image, encoder->EmbedImage(image));
          e.generated.reserve(batch->images.size());
          for (const RgbImage& g : batch->images) {
            ASSIGN_OR_RETURN(EmbeddingVector v, encoder->EmbedImage(g));
            e.generated.push_back(std::move(v));
          }
          if (config.pixel_error) {
            ASSIGN_OR_RETURN(pixel[j],
                             PixelErrorScore(image, batch->images, config.pixel_side));
          }
          return absl::OkStatus();
        }();
      }
      for (size_t j = 0; j < m; ++j) {
        if (!status[j].ok()) {
          return absl::Status(status[j].code(),
                              absl::StrCat(corpus[start + j].id, ": ",
                                           std::string(status[j].message())));
        }
      }
      ASSIGN_OR_RETURN(std::vector<MembershipFeature> features,
                       kernels::BuildFeaturesParallel(chunk, config.sort_features));
      for (size_t j = 0; j < m; ++j) {
        RETURN_IF_ERROR(text_store.Add(chunk[j].sample_id, chunk[j].text.values));
        RETURN_IF_ERROR(image_store.Add(chunk[j].sample_id, chunk[j].image.values));
        table.rows.push_back(
            FeatureRecord{std::move(features[j]), fingerprints[start + j], pixel[j]});
      }
      progress.Line(absl::StrFormat("features %s: %d/%d samples", source.name,
                                    start + m, corpus.size()));
    }
    RETURN_IF_ERROR(WriteFeatureTable(table_path, table));
    std::error_code ec;
    fs::create_directories(emb_dir, ec);
    RETURN_IF_ERROR(text_store.Write(text_path));
    RETURN_IF_ERROR(image_store.Write(image_path));
    report["sources"].push_back({{"source", source.name},
                                 {"rows", table.rows.size()},
                                 {"feature_file", table_path.string()},
                                 {"pixel_error", config.pixel_error}});
  }
  RETURN_IF_ERROR(WriteReport(config, "features.json", report));
  return report;
}

absl::StatusOr<json> CmdTrain(const RunConfig& config, std::ostream* log) {
  ASSIGN_OR_RETURN(OutputLock lock, OutputLock::Acquire(config.output_dir));
  Progress progress(log);
  ASSIGN_OR_RETURN(Slice slice, TrainingSlice(config));
  const fs::path table_path = FeaturePath(config, slice.source);
  ASSIGN_OR_RETURN(FeatureTable table, ReadFeatureTable(table_path));
  ASSIGN_OR_RETURN(LabeledFeatures data, Gather(table, slice.corpus, table_path));
  if (table.n != config.query.n) {
    return absl::FailedPreconditionError(absl::StrCat(
        table_path.string(), " was built with N=", table.n,
        " but the config asks for N=", config.query.n, "; rerun features"));
  }

  ASSIGN_OR_RETURN(AuditModel initial, InitModel(table.n, config.variant,
                                                 config.train.seed,
                                                 config.train.init_std));
  progress.Line(absl::StrFormat("train: %d samples from %s, %d epochs",
                                data.features.size(), slice.source,
                                config.train.epochs));
  ASSIGN_OR_RETURN(TrainResult result, Train(initial, data.features, data.labels,
                                             config.train, config.selection));
  RETURN_IF_ERROR(SaveCheckpoint(CheckpointPath(config),
                                 Checkpoint{result.model, table.encoder_id,
                                            result.selected_epoch}));

  json history = HistoryToJson(result.history);
  RETURN_IF_ERROR(WriteReport(config, "history.json", history));
  PlotSeries loss, balance;
  double max_loss = 1.0;
  for (const auto& e : result.history) {
    loss.points.emplace_back(e.epoch, e.loss);
    balance.points.emplace_back(e.epoch, e.balance);
    max_loss = std::max(max_loss, e.loss);
  }
  balance.color = {214, 39, 40};
  const PlotSeries series[] = {loss, balance};
  RETURN_IF_ERROR(WritePlot(ReportPath(config, "history.png"), series,
                            PlotAxes{1.0, std::max(2.0, double(config.train.epochs)),
                                     0.0, max_loss}));

  int64_t members = std::count(data.labels.begin(), data.labels.end(), true);
  json report = ReportHeader(config, "train");
  report["setting"] = SettingName(config.setting);
  report["train_source"] = slice.source;
  report["train_samples"] = data.features.size();
  report["members"] = members;
  report["nonmembers"] = int64_t(data.features.size()) - members;
  report["model_variant"] = ModelVariantName(config.variant);
  report["selection"] = SelectionName(config.selection);
  report["selected_epoch"] = result.selected_epoch;
  report["train_accuracy"] = result.train_accuracy;
  report["final_loss"] = result.history.empty() ? 0.0 : result.history.back().loss;
  report["encoder_id"] = table.encoder_id;
  report["checkpoint"] = CheckpointPath(config).string();
  RETURN_IF_ERROR(WriteReport(config, "train.json", report));
  return report;
}

absl::StatusOr<json> CmdEval(const RunConfig& config, std::ostream* log) {
  ASSIGN_OR_RETURN(OutputLock lock, OutputLock::Acquire(config.output_dir));
  Progress progress(log);
  ASSIGN_OR_RETURN(Checkpoint checkpoint, LoadCheckpoint(CheckpointPath(config)));
  ASSIGN_OR_RETURN(Slice slice, EvaluationSlice(config));
  const fs::path table_path = FeaturePath(config, slice.source);
  ASSIGN_OR_RETURN(FeatureTable table, ReadFeatureTable(table_path));
  RETURN_IF_ERROR(CheckEncoderId(table_path, table.encoder_id, checkpoint.encoder_id));

  LabeledFeatures data;
  ASSIGN_OR_RETURN(std::vector<double> probs,
                   PredictAll(checkpoint.model, table, table_path, slice.corpus, data));
  ASSIGN_OR_RETURN(EvalReport metrics,
                   Evaluate(data.labels, probs, config.eval_threshold, config.fpr_target));
  ASSIGN_OR_RETURN(std::vector<RocPoint> roc, RocCurve(data.labels, probs));
  progress.Line(absl::StrFormat("eval: %d samples, accuracy %.4f, AUC %.4f",
                                probs.size(), metrics.basic.accuracy, metrics.auc));

  std::string csv = "threshold,fpr,tpr\n";
  PlotSeries curve;
  for (const auto& p : roc) {
    absl::StrAppend(&csv, std::isinf(p.threshold) ? "inf" : absl::StrFormat("%.17g", p.threshold),
                    ",", absl::StrFormat("%.17g,%.17g", p.fpr, p.tpr), "\n");
    curve.points.emplace_back(p.fpr, p.tpr);
  }
  RETURN_IF_ERROR(WriteText(ReportPath(config, "roc.csv"), csv));
  PlotSeries chance{{{0.0, 0.0}, {1.0, 1.0}}, {160, 160, 160}};
  const PlotSeries series[] = {chance, curve};
  RETURN_IF_ERROR(WritePlot(ReportPath(config, "roc.png"), series, PlotAxes{}));

  std::string predictions;
  for (size_t i = 0; i < probs.size(); ++i) {
    absl::StrAppend(&predictions,
                    json{{"id", data.features[i].sample_id},
                         {"probability", probs[i]},
                         {"member", bool(data.labels[i])}}
                        .dump(),
                    "\n");
  }
  RETURN_IF_ERROR(WriteText(ReportPath(config, "predictions.jsonl"), predictions));

  json report = ReportHeader(config, "eval");
  report["setting"] = SettingName(config.setting);
  report["eval_source"] = slice.source;
  report["eval_samples"] = probs.size();
  report["selected_epoch"] = checkpoint.selected_epoch;
  report["encoder_id"] = checkpoint.encoder_id;
  report["metrics"] = ToJson(metrics);

  std::vector<double> pixel_scores;
  for (const auto& p : data.pixel_errors) {
    if (!p.has_value()) break;
    pixel_scores.push_back(-*p);
  }
  if (!pixel_scores.empty() && pixel_scores.size() == probs.size()) {
    ASSIGN_OR_RETURN(double auc, RocAuc(data.labels, pixel_scores));
    ASSIGN_OR_RETURN(double tpr, TprAtFpr(data.labels, pixel_scores, config.fpr_target));
    report["pixel_error_baseline"] = {{"auc", auc}, {"tpr_at_fpr", tpr}};
  }
  RETURN_IF_ERROR(WriteReport(config, "eval.json", report));
  return report;
}

absl::StatusOr<json> CmdUserAudit(const RunConfig& config, std::ostream* log) {
  ASSIGN_OR_RETURN(OutputLock lock, OutputLock::Acquire(config.output_dir));
  Progress progress(log);
  ASSIGN_OR_RETURN(Checkpoint checkpoint, LoadCheckpoint(CheckpointPath(config)));
  ASSIGN_OR_RETURN(Slice slice, EvaluationSlice(config));
  const fs::path table_path = FeaturePath(config, slice.source);
  ASSIGN_OR_RETURN(FeatureTable table, ReadFeatureTable(table_path));
  RETURN_IF_ERROR(CheckEncoderId(table_path, table.encoder_id, checkpoint.encoder_id));
  LabeledFeatures data;
  ASSIGN_OR_RETURN(std::vector<double> probs,
                   PredictAll(checkpoint.model, table, table_path, slice.corpus, data));
  std::unordered_map<std::string, double> probability;
  for (size_t i = 0; i < probs.size(); ++i) {
    probability[data.features[i].sample_id] = probs[i];
  }

  // Disjoint calibration: the threshold search sees one half of the
  // evaluation pools and the audited cohort always comes from the other.
  Corpus audit_pool = slice.corpus;
  std::optional<Corpus> calibration_pool;
  if (config.calibration == CalibrationMode::kDisjoint) {
    ASSIGN_OR_RETURN(auto halves,
                     SplitPartial(slice.corpus, 0.5, config.cohort.seed + 1));
    calibration_pool = std::move(halves.first);
    audit_pool = std::move(halves.second);
  }

  auto build = [&](const Corpus& pool)
      -> absl::StatusOr<std::pair<UserCohort, std::vector<UserScores>>> {
    ASSIGN_OR_RETURN(Corpus members, LabelSubset(pool, true, pool.name() + ".members"));
    ASSIGN_OR_RETURN(Corpus nonmembers,
                     LabelSubset(pool, false, pool.name() + ".nonmembers"));
    CohortSpec spec = config.cohort;
    ASSIGN_OR_RETURN(UserCohort cohort, BuildCohort(members, nonmembers, spec));
    ASSIGN_OR_RETURN(std::vector<UserScores> scores, ScoreCohort(cohort, probability));
    return std::make_pair(std::move(cohort), std::move(scores));
  };
  ASSIGN_OR_RETURN(auto audited, build(audit_pool));
  const UserCohort& cohort = audited.first;
  const std::vector<UserScores>& users = audited.second;

  json report = ReportHeader(config, "user-audit");
  report["threshold_mode"] = ThresholdModeName(config.threshold_mode);
  report["calibration"] = config.calibration == CalibrationMode::kDisjoint
                              ? "disjoint"
                              : "evaluation";
  report["selected_epoch"] = checkpoint.selected_epoch;

  double tau = config.fixed_threshold;
  if (config.threshold_mode == ThresholdMode::kPerN) {
    tau = ThresholdForN(config.per_n_thresholds, config.cohort.samples_per_user);
  } else if (config.threshold_mode == ThresholdMode::kGrid) {
    std::vector<UserScores> calibration_users;
    if (calibration_pool.has_value()) {
      ASSIGN_OR_RETURN(auto calibration, build(*calibration_pool));
      calibration_users = std::move(calibration.second);
    } else {
      calibration_users = users;
    }
    ASSIGN_OR_RETURN(GridSearchResult grid,
                     ThresholdGridSearch(calibration_users, config.grid_step));
    tau = grid.best_threshold;
    report["grid"] = ToJson(grid);

    std::string csv = "threshold,accuracy,precision,recall,f1\n";
    PlotSeries acc, pre{{}, {44, 160, 44}}, rec{{}, {214, 39, 40}},
        f1{{}, {148, 103, 189}};
    for (const auto& row : grid.sweep) {
      absl::StrAppend(&csv, absl::StrFormat("%.2f,%.17g,%.17g,%.17g,%.17g\n",
                                            row.threshold, row.metrics.accuracy,
                                            row.metrics.precision,
                                            row.metrics.recall, row.metrics.f1));
      acc.points.emplace_back(row.threshold, row.metrics.accuracy);
      pre.points.emplace_back(row.threshold, row.metrics.precision);
      rec.points.emplace_back(row.threshold, row.metrics.recall);
      f1.points.emplace_back(row.threshold, row.metrics.f1);
    }
    RETURN_IF_ERROR(WriteText(ReportPath(config, "sweep.csv"), csv));
    const PlotSeries series[] = {acc, pre, rec, f1};
    RETURN_IF_ERROR(WritePlot(ReportPath(config, "sweep.png"), series, PlotAxes{}));
  }

  ASSIGN_OR_RETURN(UserAuditReport audit, AuditUsers(users, tau));
  progress.Line(absl::StrFormat("user-audit: %d users, tau %.2f, accuracy %.4f",
                                users.size(), tau, audit.metrics.accuracy));

  // Sample-level accuracy at 0.5 over the same audited users.
  std::vector<bool> sample_labels, sample_verdicts;
  for (const auto& user : cohort.users) {
    for (const auto& id : user.sample_ids) {
      sample_labels.push_back(*audit_pool.Find(id)->member);
      sample_verdicts.push_back(ThresholdVerdict(probability.at(id), 0.5));
    }
  }
  ASSIGN_OR_RETURN(BasicMetrics sample_metrics,
                   ComputeBasicMetrics(sample_labels, sample_verdicts));

  report["threshold"] = tau;
  report["samples_per_user"] = config.cohort.samples_per_user;
  report["users"] = users.size();
  report["report"] = ToJson(audit);
  report["sample_accuracy_at_0_5"] = sample_metrics.accuracy;
  RETURN_IF_ERROR(WriteReport(config, "user_audit.json", report));
  return report;
}

json ErrorReport(std::string_view command, const absl::Status& status) {
  return {{"command", command},
          {"error",
           {{"code", absl::StatusCodeToString(status.code())},
            {"message", std::string(status.message())}}}};
}

}  // namespace provaudit
