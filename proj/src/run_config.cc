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

#include "provaudit/run_config.h"

#include <fstream>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_split.h"
#include "provaudit/digest.h"
#include "provaudit/status_macros.h"
#include "provaudit/userlevel.h"

namespace provaudit {
namespace {

using nlohmann::json;

json SynthJson(uint64_t seed) {
  SynthConfig s;
  return {{"n_members", s.n_members},
          {"n_nonmembers", s.n_nonmembers},
          {"dim", s.dim},
          {"memorization", s.memorization},
          {"noise_scale", s.noise_scale},
          {"seed", seed}};
}

json SourceJson(uint64_t synth_seed) {
  return {{"corpus",
           {{"kind", "synth"},
            {"manifest", ""},
            {"pseudo_text", false},
            {"synth", SynthJson(synth_seed)}}},
          {"backend", {{"kind", "synth"}, {"endpoint", ""}, {"timeout_s", 300}}}};
}

template <typename Enum>
absl::StatusOr<Enum> ParseEnum(std::string_view field, const std::string& value,
                               std::initializer_list<std::pair<const char*, Enum>> options) {
  for (const auto& [name, e] : options) {
    if (value == name) return e;
  }
  return absl::InvalidArgumentError(
      absl::StrCat("unknown value \"", value, "\" for ", std::string(field)));
}

absl::StatusOr<SourceConfig> ParseSource(const json& j, std::string_view where) {
  SourceConfig s;
  const json& corpus = j.at("corpus");
  ASSIGN_OR_RETURN(s.corpus_kind,
                   ParseEnum<CorpusKind>(absl::StrCat(std::string(where), ".corpus.kind"),
                                         corpus.at("kind").get<std::string>(),
                                         {{"manifest", CorpusKind::kManifest},
                                          {"synth", CorpusKind::kSynth}}));
  s.manifest = corpus.at("manifest").get<std::string>();
  s.pseudo_text = corpus.at("pseudo_text").get<bool>();
  const json& synth = corpus.at("synth");
  s.synth.n_members = synth.at("n_members").get<int>();
  s.synth.n_nonmembers = synth.at("n_nonmembers").get<int>();
  s.synth.dim = synth.at("dim").get<int>();
  s.synth.memorization = synth.at("memorization").get<double>();
  s.synth.noise_scale = synth.at("noise_scale").get<double>();
  s.synth.seed = synth.at("seed").get<uint64_t>();
  const json& backend = j.at("backend");
  ASSIGN_OR_RETURN(s.backend_kind,
                   ParseEnum<BackendKind>(absl::StrCat(std::string(where), ".backend.kind"),
                                          backend.at("kind").get<std::string>(),
                                          {{"synth", BackendKind::kSynth},
                                           {"remote", BackendKind::kRemote},
                                           {"stub", BackendKind::kStub}}));
  s.endpoint = backend.at("endpoint").get<std::string>();
  s.timeout_seconds = backend.at("timeout_s").get<int>();

  if (s.corpus_kind == CorpusKind::kManifest && s.manifest.empty()) {
    return absl::InvalidArgumentError(
        absl::StrCat(std::string(where), ".corpus.manifest is required for manifest corpora"));
  }
  if (s.corpus_kind == CorpusKind::kManifest &&
      !std::filesystem::exists(s.manifest)) {
    return absl::NotFoundError(
        absl::StrCat(std::string(where), ".corpus.manifest does not exist: ", s.manifest));
  }
  if (s.corpus_kind == CorpusKind::kSynth) {
    RETURN_IF_ERROR(ValidateSynthConfig(s.synth));
  }
  if (s.backend_kind == BackendKind::kSynth &&
      s.corpus_kind != CorpusKind::kSynth) {
    return absl::InvalidArgumentError(
        absl::StrCat(std::string(where), ": the synth backend serves synth corpora only"));
  }
  if (s.backend_kind == BackendKind::kRemote && s.endpoint.empty()) {
    return absl::InvalidArgumentError(
        absl::StrCat(std::string(where), ".backend.endpoint is required for remote backends"));
  }
  return s;
}

absl::StatusOr<RunConfig> Parse(const json& j) {
  RunConfig c;
  c.output_dir = j.at("output_dir").get<std::string>();
  c.cache_dir = j.at("cache_dir").get<std::string>();
  ASSIGN_OR_RETURN(c.target, ParseSource(j.at("target"), "target"));

  const json& setting = j.at("setting");
  ASSIGN_OR_RETURN(c.setting, ParseEnum<SettingKind>(
                                  "setting.kind", setting.at("kind").get<std::string>(),
                                  {{"partial", SettingKind::kPartial},
                                   {"shadow", SettingKind::kShadow}}));
  c.proportion = setting.at("proportion").get<double>();
  c.split_seed = setting.at("seed").get<uint64_t>();
  if (c.setting == SettingKind::kShadow) {
    ASSIGN_OR_RETURN(SourceConfig pub, ParseSource(setting.at("public"),
                                                   "setting.public"));
    c.public_source = std::move(pub);
  }
  if (!(c.proportion > 0.0 && c.proportion < 1.0)) {
    return absl::InvalidArgumentError("setting.proportion must lie in (0, 1)");
  }

  const json& encoder = j.at("encoder");
  ASSIGN_OR_RETURN(c.encoder_kind, ParseEnum<EncoderKind>(
                                       "encoder.kind", encoder.at("kind").get<std::string>(),
                                       {{"synth", EncoderKind::kSynth},
                                        {"mock", EncoderKind::kMock}}));
  c.encoder_dim = encoder.at("dim").get<int>();
  c.encoder_seed = encoder.at("seed").get<uint64_t>();
  if (c.encoder_dim < 1) return absl::InvalidArgumentError("encoder.dim must be >= 1");

  const json& query = j.at("query");
  c.query.n = query.at("n").get<int>();
  c.query.inference_steps = query.at("inference_steps").get<int>();
  c.query.base_seed = query.at("base_seed").get<int64_t>();
  c.query.extra_params =
      query.at("extra_params").get<std::map<std::string, std::string>>();
  c.workers = query.at("workers").get<int>();
  c.retry.max_attempts = query.at("max_attempts").get<int>();
  c.retry.initial_backoff =
      std::chrono::milliseconds(query.at("initial_backoff_ms").get<int64_t>());
  RETURN_IF_ERROR(ValidateRequest(c.query));
  if (c.workers < 1) return absl::InvalidArgumentError("query.workers must be >= 1");

  const json& features = j.at("features");
  c.sort_features = features.at("sort").get<bool>();
  c.pixel_error = features.at("pixel_error").get<bool>();
  c.pixel_side = features.at("pixel_side").get<int>();

  ASSIGN_OR_RETURN(c.variant,
                   ParseModelVariant(j.at("model").at("variant").get<std::string>()));

  const json& train = j.at("train");
  c.train.batch_size = train.at("batch_size").get<int>();
  c.train.learning_rate = train.at("learning_rate").get<double>();
  c.train.weight_decay = train.at("weight_decay").get<double>();
  c.train.epochs = train.at("epochs").get<int>();
  c.train.init_std = train.at("init_std").get<double>();
  c.train.validation_fraction = train.at("validation_fraction").get<double>();
  c.train.seed = train.at("seed").get<uint64_t>();
  ASSIGN_OR_RETURN(c.selection,
                   ParseSelection(train.at("selection").get<std::string>()));
  RETURN_IF_ERROR(ValidateTrainConfig(c.train));

  const json& eval = j.at("eval");
  c.eval_threshold = eval.at("threshold").get<double>();
  c.fpr_target = eval.at("fpr_target").get<double>();

  const json& ua = j.at("user_audit");
  ASSIGN_OR_RETURN(c.threshold_mode,
                   ParseEnum<ThresholdMode>("user_audit.threshold_mode",
                                            ua.at("threshold_mode").get<std::string>(),
                                            {{"fixed", ThresholdMode::kFixed},
                                             {"per_n", ThresholdMode::kPerN},
                                             {"grid", ThresholdMode::kGrid}}));
  c.fixed_threshold = ua.at("fixed_threshold").get<double>();
  for (const auto& [key, value] : ua.at("per_n_thresholds").items()) {
    c.per_n_thresholds[std::stoi(key)] = value.get<double>();
  }
  ASSIGN_OR_RETURN(c.calibration,
                   ParseEnum<CalibrationMode>("user_audit.calibration",
                                              ua.at("calibration").get<std::string>(),
                                              {{"disjoint", CalibrationMode::kDisjoint},
                                               {"evaluation", CalibrationMode::kEvaluation}}));
  c.grid_step = ua.at("grid_step").get<double>();
  const json& cohort = ua.at("cohort");
  c.cohort.n_victims = cohort.at("n_victims").get<int>();
  c.cohort.n_fortunate = cohort.at("n_fortunate").get<int>();
  c.cohort.samples_per_user = cohort.at("samples_per_user").get<int>();
  c.cohort.proportion = cohort.at("proportion").get<double>();
  c.cohort.seed = cohort.at("seed").get<uint64_t>();

  if (c.encoder_kind == EncoderKind::kSynth) {
    for (const SourceConfig* s : {&c.target, c.public_source ? &*c.public_source : nullptr}) {
      if (s && s->corpus_kind == CorpusKind::kSynth && s->synth.dim != c.encoder_dim) {
        return absl::InvalidArgumentError(
            "synthetic world dimension differs from encoder.dim");
      }
    }
  }
  return c;
}

}  // namespace

std::filesystem::path RunConfig::CacheDir() const {
  return cache_dir.empty() ? output_dir / "cache" : cache_dir;
}

json DefaultConfigJson() {
  const TrainConfig t;
  json per_n = json::object();
  for (const auto& [n, tau] : DefaultPerNThresholds()) {
    per_n[std::to_string(n)] = tau;
  }
  const CohortSpec cohort;
  return {
      {"output_dir", "provaudit-run"},
      {"cache_dir", ""},
      {"target", SourceJson(0)},
      {"setting",
       {{"kind", "partial"}, {"proportion", 0.5}, {"seed", 0},
        {"public", SourceJson(1)}}},
      {"encoder", {{"kind", "synth"}, {"dim", 64}, {"seed", 0}}},
      {"query",
       {{"n", kDefaultQueryNumber},
        {"inference_steps", kDefaultInferenceSteps},
        {"base_seed", 0},
        {"extra_params", json::object()},
        {"workers", 4},
        {"max_attempts", 3},
        {"initial_backoff_ms", 1000}}},
      {"features", {{"sort", true}, {"pixel_error", false}, {"pixel_side", kPixelErrorSide}}},
      {"model", {{"variant", "two_branch"}}},
      {"train",
       {{"batch_size", t.batch_size},
        {"learning_rate", t.learning_rate},
        {"weight_decay", t.weight_decay},
        {"epochs", t.epochs},
        {"init_std", t.init_std},
        {"validation_fraction", t.validation_fraction},
        {"seed", 0},
        {"selection", "last_epoch"}}},
      {"eval", {{"threshold", 0.5}, {"fpr_target", 0.01}}},
      {"user_audit",
       {{"threshold_mode", "per_n"},
        {"fixed_threshold", 0.5},
        {"per_n_thresholds", per_n},
        {"calibration", "disjoint"},
        {"grid_step", 0.01},
        {"cohort",
         {{"n_victims", cohort.n_victims},
          {"n_fortunate", cohort.n_fortunate},
          {"samples_per_user", cohort.samples_per_user},
          {"proportion", cohort.proportion},
          {"seed", 0}}}}},
  };
}

json DefaultsProvenance() {
  auto entry = [](json value, std::string_view source) {
    return json{{"default", std::move(value)}, {"source", source}};
  };
  json per_n = json::object();
  for (const auto& [n, tau] : DefaultPerNThresholds()) {
    per_n[std::to_string(n)] = tau;
  }
  return {
      {"query.n", entry(kDefaultQueryNumber,
                        "ablation: query number (16/32/64/128), peak at 64 and "
                        "the default query number")},
      {"query.inference_steps",
       entry(kDefaultInferenceSteps,
             "ablation: inference steps (20/50/100), gains flatten after 50")},
      {"train.batch_size", entry(100, "hyperparameters: batch size 100")},
      {"train.learning_rate",
       entry(0.001, "hyperparameters: Adam optimizer, learning rate 0.001")},
      {"train.weight_decay", entry(0.0005, "hyperparameters: weight decay 0.0005")},
      {"train.epochs", entry(100, "hyperparameters: 100 training epochs")},
      {"user_audit.per_n_thresholds",
       entry(per_n,
             "hyperparameters: user-level thresholds 0.52 (n=1,2), 0.53 (n=4), "
             "0.56 (n=8), 0.61 (n=10)")},
  };
}

absl::Status ApplyOverrides(json& config, const std::vector<std::string>& overrides) {
  for (const auto& item : overrides) {
    const size_t eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      return absl::InvalidArgumentError(
          absl::StrCat("override \"", item, "\" is not key=value"));
    }
    const std::string key = item.substr(0, eq);
    const std::string raw = item.substr(eq + 1);
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;
    json* node = &config;
    const std::vector<std::string> parts = absl::StrSplit(key, '.');
    for (const std::string& part : parts) {
      if (!node->is_object() && !node->is_null()) {
        return absl::InvalidArgumentError(
            absl::StrCat("override path ", key, " crosses a non-object"));
      }
      node = &(*node)[part];
    }
    *node = std::move(value);
  }
  return absl::OkStatus();
}

absl::StatusOr<RunConfig> ResolveRunConfig(const json& user) {
  json resolved = DefaultConfigJson();
  resolved.merge_patch(user);
  absl::StatusOr<RunConfig> config;
  try {
    config = Parse(resolved);
  } catch (const json::exception& e) {
    return absl::InvalidArgumentError(absl::StrCat("bad config: ", e.what()));
  }
  if (!config.ok()) return config.status();
  config->digest = Sha256Hex(resolved.dump());
  config->resolved = std::move(resolved);
  return config;
}

absl::StatusOr<RunConfig> LoadRunConfig(const std::filesystem::path& path,
                                        const std::vector<std::string>& overrides) {
  json user = json::object();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) {
      return absl::NotFoundError(absl::StrCat("config not found: ", path.string()));
    }
    user = json::parse(in, nullptr, false);
    if (user.is_discarded() || !user.is_object()) {
      return absl::InvalidArgumentError(
          absl::StrCat(path.string(), " is not a JSON object"));
    }
  }
  RETURN_IF_ERROR(ApplyOverrides(user, overrides));
  return ResolveRunConfig(user);
}

RunConfig DefaultRunConfig() { return *ResolveRunConfig(json::object()); }

}  // namespace provaudit
