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

#include "provaudit/audit_model.h"

#include <cmath>
#include <fstream>
#include <random>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "json.hpp"
#include "provaudit/status_macros.h"

namespace provaudit {
namespace {

using nlohmann::json;

constexpr char kCheckpointFormat[] = "provaudit-checkpoint/1";

void DenseForward(const DenseLayer& layer, std::span<const double> params,
                  std::span<const double> in, std::vector<double>& out) {
  out.assign(layer.out, 0.0);
  const double* w = params.data() + layer.weight_offset;
  const double* b = params.data() + layer.bias_offset;
  for (int o = 0; o < layer.out; ++o) {
    const double* row = w + size_t(o) * layer.in;
    double z = b[o];
    for (int i = 0; i < layer.in; ++i) z += row[i] * in[i];
    out[o] = layer.tanh ? std::tanh(z) : z;
  }
}

// `dout` is the gradient w.r.t. the post-activation output. Accumulates the
// parameter gradient and, when `din` is non-null, writes the input gradient.
void DenseBackward(const DenseLayer& layer, std::span<const double> params,
                   std::span<const double> in, std::span<const double> out,
                   std::span<const double> dout, double* grad,
                   std::vector<double>* din) {
  const double* w = params.data() + layer.weight_offset;
  double* gw = grad + layer.weight_offset;
  double* gb = grad + layer.bias_offset;
  if (din) din->assign(layer.in, 0.0);
  for (int o = 0; o < layer.out; ++o) {
    const double dz = layer.tanh ? dout[o] * (1.0 - out[o] * out[o]) : dout[o];
    gb[o] += dz;
    const double* row = w + size_t(o) * layer.in;
    double* grow = gw + size_t(o) * layer.in;
    for (int i = 0; i < layer.in; ++i) grow[i] += dz * in[i];
    if (din) {
      for (int i = 0; i < layer.in; ++i) (*din)[i] += dz * row[i];
    }
  }
}

}  // namespace

std::string_view ModelVariantName(ModelVariant variant) {
  return variant == ModelVariant::kTwoBranch ? "two_branch" : "one_branch";
}

absl::StatusOr<ModelVariant> ParseModelVariant(std::string_view name) {
  if (name == "two_branch") return ModelVariant::kTwoBranch;
  if (name == "one_branch") return ModelVariant::kOneBranch;
  return absl::InvalidArgumentError(absl::StrCat("unknown model variant ", std::string(name)));
}

absl::StatusOr<AuditModel> AuditModel::Create(int n, ModelVariant variant,
                                              uint64_t seed) {
  if (n < 1) return absl::InvalidArgumentError("model input N must be >= 1");
  AuditModel model;
  model.n_ = n;
  model.variant_ = variant;
  model.seed_ = seed;
  size_t offset = 0;
  auto add = [&](int in, int out, bool tanh) {
    DenseLayer layer{in, out, offset, offset + size_t(in) * out, tanh};
    offset = layer.bias_offset + out;
    model.layers_.push_back(layer);
  };
  auto add_stream = [&](int in) {
    add(in, kStreamWidths[0], true);
    add(kStreamWidths[0], kStreamWidths[1], true);
  };
  if (variant == ModelVariant::kTwoBranch) {
    add_stream(n);  // align
    add_stream(n);  // similarity
    add(2 * kStreamWidths[1], kFusionWidths[0], true);
  } else {
    add_stream(2 * n);
    add(kStreamWidths[1], kFusionWidths[0], true);
  }
  add(kFusionWidths[0], kFusionWidths[1], false);
  model.params_.assign(offset, 0.0);
  return model;
}

double AuditModel::LogitCached(std::span<const double> d,
                               std::span<const double> s,
                               ForwardCache& cache) const {
  const size_t L = layers_.size();
  cache.inputs.resize(L);
  cache.outputs.resize(L);
  auto run = [&](size_t i) {
    DenseForward(layers_[i], params_, cache.inputs[i], cache.outputs[i]);
  };
  if (variant_ == ModelVariant::kTwoBranch) {
    cache.inputs[0].assign(d.begin(), d.end());
    run(0);
    cache.inputs[1] = cache.outputs[0];
    run(1);
    cache.inputs[2].assign(s.begin(), s.end());
    run(2);
    cache.inputs[3] = cache.outputs[2];
    run(3);
    auto& fused = cache.inputs[4];
    fused = cache.outputs[1];
    fused.insert(fused.end(), cache.outputs[3].begin(), cache.outputs[3].end());
    run(4);
    cache.inputs[5] = cache.outputs[4];
    run(5);
  } else {
    auto& joined = cache.inputs[0];
    joined.assign(d.begin(), d.end());
    joined.insert(joined.end(), s.begin(), s.end());
    run(0);
    for (size_t i = 1; i < L; ++i) {
      cache.inputs[i] = cache.outputs[i - 1];
      run(i);
    }
  }
  cache.logit = cache.outputs[L - 1][0];
  return cache.logit;
}

double AuditModel::Logit(std::span<const double> d,
                         std::span<const double> s) const {
  ForwardCache cache;
  return LogitCached(d, s, cache);
}

void AuditModel::Backward(const ForwardCache& cache, double dlogit,
                          std::span<double> grad) const {
  double* g = grad.data();
  auto back = [&](size_t i, std::span<const double> dout,
                  std::vector<double>* din) {
    DenseBackward(layers_[i], params_, cache.inputs[i], cache.outputs[i], dout,
                  g, din);
  };
  const double top[1] = {dlogit};
  std::vector<double> d_a, d_b;
  if (variant_ == ModelVariant::kTwoBranch) {
    back(5, top, &d_a);
    back(4, d_a, &d_b);  // d_b: gradient w.r.t. concat(align, similarity)
    const std::span<const double> fused(d_b);
    const std::span<const double> d_align = fused.subspan(0, kStreamWidths[1]);
    const std::span<const double> d_sim =
        fused.subspan(kStreamWidths[1], kStreamWidths[1]);
    back(1, d_align, &d_a);
    back(0, d_a, nullptr);
    back(3, d_sim, &d_a);
    back(2, d_a, nullptr);
  } else {
    back(3, top, &d_a);
    back(2, d_a, &d_b);
    back(1, d_b, &d_a);
    back(0, d_a, nullptr);
  }
}

absl::StatusOr<AuditModel> InitModel(int n, ModelVariant variant,
                                     uint64_t seed, double init_std) {
  ASSIGN_OR_RETURN(AuditModel model, AuditModel::Create(n, variant, seed));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, init_std);
  auto params = model.params();
  for (const auto& layer : model.layers()) {
    for (size_t k = 0; k < size_t(layer.in) * layer.out; ++k) {
      params[layer.weight_offset + k] = normal(rng);
    }
  }
  return model;
}

double Sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {
absl::Status CheckArity(const AuditModel& model,
                        const MembershipFeature& feature) {
  if (feature.n() != model.n() ||
      static_cast<int>(feature.similarities.size()) != model.n()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "feature ", feature.sample_id, " has N=", feature.n(),
        " but the model expects N=", model.n()));
  }
  return absl::OkStatus();
}
}  // namespace

absl::StatusOr<double> Forward(const AuditModel& model,
                               const MembershipFeature& feature) {
  RETURN_IF_ERROR(CheckArity(model, feature));
  return Sigmoid(model.Logit(feature.align_diffs, feature.similarities));
}

absl::StatusOr<double> ForwardWithGradient(const AuditModel& model,
                                           const MembershipFeature& feature,
                                           std::span<double> grad) {
  RETURN_IF_ERROR(CheckArity(model, feature));
  if (grad.size() != model.num_params()) {
    return absl::InvalidArgumentError("gradient buffer has wrong size");
  }
  ForwardCache cache;
  const double p =
      Sigmoid(model.LogitCached(feature.align_diffs, feature.similarities, cache));
  std::fill(grad.begin(), grad.end(), 0.0);
  model.Backward(cache, p * (1.0 - p), grad);
  return p;
}

absl::Status SaveCheckpoint(const std::filesystem::path& path,
                            const Checkpoint& checkpoint) {
  const AuditModel& m = checkpoint.model;
  json j = {{"format", kCheckpointFormat},
            {"variant", ModelVariantName(m.variant())},
            {"n", m.n()},
            {"widths",
             {{"stream", kStreamWidths}, {"fusion", kFusionWidths}}},
            {"seed", m.seed()},
            {"encoder_id", checkpoint.encoder_id},
            {"selected_epoch", checkpoint.selected_epoch},
            {"num_params", m.num_params()},
            {"params", std::vector<double>(m.params().begin(), m.params().end())}};
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    return absl::PermissionDeniedError(
        absl::StrCat("cannot write ", path.string()));
  }
  out << j.dump() << '\n';
  if (!out) return absl::DataLossError("short write to checkpoint");
  return absl::OkStatus();
}

absl::StatusOr<Checkpoint> LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    return absl::NotFoundError(
        absl::StrCat("checkpoint not found: ", path.string()));
  }
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || j.value("format", "") != kCheckpointFormat) {
    return absl::DataLossError(
        absl::StrCat(path.string(), " is not a checkpoint"));
  }
  if (j["widths"]["stream"].get<std::vector<int>>() !=
          std::vector<int>(kStreamWidths.begin(), kStreamWidths.end()) ||
      j["widths"]["fusion"].get<std::vector<int>>() !=
          std::vector<int>(kFusionWidths.begin(), kFusionWidths.end())) {
    return absl::FailedPreconditionError(
        "checkpoint was trained with different layer widths");
  }
  ASSIGN_OR_RETURN(ModelVariant variant,
                   ParseModelVariant(j.value("variant", "")));
  ASSIGN_OR_RETURN(AuditModel model,
                   AuditModel::Create(j.value("n", 0), variant,
                                      j.value("seed", uint64_t{0})));
  const auto params = j["params"].get<std::vector<double>>();
  if (params.size() != model.num_params()) {
    return absl::DataLossError("checkpoint parameter count mismatch");
  }
  std::copy(params.begin(), params.end(), model.params().begin());
  return Checkpoint{std::move(model), j.value("encoder_id", ""),
                    j.value("selected_epoch", 0)};
}

}  // namespace provaudit
