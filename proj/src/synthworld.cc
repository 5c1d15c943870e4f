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

#include "provaudit/synthworld.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>
#include <random>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "provaudit/digest.h"
#include "provaudit/status_macros.h"

namespace provaudit {
namespace {

constexpr char kLatentMagic[8] = {'P', 'V', 'L', 'A', 'T', 'E', 'N', 'T'};
constexpr uint64_t kEncoderSeed = 0x5eed;

std::vector<double> UnitNoise(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(dim);
  for (double& x : v) x = normal(rng);
  (void)NormalizeInPlace(v);
  return v;
}

}  // namespace

absl::Status ValidateSynthConfig(const SynthConfig& config) {
  if (config.n_members < 0 || config.n_nonmembers < 0 ||
      config.n_members + config.n_nonmembers == 0) {
    return absl::InvalidArgumentError("synthetic world needs samples");
  }
  if (config.dim < 1) return absl::InvalidArgumentError("dim must be >= 1");
  if (!(config.memorization >= 0.0 && config.memorization <= 1.0)) {
    return absl::InvalidArgumentError("memorization must lie in [0, 1]");
  }
  if (!(config.noise_scale > 0.0)) {
    return absl::InvalidArgumentError("noise_scale must be positive");
  }
  return absl::OkStatus();
}

RgbImage EncodeLatentImage(std::span<const double> latent) {
  static_assert(std::endian::native == std::endian::little);
  std::vector<uint8_t> bytes(16 + latent.size() * sizeof(double), 0);
  std::memcpy(bytes.data(), kLatentMagic, 8);
  const uint32_t dim = static_cast<uint32_t>(latent.size());
  std::memcpy(bytes.data() + 8, &dim, sizeof(dim));
  std::memcpy(bytes.data() + 16, latent.data(), latent.size() * sizeof(double));
  RgbImage image(static_cast<int>((bytes.size() + 2) / 3), 1);
  std::copy(bytes.begin(), bytes.end(), image.pixels.begin());
  return image;
}

std::optional<std::vector<double>> DecodeLatentImage(const RgbImage& image) {
  const auto& px = image.pixels;
  if (image.height != 1 || px.size() < 16 ||
      std::memcmp(px.data(), kLatentMagic, 8) != 0) {
    return std::nullopt;
  }
  uint32_t dim = 0;
  std::memcpy(&dim, px.data() + 8, sizeof(dim));
  if (px.size() < 16 + size_t(dim) * sizeof(double)) return std::nullopt;
  std::vector<double> latent(dim);
  std::memcpy(latent.data(), px.data() + 16, dim * sizeof(double));
  return latent;
}

LatentEncoder::LatentEncoder(int dim) : MockEncoder(dim, kEncoderSeed) {}

std::string LatentEncoder::Id() const { return absl::StrCat("synth-latent-d", dim_); }

absl::StatusOr<std::vector<double>> LatentEncoder::RawImage(
    const RgbImage& image) const {
  if (auto latent = DecodeLatentImage(image)) {
    if (static_cast<int>(latent->size()) != dim_) {
      return absl::InvalidArgumentError(absl::StrCat(
          "latent image of dimension ", latent->size(), " fed to a ", dim_,
          "-dimensional encoder"));
    }
    return *std::move(latent);
  }
  return MockEncoder::RawImage(image);
}

SynthBackend::SynthBackend(SynthConfig config,
                           std::shared_ptr<const LatentEncoder> encoder,
                           std::unordered_map<std::string, Entry> memory)
    : config_(config), encoder_(std::move(encoder)), memory_(std::move(memory)) {}

std::string SynthBackend::Id() const {
  return absl::StrFormat("synth:m%d:u%d:d%d:rho%.6g:sigma%.6g:seed%d",
                         config_.n_members, config_.n_nonmembers, config_.dim,
                         config_.memorization, config_.noise_scale, config_.seed);
}

absl::StatusOr<std::vector<RgbImage>> SynthBackend::Generate(
    const GenerationRequest& request) const {
  calls_.fetch_add(1);
  RETURN_IF_ERROR(ValidateRequest(request));
  ASSIGN_OR_RETURN(EmbeddingVector text, encoder_->EmbedText(request.text));
  const Entry* entry = nullptr;
  if (auto it = memory_.find(request.text); it != memory_.end()) {
    entry = &it->second;
  }
  const bool member = entry != nullptr && entry->member;
  const double rho = member ? config_.memorization : 0.0;
  const int dim = config_.dim;

  std::vector<RgbImage> images;
  images.reserve(request.n);
  for (int i = 0; i < request.n; ++i) {
    std::mt19937_64 rng(Sha256Prefix64(absl::StrCat(
        "synth-gen|", config_.seed, "|", request.inference_steps, "|",
        request.base_seed + i, "|", request.text)));
    std::vector<double> fresh = UnitNoise(rng, dim);
    for (int k = 0; k < dim; ++k) fresh[k] += text.values[k];
    (void)NormalizeInPlace(fresh);
    const std::vector<double> jitter = UnitNoise(rng, dim);
    std::vector<double> g(dim);
    for (int k = 0; k < dim; ++k) {
      const double memorized = member ? rho * entry->image_latent[k] : 0.0;
      g[k] = memorized + (1.0 - rho) * fresh[k] +
             config_.noise_scale * jitter[k];
    }
    RETURN_IF_ERROR(NormalizeInPlace(g));
    images.push_back(EncodeLatentImage(g));
  }
  return images;
}

absl::StatusOr<SynthWorld> MakeWorld(const SynthConfig& config) {
  RETURN_IF_ERROR(ValidateSynthConfig(config));
  auto encoder = std::make_shared<LatentEncoder>(config.dim);
  const int total = config.n_members + config.n_nonmembers;

  std::vector<bool> is_member(total, false);
  std::fill_n(is_member.begin(), config.n_members, true);
  std::mt19937_64 rng(Sha256Prefix64(absl::StrCat("synth-world|", config.seed)));
  std::shuffle(is_member.begin(), is_member.end(), rng);

  std::vector<SamplePair> samples;
  std::unordered_map<std::string, SynthBackend::Entry> memory;
  samples.reserve(total);
  for (int i = 0; i < total; ++i) {
    SamplePair s;
    s.id = absl::StrFormat("w%d-%05d", config.seed, i);
    s.text = absl::StrFormat("synthetic scene %d of world %d", i, config.seed);
    ASSIGN_OR_RETURN(EmbeddingVector t, encoder->EmbedText(s.text));
    std::vector<double> latent = UnitNoise(rng, config.dim);
    for (int k = 0; k < config.dim; ++k) latent[k] += t.values[k];
    RETURN_IF_ERROR(NormalizeInPlace(latent));
    s.image.inline_image =
        std::make_shared<const RgbImage>(EncodeLatentImage(latent));
    s.member = is_member[i];
    memory.emplace(s.text, SynthBackend::Entry{is_member[i], std::move(latent)});
    samples.push_back(std::move(s));
  }
  ASSIGN_OR_RETURN(
      Corpus corpus,
      Corpus::Create(absl::StrCat("synth-", config.seed), std::move(samples)));
  auto backend =
      std::make_shared<SynthBackend>(config, encoder, std::move(memory));
  return SynthWorld{std::move(corpus), std::move(backend), std::move(encoder)};
}

}  // namespace provaudit
