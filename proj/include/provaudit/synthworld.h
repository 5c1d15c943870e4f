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

#ifndef PROVAUDIT_SYNTHWORLD_H_
#define PROVAUDIT_SYNTHWORLD_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "absl/status/statusor.h"
#include "provaudit/corpus.h"
#include "provaudit/encoders.h"
#include "provaudit/generation.h"

namespace provaudit {

// Parameters of a synthetic memorizing world. `memorization` blends the
// paired training image into member generations; `noise_scale` is the
// per-query jitter.
struct SynthConfig {
  int n_members = 500;
  int n_nonmembers = 500;
  int dim = 64;
  double memorization = 0.9;
  double noise_scale = 0.1;
  uint64_t seed = 0;
};

absl::Status ValidateSynthConfig(const SynthConfig& config);

// Latent images carry a raw float64 vector in their pixel bytes behind an
// 8-byte magic, one row high.
RgbImage EncodeLatentImage(std::span<const double> latent);
std::optional<std::vector<double>> DecodeLatentImage(const RgbImage& image);

// Text tower identical to MockEncoder; the image tower reads latent images
// directly and falls back to byte hashing for anything else. All worlds of
// one dimension share this encoder.
class LatentEncoder : public MockEncoder {
 public:
  explicit LatentEncoder(int dim);
  std::string Id() const override;

 protected:
  absl::StatusOr<std::vector<double>> RawImage(
      const RgbImage& image) const override;
};

// Black-box backend of the world. For a member text with image latent v and
// text latent t, generated image i embeds to
//   normalize(rho * v + (1 - rho) * f_i + sigma * q_i),
// otherwise to normalize(f_i + sigma * q_i), where f_i = normalize(t + r_i)
// is a fresh text-conditioned draw and r_i, q_i are seeded unit noise.
class SynthBackend : public GenerationBackend {
 public:
  struct Entry {
    bool member = false;
    std::vector<double> image_latent;
  };

  SynthBackend(SynthConfig config, std::shared_ptr<const LatentEncoder> encoder,
               std::unordered_map<std::string, Entry> memory);

  std::string Id() const override;
  absl::StatusOr<std::vector<RgbImage>> Generate(
      const GenerationRequest& request) const override;

  int64_t calls() const { return calls_.load(); }

 private:
  SynthConfig config_;
  std::shared_ptr<const LatentEncoder> encoder_;
  std::unordered_map<std::string, Entry> memory_;
  mutable std::atomic<int64_t> calls_{0};
};

struct SynthWorld {
  Corpus corpus;
  std::shared_ptr<SynthBackend> backend;
  std::shared_ptr<LatentEncoder> encoder;
};

// Pure function of `config`.
absl::StatusOr<SynthWorld> MakeWorld(const SynthConfig& config);

}  // namespace provaudit

#endif  // PROVAUDIT_SYNTHWORLD_H_
