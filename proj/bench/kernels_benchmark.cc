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

// Serial reference kernels against their OpenMP counterparts.

#include <random>
#include <vector>

#include "benchmark/benchmark.h"
#include "provaudit/kernels.h"

namespace provaudit::kernels {
namespace {

EmbeddingVector RandomUnit(std::mt19937_64& rng, int dim, Modality modality) {
  std::normal_distribution<double> normal;
  std::vector<double> v(dim);
  for (double& x : v) x = normal(rng);
  (void)NormalizeInPlace(v);
  return {std::move(v), modality};
}

std::vector<SampleEmbeddings> Samples(int count, int n, int dim) {
  std::mt19937_64 rng(1);
  std::vector<SampleEmbeddings> out(count);
  for (int i = 0; i < count; ++i) {
    out[i].sample_id = std::to_string(i);
    out[i].text = RandomUnit(rng, dim, Modality::kText);
    out[i].image = RandomUnit(rng, dim, Modality::kImage);
    for (int k = 0; k < n; ++k) out[i].generated.push_back(RandomUnit(rng, dim, Modality::kImage));
  }
  return out;
}

template <auto Kernel>
void BM_Features(benchmark::State& state) {
  const auto samples = Samples(int(state.range(0)), 64, 512);
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(samples, true));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Features<BuildFeaturesSerial>)->Name("features/serial")->Arg(256)->Arg(1024);
BENCHMARK(BM_Features<BuildFeaturesParallel>)->Name("features/parallel")->Arg(256)->Arg(1024);

template <auto Kernel>
void BM_Predict(benchmark::State& state) {
  const auto samples = Samples(int(state.range(0)), 64, 32);
  const auto features = *BuildFeaturesSerial(samples);
  const AuditModel model = *InitModel(64, ModelVariant::kTwoBranch, 0);
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(model, features));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Predict<PredictProbabilitiesSerial>)->Name("predict/serial")->Arg(1024)->Arg(4096);
BENCHMARK(BM_Predict<PredictProbabilitiesParallel>)->Name("predict/parallel")->Arg(1024)->Arg(4096);

RgbImage Noise(std::mt19937_64& rng, int side) {
  RgbImage image(side, side);
  for (auto& p : image.pixels) p = rng() & 0xff;
  return image;
}

void BM_PixelErrorSerial(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const RgbImage image = Noise(rng, 256);
  std::vector<RgbImage> generated;
  for (int i = 0; i < state.range(0); ++i) generated.push_back(Noise(rng, 256));
  for (auto _ : state) benchmark::DoNotOptimize(PixelErrorScore(image, generated));
}
BENCHMARK(BM_PixelErrorSerial)->Name("pixel_error/serial")->Arg(16)->Arg(64);

void BM_PixelErrorParallel(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const RgbImage image = Noise(rng, 256);
  std::vector<RgbImage> generated;
  for (int i = 0; i < state.range(0); ++i) generated.push_back(Noise(rng, 256));
  for (auto _ : state) benchmark::DoNotOptimize(PixelErrorScoreParallel(image, generated));
}
BENCHMARK(BM_PixelErrorParallel)->Name("pixel_error/parallel")->Arg(16)->Arg(64);

}  // namespace
}  // namespace provaudit::kernels

BENCHMARK_MAIN();
