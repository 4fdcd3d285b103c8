// Copyright 2026 The PInSAR Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "pinsar/autodiff/ops.hpp"
#include "pinsar/encoder/encoder.hpp"
#include "pinsar/protohead/protohead.hpp"
#include "pinsar/syngen/dataset.hpp"

using namespace pinsar;
using TF = ad::Tensor<float>;

namespace {

TF random_tensor(ad::Shape shape, std::uint64_t seed, bool grad = false) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> dist;
  std::vector<float> v(ad::numel(shape));
  for (auto& x : v) x = dist(rng);
  return TF::from(std::move(shape), std::move(v), grad);
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_tensor({n, n}, 1), b = random_tensor({n, n}, 2);
  ad::NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(ad::matmul(a, b));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * 2 * state.range(0) * state.range(0) *
                          state.range(0));
}
BENCHMARK(BM_Matmul)->RangeMultiplier(2)->Range(32, 256);

void BM_Conv2dForwardBackward(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  auto x = random_tensor({8, c, 32, 32}, 3, true);
  auto w = random_tensor({2 * c, c, 3, 3}, 4, true);
  auto b = random_tensor({2 * c}, 5, true);
  for (auto _ : state) {
    ad::sum(ad::conv2d(x, w, b, 1, 1)).backward();
    x.zero_grad();
    w.zero_grad();
    b.zero_grad();
  }
}
BENCHMARK(BM_Conv2dForwardBackward)->Arg(4)->Arg(16);

void BM_EncoderStep(benchmark::State& state) {
  encoder::EncoderConfig cfg;
  cfg.kind = state.range(0) == 0 ? encoder::EncoderKind::tiny_cnn : encoder::EncoderKind::tiny_swin;
  const auto batch = static_cast<std::size_t>(state.range(1));
  auto enc = encoder::make_encoder<float>(cfg, 7);
  const auto x = random_tensor({batch, 1, 64, 64}, 8);
  for (auto _ : state) {
    ad::mean(enc->forward(x)).backward();
    for (auto& p : enc->parameters()) p.tensor.zero_grad();
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * batch));
  state.SetLabel(cfg.kind == encoder::EncoderKind::tiny_cnn ? "tiny_cnn" : "tiny_swin");
}
BENCHMARK(BM_EncoderStep)->Args({0, 40})->Args({1, 8})->Args({1, 40})->Unit(benchmark::kMillisecond);

void BM_EncoderInference(benchmark::State& state) {
  encoder::EncoderConfig cfg;
  auto enc = encoder::make_encoder<float>(cfg, 7);
  const auto x = random_tensor({100, 1, 64, 64}, 9);
  ad::NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(enc->forward(x));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * 100));
}
BENCHMARK(BM_EncoderInference)->Unit(benchmark::kMillisecond);

void BM_CombinedLoss(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(10);
  proto::PrototypeBank<float> bank(2, 1, d, 1.0, proto::default_lambda(d), rng);
  auto z = random_tensor({40, d}, 11, true);
  proto::Labels labels(40);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 2);
  for (auto _ : state) {
    proto::combined_loss(z, labels, bank).backward();
    z.zero_grad();
    bank.prototypes.zero_grad();
  }
}
BENCHMARK(BM_CombinedLoss)->Arg(3)->Arg(100);

void BM_SynthesizeScene(benchmark::State& state) {
  const auto profile = syngen::profile_params(state.range(0) == 0 ? syngen::DomainProfile::source
                                                                  : syngen::DomainProfile::target);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(syngen::synthesize_scene(1, profile, {}, ++seed));
  state.SetLabel(state.range(0) == 0 ? "source" : "target");
}
BENCHMARK(BM_SynthesizeScene)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
