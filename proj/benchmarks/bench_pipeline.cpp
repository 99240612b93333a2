// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include <cmath>

#include "prosodet/backbone.hpp"
#include "prosodet/eval.hpp"
#include "prosodet/model.hpp"
#include "prosodet/pitch.hpp"
#include "prosodet/pro_mtl.hpp"
#include "prosodet/rawboost.hpp"

using namespace prosodet;

namespace {

std::vector<double> bench_waveform() {
  std::vector<double> x(kFixedSamples);
  rng::Stream rng(1);
  for (size_t i = 0; i < x.size(); ++i) {
    x[i] = 0.3 * std::sin(2.0 * M_PI * 180.0 * static_cast<double>(i) / kSampleRate) +
           0.02 * rng.gaussian();
  }
  return x;
}

}  // namespace

static void BM_EncodeForward(benchmark::State& state) {
  rng::Stream rng(2);
  EncoderConfig cfg;
  cfg.n_layers = static_cast<int>(state.range(0));
  cfg.d_model = static_cast<int>(state.range(1));
  cfg.n_heads = cfg.d_model >= 64 ? 4 : 2;
  const Backbone backbone(cfg, rng);
  const auto wave = bench_waveform();
  for (auto _ : state) {
    benchmark::DoNotOptimize(backbone.encode_waveform(wave));
  }
}
BENCHMARK(BM_EncodeForward)->Args({4, 64})->Args({2, 32})->Unit(benchmark::kMillisecond);

static void BM_ProMTLForward(benchmark::State& state) {
  rng::Stream rng(3);
  ProMTLConfig cfg;
  cfg.in_dim = 64;
  ProMTL head(cfg, rng);
  Mat features(200, 64);
  for (Eigen::Index i = 0; i < features.size(); ++i) features(i) = rng.uniform(-1.0, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(head.predict(features));
  }
}
BENCHMARK(BM_ProMTLForward)->Unit(benchmark::kMillisecond);

static void BM_TrainStep(benchmark::State& state) {
  Model model(ModelConfig::desk_default(), 4);
  const auto wave = bench_waveform();
  rng::Stream rng(5);
  Mat ref_f0(200, 1), ref_vuv(200, 1);
  for (int t = 0; t < 200; ++t) {
    const bool voiced = rng.uniform() < 0.7;
    ref_f0(t, 0) = voiced ? rng.uniform(-2.0, 2.0) : 0.0;
    ref_vuv(t, 0) = voiced ? 1.0 : 0.0;
  }
  for (auto _ : state) {
    model.zero_grads();
    ad::Tape tape;
    const auto layers = model.backbone().forward(tape, wave);
    ad::Var h2 = model.backbone().aggregate(tape, layers);
    const ProMTL::Out out = model.promtl().forward(tape, h2);
    ad::Var cls = model.classifier().forward(tape, h2);
    ad::Var loss = stage2_loss(tape, cls, Label::Spoof, out.f0_hat, out.vuv_logits, ref_f0,
                               ref_vuv, 0.4, 0.2, 1.0, 1.0);
    tape.backward(loss);
    benchmark::DoNotOptimize(tape.scalar(loss));
  }
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

static void BM_PitchExtraction(benchmark::State& state) {
  AutocorrPitchBackend backend;
  Utterance utt;
  utt.utt_id = "bench";
  utt.waveform = bench_waveform();
  for (auto _ : state) {
    benchmark::DoNotOptimize(backend.extract(utt));
  }
}
BENCHMARK(BM_PitchExtraction)->Unit(benchmark::kMillisecond);

static void BM_RawBoost(benchmark::State& state) {
  const auto wave = bench_waveform();
  RawBoostConfig cfg;
  rng::Stream rng(6);
  for (auto _ : state) {
    rng::Stream aug(rng.bits());
    benchmark::DoNotOptimize(apply_rawboost(wave, cfg, aug));
  }
}
BENCHMARK(BM_RawBoost)->Unit(benchmark::kMillisecond);

static void BM_ComputeEer(benchmark::State& state) {
  rng::Stream rng(7);
  std::vector<ScoreRecord> records;
  const size_t n = static_cast<size_t>(state.range(0));
  for (size_t i = 0; i < n; ++i) {
    records.push_back({"b" + std::to_string(i), rng.uniform(-1.0, 3.0), Label::Bonafide});
    records.push_back({"s" + std::to_string(i), rng.uniform(-3.0, 1.0), Label::Spoof});
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(compute_eer(records));
  }
}
BENCHMARK(BM_ComputeEer)->Arg(1000)->Arg(100000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
