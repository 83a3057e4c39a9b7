#include <random>

#include <benchmark/benchmark.h>

#include "cerfuse/cerfuse.hpp"

namespace {

using namespace cerfuse;

std::vector<double> simplex(std::mt19937_64& rng, std::size_t n) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> v(n);
  double s = 0;
  for (double& x : v) s += (x = e(rng));
  for (double& x : v) x /= s;
  return v;
}

std::vector<std::string> modality_tags(std::size_t m) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < m; ++i) out.push_back("m" + std::to_string(i));
  return out;
}

std::vector<FusionExample> batch(std::size_t M, std::size_t C, std::size_t n) {
  std::mt19937_64 rng(1);
  std::vector<FusionExample> out(n);
  for (auto& ex : out) {
    for (std::size_t m = 0; m < M; ++m) {
      auto p = simplex(rng, C);
      ex.probs.insert(ex.probs.end(), p.begin(), p.end());
    }
    ex.gold = rng() % C;
  }
  return out;
}

void BM_MhpfFuse(benchmark::State& state) {
  const auto H = static_cast<std::size_t>(state.range(0)), M = static_cast<std::size_t>(state.range(1));
  auto model = MhpfModel::init(H, modality_tags(M), EmotionSpace::default_basic(), 1);
  auto ex = batch(M, 8, 1).front();
  for (auto _ : state) benchmark::DoNotOptimize(fuse(model, ex.probs));
}
BENCHMARK(BM_MhpfFuse)->Args({1, 3})->Args({4, 3})->Args({4, 6})->Args({8, 6});

void BM_MhpfGradient(benchmark::State& state) {
  auto model = MhpfModel::init(4, modality_tags(5), EmotionSpace::default_basic(), 1);
  auto b = batch(5, 8, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(gradient(model, b));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MhpfGradient)->Arg(64)->Arg(512);

void BM_MhpfTrainEpoch(benchmark::State& state) {
  auto model = MhpfModel::init(4, modality_tags(3), EmotionSpace::default_basic(), 1);
  auto tr = batch(3, 8, 2000), va = batch(3, 8, 500);
  TrainConfig cfg;
  cfg.max_epochs = 1;
  for (auto _ : state) benchmark::DoNotOptimize(train(model, tr, va, cfg));
}
BENCHMARK(BM_MhpfTrainEpoch)->Unit(benchmark::kMillisecond);

void BM_Ppa(benchmark::State& state) {
  std::mt19937_64 rng(2);
  auto scheme = CompoundScheme::default_cexpr();
  ProbVector p(simplex(rng, 8), EmotionSpace::default_basic());
  for (auto _ : state) benchmark::DoNotOptimize(ppa(p, scheme));
}
BENCHMARK(BM_Ppa);

void BM_Pfsa(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0, 1);
  std::vector<PrototypeSample> samples;
  for (std::size_t i = 0; i < 400; ++i) {
    std::vector<double> f(dim);
    for (double& v : f) v = g(rng);
    samples.push_back({FeatureVector(f), i % 8, i % 8});
  }
  auto bank = build_prototypes(samples, CompoundScheme::default_cexpr());
  auto query = samples.front().features;
  for (auto _ : state) benchmark::DoNotOptimize(pfsa(query, bank, Temperature(0.5)));
}
BENCHMARK(BM_Pfsa)->Arg(16)->Arg(512);

void BM_Frames(benchmark::State& state) {
  const double duration = static_cast<double>(state.range(0));
  std::mt19937_64 rng(4);
  auto space = EmotionSpace::default_basic();
  std::vector<TimedPrediction> segs;
  for (const auto& s : segment_grid(duration)) segs.push_back({s.start_s, s.end_s, ProbVector(simplex(rng, 8), space)});
  for (auto _ : state) benchmark::DoNotOptimize(broadcast_and_average(segs, 25.0, duration));
}
BENCHMARK(BM_Frames)->Arg(30)->Arg(600);

}  // namespace

BENCHMARK_MAIN();
