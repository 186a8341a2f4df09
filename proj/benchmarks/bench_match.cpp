#include <benchmark/benchmark.h>

#include <map>
#include <random>

#include "vrfp/eval.hpp"

using namespace vrfp;

namespace {

// One gallery per (p_t, p_q) pair, drawn once and shared across iterations
// so the clock sees only the scoring pass.
const SynthResult& gallery_for(int pt_permille, int pq_permille) {
  static std::map<std::pair<int, int>, SynthResult> cache;
  auto key = std::make_pair(pt_permille, pq_permille);
  auto it = cache.find(key);
  if (it == cache.end()) {
    SparsityProfile p;
    p.M = 500;
    p.p_gallery = pt_permille / 1000.0;
    p.p_query = pq_permille / 1000.0;
    p.seed = 12;
    it = cache.emplace(key, synth_gallery(p)).first;
  }
  return it->second;
}

void BM_DenseDot(benchmark::State& state) {
  const SynthResult& s = gallery_for(int(state.range(0)), int(state.range(1)));
  FisherVector dq = densify(s.query);
  for (auto _ : state) {
    ScoreResult r = naive_dot(dq, s.index);
    benchmark::DoNotOptimize(r.ranking.items.data());
  }
  state.counters["multiplies"] = double(naive_dot(dq, s.index).ops.multiplies);
}

void BM_OneSidedSparseDot(benchmark::State& state) {
  const SynthResult& s = gallery_for(int(state.range(0)), int(state.range(1)));
  FisherVector dq = densify(s.query);
  for (auto _ : state) {
    ScoreResult r = sparse_side_dot(dq, s.index);
    benchmark::DoNotOptimize(r.ranking.items.data());
  }
  state.counters["multiplies"] = double(sparse_side_dot(dq, s.index).ops.multiplies);
}

void BM_IntersectionDot(benchmark::State& state) {
  const SynthResult& s = gallery_for(int(state.range(0)), int(state.range(1)));
  for (auto _ : state) {
    ScoreResult r = ffp_dot(s.query, s.index);
    benchmark::DoNotOptimize(r.ranking.items.data());
  }
  auto ops = ffp_dot(s.query, s.index).ops;
  state.counters["multiplies"] = double(ops.multiplies);
  state.counters["probes"] = double(ops.intersection_ops);
}

void BM_IntersectionDotLossy(benchmark::State& state) {
  SparsityProfile p;
  p.M = 500;
  p.biased = true;
  p.hot_count = 2;
  p.p_hot = 0.5;
  p.p_low = 0.1;
  p.seed = 12;
  static SynthResult s = synth_gallery(p);
  static DropList drop = make_drop_list(s.index, std::uint32_t(2));
  for (auto _ : state) {
    ScoreResult r = ffp_dot(s.query, s.index, drop);
    benchmark::DoNotOptimize(r.ranking.items.data());
  }
  state.counters["multiplies"] = double(ffp_dot(s.query, s.index, drop).ops.multiplies);
}

void BM_FvEncode(benchmark::State& state) {
  std::mt19937_64 rng(5);
  GmmCodebook cb;
  cb.K = std::uint32_t(state.range(0));
  cb.D = 16;
  cb.weights.assign(cb.K, 1.0 / cb.K);
  cb.means.resize(std::size_t(cb.K) * cb.D);
  cb.variances.resize(std::size_t(cb.K) * cb.D);
  for (auto& m : cb.means) m = double(rng() >> 11) * 0x1.0p-53 * 4.0 - 2.0;
  for (auto& v : cb.variances) v = 0.5 + double(rng() >> 11) * 0x1.0p-53;
  FeatureBag bag;
  bag.id = "bench";
  bag.dim = 16;
  bag.data.resize(100 * 16);
  for (auto& x : bag.data) x = float(double(rng() >> 11) * 0x1.0p-53 * 4.0 - 2.0);
  for (auto _ : state) {
    FisherVector v = fv_encode(cb, bag);
    benchmark::DoNotOptimize(v.values.data());
  }
}

void BM_Sparsify(benchmark::State& state) {
  std::mt19937_64 rng(6);
  FisherVector v;
  v.K = 256;
  v.D = 16;
  v.values.resize(std::size_t(2) * 256 * 16);
  for (auto& x : v.values) x = float(double(rng() >> 11) * 0x1.0p-53 * 0.02 - 0.01);
  v = l2_normalize(std::move(v));
  for (auto _ : state) {
    SparseFV s = sparsify(v, kDefaultShrinkThreshold);
    benchmark::DoNotOptimize(s.blocks.data());
  }
}

}  // namespace

// Permille sparsities: the headline comparison is 70/150, the dense end
// shows the crossover where intersection bookkeeping stops paying.
BENCHMARK(BM_DenseDot)->Args({70, 150})->Args({500, 500})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_OneSidedSparseDot)->Args({70, 150})->Args({500, 500})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_IntersectionDot)->Args({70, 150})->Args({500, 500})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_IntersectionDotLossy)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_FvEncode)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Sparsify)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
