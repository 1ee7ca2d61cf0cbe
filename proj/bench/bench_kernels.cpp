// Serial reference vs OpenMP kernels on layer shapes the pipeline uses
// (1563 inputs -> 256 hidden, batch 256) and on embedding projection.
#include <benchmark/benchmark.h>

#include <random>

#include "patent/embedding.hpp"
#include "patent/kernels.hpp"

using namespace patent;

namespace {

struct Shapes {
  Matrix in, w, grad, out, gw, gi;
  std::vector<double> bias, gb;

  Shapes(std::size_t batch, std::size_t fan_in, std::size_t fan_out)
      : in(batch, fan_in), w(fan_in, fan_out), grad(batch, fan_out), out(batch, fan_out), gw(fan_in, fan_out),
        gi(batch, fan_in), bias(fan_out), gb(fan_out) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> z;
    for (double& v : in.storage()) v = z(rng);
    for (double& v : w.storage()) v = z(rng);
    for (double& v : grad.storage()) v = z(rng);
  }
};

template <bool Parallel>
void BM_AffineForward(benchmark::State& state) {
  Shapes s(256, static_cast<std::size_t>(state.range(0)), 256);
  for (auto _ : state) {
    if constexpr (Parallel) kernels::affine_forward(s.in, s.w, s.bias, s.out);
    else kernels::reference::affine_forward(s.in, s.w, s.bias, s.out);
    benchmark::DoNotOptimize(s.out.data());
  }
  state.SetItemsProcessed(state.iterations() * 256 * state.range(0) * 256);
}

template <bool Parallel>
void BM_AffineBackward(benchmark::State& state) {
  Shapes s(256, static_cast<std::size_t>(state.range(0)), 256);
  for (auto _ : state) {
    if constexpr (Parallel) {
      kernels::affine_weight_grad(s.in, s.grad, s.gw, s.gb);
      kernels::affine_input_grad(s.grad, s.w, s.gi);
    } else {
      kernels::reference::affine_weight_grad(s.in, s.grad, s.gw, s.gb);
      kernels::reference::affine_input_grad(s.grad, s.w, s.gi);
    }
    benchmark::DoNotOptimize(s.gw.data());
  }
}

template <bool Parallel>
void BM_ProjectBuckets(benchmark::State& state) {
  std::vector<std::uint64_t> buckets(static_cast<std::size_t>(state.range(0)));
  std::vector<double> counts(buckets.size(), 1.0), out(kEmbeddingDim);
  for (std::size_t i = 0; i < buckets.size(); ++i) buckets[i] = i * 7919;
  for (auto _ : state) {
    if constexpr (Parallel) kernels::project_buckets(buckets, counts, 3, out);
    else kernels::reference::project_buckets(buckets, counts, 3, out);
    benchmark::DoNotOptimize(out.data());
  }
}

}  // namespace

BENCHMARK(BM_AffineForward<false>)->Arg(64)->Arg(1563)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AffineForward<true>)->Arg(64)->Arg(1563)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AffineBackward<false>)->Arg(1563)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AffineBackward<true>)->Arg(1563)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ProjectBuckets<false>)->Arg(80)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ProjectBuckets<true>)->Arg(80)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
