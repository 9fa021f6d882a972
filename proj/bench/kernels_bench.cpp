// Serial reference kernels against their OpenMP counterparts on 256x256 scenes.
//
//   ./build/sci_bench --benchmark_counters_tabular=true

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "sci/kernels.hpp"

namespace k = sci::kernels;

namespace {

constexpr std::size_t kSide = 256;
constexpr std::size_t kPixels = kSide * kSide;

std::vector<double> uniform(std::size_t count, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(count);
  for (double& x : v) x = u(rng);
  return v;
}

struct Problem {
  explicit Problem(std::size_t frames)
      : frames(frames),
        masks(uniform(kPixels * frames, 1)),
        x(uniform(kPixels * frames, 2)),
        y(uniform(kPixels, 3)),
        r(kPixels),
        out(kPixels * frames) {
    k::serial::r_diagonal(masks, kPixels, frames, r);
  }

  std::size_t frames;
  std::vector<double> masks, x, y, r, out;
};

template <auto Fn>
void bm_forward(benchmark::State& state) {
  Problem p(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    Fn(p.masks, p.x, kPixels, p.frames, p.y);
    benchmark::DoNotOptimize(p.y.data());
  }
  state.SetBytesProcessed(static_cast<int64_t>(state.iterations() * 2 * p.x.size() * sizeof(double)));
}

template <auto Fn>
void bm_adjoint(benchmark::State& state) {
  Problem p(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    Fn(p.masks, p.y, kPixels, p.frames, p.out);
    benchmark::DoNotOptimize(p.out.data());
  }
  state.SetBytesProcessed(static_cast<int64_t>(state.iterations() * 2 * p.x.size() * sizeof(double)));
}

template <auto Fn>
void bm_project(benchmark::State& state) {
  Problem p(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    Fn(p.masks, p.r, p.y, p.x, kPixels, p.frames, p.out);
    benchmark::DoNotOptimize(p.out.data());
  }
  state.SetBytesProcessed(static_cast<int64_t>(state.iterations() * 3 * p.x.size() * sizeof(double)));
}

template <auto Fn>
void bm_tv(benchmark::State& state) {
  const auto frames = static_cast<std::size_t>(state.range(0));
  const std::vector<double> f = uniform(kPixels * frames, 4);
  std::vector<double> u(f.size());
  const k::TvGeometry g{.nx = kSide, .ny = kSide, .depth = frames, .wt = 0.25};
  for (auto _ : state) {
    Fn(f, g, 0.05, 5, u);
    benchmark::DoNotOptimize(u.data());
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * f.size()));
}

}  // namespace

BENCHMARK(bm_forward<k::serial::forward>)->Name("forward/serial")->Arg(8)->Arg(24);
BENCHMARK(bm_forward<k::omp::forward>)->Name("forward/omp")->Arg(8)->Arg(24)->UseRealTime();
BENCHMARK(bm_adjoint<k::serial::adjoint>)->Name("adjoint/serial")->Arg(8)->Arg(24);
BENCHMARK(bm_adjoint<k::omp::adjoint>)->Name("adjoint/omp")->Arg(8)->Arg(24)->UseRealTime();
BENCHMARK(bm_project<k::serial::project>)->Name("project/serial")->Arg(8)->Arg(24);
BENCHMARK(bm_project<k::omp::project>)->Name("project/omp")->Arg(8)->Arg(24)->UseRealTime();
BENCHMARK(bm_tv<k::serial::tv_chambolle>)->Name("tv3d/serial")->Arg(8);
BENCHMARK(bm_tv<k::omp::tv_chambolle>)->Name("tv3d/omp")->Arg(8)->UseRealTime();

BENCHMARK_MAIN();
