#include "multibump/kernels.hpp"
#include "multibump/weight.hpp"

#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

using namespace multibump;

namespace {

struct Fixture {
  GridPtr grid;
  std::vector<double> u, v, out;
};

// 2N + 1 periods of the step weight at the given cells per interval.
Fixture make(int periods, int cells) {
  static const WeightSpec w = WeightSpec::build(weights::step());
  Fixture f;
  f.grid = make_grid(w, periods, cells);
  const auto& t = f.grid->nodes();
  f.u.resize(t.size());
  f.v.resize(t.size());
  f.out.resize(t.size());
  for (std::size_t k = 0; k < t.size(); ++k) {
    f.u[k] = 1.0 + 0.5 * std::sin(3.14159265358979 * t[k]);
    f.v[k] = std::cos(0.7 * t[k]);
  }
  return f;
}

template <bool Parallel>
void bm_action(benchmark::State& st) {
  auto f = make(static_cast<int>(st.range(0)), 1000);
  for (auto _ : st) {
    double a = Parallel ? kernels::parallel::action(*f.grid, f.u, 100.0) : kernels::serial::action(*f.grid, f.u, 100.0);
    benchmark::DoNotOptimize(a);
  }
  st.counters["nodes"] = static_cast<double>(f.u.size());
}

template <bool Parallel>
void bm_gradient(benchmark::State& st) {
  auto f = make(static_cast<int>(st.range(0)), 1000);
  for (auto _ : st) {
    if (Parallel)
      kernels::parallel::gradient(*f.grid, f.u, 100.0, f.out);
    else
      kernels::serial::gradient(*f.grid, f.u, 100.0, f.out);
    benchmark::DoNotOptimize(f.out.data());
  }
}

template <bool Parallel>
void bm_hessian(benchmark::State& st) {
  auto f = make(static_cast<int>(st.range(0)), 1000);
  for (auto _ : st) {
    if (Parallel)
      kernels::parallel::hessian_apply(*f.grid, f.u, 100.0, f.v, f.out);
    else
      kernels::serial::hessian_apply(*f.grid, f.u, 100.0, f.v, f.out);
    benchmark::DoNotOptimize(f.out.data());
  }
}

template <bool Parallel>
void bm_holder(benchmark::State& st) {
  auto f = make(1, static_cast<int>(st.range(0)));
  const double gap = f.grid->min_cell() * (1.0 - 1e-9);
  for (auto _ : st) {
    auto r = Parallel ? kernels::parallel::holder_seminorm(f.grid->nodes(), f.v, 0.5, gap)
                      : kernels::serial::holder_seminorm(f.grid->nodes(), f.v, 0.5, gap);
    benchmark::DoNotOptimize(r.value);
  }
}

}  // namespace

BENCHMARK(bm_action<false>)->Arg(1)->Arg(4)->Arg(16)->Unit(benchmark::kMicrosecond);
BENCHMARK(bm_action<true>)->Arg(1)->Arg(4)->Arg(16)->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK(bm_gradient<false>)->Arg(1)->Arg(4)->Arg(16)->Unit(benchmark::kMicrosecond);
BENCHMARK(bm_gradient<true>)->Arg(1)->Arg(4)->Arg(16)->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK(bm_hessian<false>)->Arg(1)->Arg(4)->Arg(16)->Unit(benchmark::kMicrosecond);
BENCHMARK(bm_hessian<true>)->Arg(1)->Arg(4)->Arg(16)->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK(bm_holder<false>)->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_holder<true>)->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
