// Serial reference vs OpenMP kernels across grid sizes.
//   ./bench_kernels --benchmark_filter=CrankNicolson
// Set OMP_NUM_THREADS to vary the parallel width.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "timecov/kernels.hpp"

using namespace timecov;
namespace ks = timecov::kernels::serial;
namespace kp = timecov::kernels::parallel;

namespace {

struct Fixture {
  std::vector<Complex> psi, chi, out;
  std::vector<double> v;
  kernels::Workspace ws;

  explicit Fixture(std::size_t n) : psi(n), chi(n), out(n), v(n) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    for (std::size_t j = 1; j + 1 < n; ++j) {
      psi[j] = {g(rng), g(rng)};
      chi[j] = {g(rng), g(rng)};
    }
    for (std::size_t j = 0; j < n; ++j) v[j] = 0.5 * (g(rng) * g(rng));
  }
  kernels::Stencil stencil() const { return {100.0, v, 1.0}; }
};

template <bool Parallel>
void BM_ApplyHamiltonian(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)));
  const auto h = f.stencil();
  for (auto _ : state) {
    if constexpr (Parallel) kp::apply_hamiltonian(f.psi, h, f.out);
    else ks::apply_hamiltonian(f.psi, h, f.out);
    benchmark::DoNotOptimize(f.out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_CrankNicolson(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)));
  const auto h = f.stencil();
  for (auto _ : state) {
    if constexpr (Parallel) kp::crank_nicolson_step(f.psi, h, 1e-4, f.ws);
    else ks::crank_nicolson_step(f.psi, h, 1e-4, f.ws);
    benchmark::DoNotOptimize(f.psi.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_InnerProduct(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    Complex z = Parallel ? kp::inner_product(f.psi, f.chi, 0.01) : ks::inner_product(f.psi, f.chi, 0.01);
    benchmark::DoNotOptimize(z);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

#define SIZES RangeMultiplier(8)->Range(512, 1 << 21)

BENCHMARK(BM_ApplyHamiltonian<false>)->Name("ApplyHamiltonian/serial")->SIZES;
BENCHMARK(BM_ApplyHamiltonian<true>)->Name("ApplyHamiltonian/omp")->SIZES;
BENCHMARK(BM_CrankNicolson<false>)->Name("CrankNicolson/serial")->SIZES;
BENCHMARK(BM_CrankNicolson<true>)->Name("CrankNicolson/omp")->SIZES;
BENCHMARK(BM_InnerProduct<false>)->Name("InnerProduct/serial")->SIZES;
BENCHMARK(BM_InnerProduct<true>)->Name("InnerProduct/omp")->SIZES;

BENCHMARK_MAIN();
