#include <omp.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "kernels_common.hpp"
#include "timecov/kernels.hpp"

namespace timecov::kernels::parallel {

namespace {

std::size_t block_count(std::size_t n) { return (n + kReductionBlock - 1) / kReductionBlock; }

// Sums term(j) over [0, n) block by block, then folds the block partials in
// index order. Deterministic for any thread count.
template <class T, class Term>
T blocked_sum(std::size_t n, Term term) {
  const std::size_t nb = block_count(n);
  if (nb <= 1) {
    T s{};
    for (std::size_t j = 0; j < n; ++j) s += term(j);
    return s;
  }
  std::vector<T> partial(nb);
  const auto nbi = static_cast<std::ptrdiff_t>(nb);
#pragma omp parallel for schedule(static) if (n >= kParallelThreshold)
  for (std::ptrdiff_t b = 0; b < nbi; ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kReductionBlock;
    const std::size_t hi = std::min(n, lo + kReductionBlock);
    T s{};
    for (std::size_t j = lo; j < hi; ++j) s += term(j);
    partial[static_cast<std::size_t>(b)] = s;
  }
  T total{};
  for (const T& p : partial) total += p;
  return total;
}

}  // namespace

void apply_hamiltonian(std::span<const Complex> psi, const Stencil& h, std::span<Complex> out) {
  const std::size_t n = psi.size();
  out[0] = Complex{};
  out[n - 1] = Complex{};
  const auto last = static_cast<std::ptrdiff_t>(n) - 1;
#pragma omp parallel for schedule(static) if (n >= kParallelThreshold)
  for (std::ptrdiff_t j = 1; j < last; ++j) {
    out[static_cast<std::size_t>(j)] = detail::stencil_row(psi, h, static_cast<std::size_t>(j));
  }
}

void crank_nicolson_step(std::span<Complex> psi, const Stencil& h, double kappa, Workspace& ws) {
  const std::size_t n = psi.size();
  ws.resize(n);
  const auto last = static_cast<std::ptrdiff_t>(n) - 1;
#pragma omp parallel for schedule(static) if (n >= kParallelThreshold)
  for (std::ptrdiff_t jj = 1; jj < last; ++jj) {
    const auto j = static_cast<std::size_t>(jj);
    ws.rhs[j] = detail::cn_rhs_row(psi, h, kappa, j);
    ws.diag[j] = detail::cn_diag(h, kappa, j);
  }
  detail::thomas_sweep(psi, h, kappa, ws);
}

Complex inner_product(std::span<const Complex> a, std::span<const Complex> b, double dx) {
  return blocked_sum<Complex>(a.size(), [&](std::size_t j) { return std::conj(a[j]) * b[j]; }) * dx;
}

double norm_squared(std::span<const Complex> a, double dx) {
  return blocked_sum<double>(a.size(), [&](std::size_t j) { return std::norm(a[j]); }) * dx;
}

double position_moment(std::span<const Complex> psi, std::span<const double> xs, int power,
                       double dx) {
  return blocked_sum<double>(psi.size(), [&](std::size_t j) {
           return std::norm(psi[j]) * detail::ipow(xs[j], power);
         }) *
         dx;
}

double edge_mass(std::span<const Complex> psi, std::size_t guard, double dx) {
  // Guards are small strips at the ends; no point spreading them over threads.
  return serial::edge_mass(psi, guard, dx);
}

}  // namespace timecov::kernels::parallel
