#pragma once

// Row-level formulas shared by the serial and OpenMP kernels. Keeping them in
// one place guarantees both variants round identically per grid point.

#include <cmath>
#include <complex>

#include "timecov/kernels.hpp"

namespace timecov::kernels::detail {

inline Complex stencil_row(std::span<const Complex> psi, const Stencil& h, std::size_t j) {
  const Complex lap = 2.0 * psi[j] - psi[j - 1] - psi[j + 1];
  return h.scale * (h.kinetic * lap + h.potential[j] * psi[j]);
}

// (I - i kappa H) psi at row j.
inline Complex cn_rhs_row(std::span<const Complex> psi, const Stencil& h, double kappa,
                          std::size_t j) {
  const Complex hpsi = stencil_row(psi, h, j);
  return psi[j] + Complex(hpsi.imag() * kappa, -hpsi.real() * kappa);
}

inline Complex cn_diag(const Stencil& h, double kappa, std::size_t j) {
  return {1.0, kappa * h.scale * (2.0 * h.kinetic + h.potential[j])};
}

inline double ipow(double x, int p) {
  double r = 1.0;
  for (int k = 0; k < p; ++k) r *= x;
  return r;
}

// Solves (I + i kappa H) psi = ws.rhs over the interior given ws.diag.
inline void thomas_sweep(std::span<Complex> psi, const Stencil& h, double kappa, Workspace& ws) {
  const std::size_t n = psi.size();
  const Complex off(0.0, -kappa * h.scale * h.kinetic);
  const std::size_t first = 1;
  const std::size_t last = n - 2;

  Complex pivot = ws.diag[first];
  for (std::size_t j = first;; ++j) {
    if (!(std::abs(pivot) > 1e-300) || !std::isfinite(pivot.real()) || !std::isfinite(pivot.imag())) {
      throw NumericalError("Crank-Nicolson tridiagonal solve hit a singular pivot");
    }
    const Complex inv = 1.0 / pivot;
    ws.upper[j] = off * inv;
    ws.rhs[j] = (j == first ? ws.rhs[j] : ws.rhs[j] - off * ws.rhs[j - 1]) * inv;
    if (j == last) break;
    pivot = ws.diag[j + 1] - off * ws.upper[j];
  }

  psi[n - 1] = Complex{};
  psi[last] = ws.rhs[last];
  for (std::size_t j = last; j-- > first;) psi[j] = ws.rhs[j] - ws.upper[j] * psi[j + 1];
  psi[0] = Complex{};
}

}  // namespace timecov::kernels::detail
