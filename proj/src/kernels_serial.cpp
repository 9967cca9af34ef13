#include <cmath>

#include "kernels_common.hpp"
#include "timecov/kernels.hpp"

namespace timecov::kernels::serial {

void apply_hamiltonian(std::span<const Complex> psi, const Stencil& h, std::span<Complex> out) {
  const std::size_t n = psi.size();
  out[0] = Complex{};
  out[n - 1] = Complex{};
  for (std::size_t j = 1; j + 1 < n; ++j) out[j] = detail::stencil_row(psi, h, j);
}

void crank_nicolson_step(std::span<Complex> psi, const Stencil& h, double kappa, Workspace& ws) {
  const std::size_t n = psi.size();
  ws.resize(n);
  for (std::size_t j = 1; j + 1 < n; ++j) {
    ws.rhs[j] = detail::cn_rhs_row(psi, h, kappa, j);
    ws.diag[j] = detail::cn_diag(h, kappa, j);
  }
  detail::thomas_sweep(psi, h, kappa, ws);
}

Complex inner_product(std::span<const Complex> a, std::span<const Complex> b, double dx) {
  Complex s{};
  for (std::size_t j = 0; j < a.size(); ++j) s += std::conj(a[j]) * b[j];
  return s * dx;
}

double norm_squared(std::span<const Complex> a, double dx) {
  double s = 0.0;
  for (const auto& v : a) s += std::norm(v);
  return s * dx;
}

double position_moment(std::span<const Complex> psi, std::span<const double> xs, int power,
                       double dx) {
  double s = 0.0;
  for (std::size_t j = 0; j < psi.size(); ++j) s += std::norm(psi[j]) * detail::ipow(xs[j], power);
  return s * dx;
}

double edge_mass(std::span<const Complex> psi, std::size_t guard, double dx) {
  const std::size_t n = psi.size();
  double s = 0.0;
  for (std::size_t j = 0; j < guard && j < n; ++j) s += std::norm(psi[j]);
  for (std::size_t j = (guard < n ? n - guard : 0); j < n; ++j) s += std::norm(psi[j]);
  return s * dx;
}

}  // namespace timecov::kernels::serial
