#pragma once

// Grid kernels behind the Crank-Nicolson propagator.
//
// Two implementations share one interface:
//   kernels::serial    plain loops, the reference used by the tests
//   kernels::parallel  OpenMP loops with blocked, order-fixed reductions
//
// The parallel reductions sum fixed-size blocks and then combine the block
// partials in index order, so results do not depend on the thread count.
// For n <= kReductionBlock both variants perform the identical sequence of
// floating point operations.
//
// The tridiagonal sweep is sequential in both variants; only the O(n) setup
// around it is parallel.

#include <cstddef>
#include <span>
#include <vector>

#include "timecov/model.hpp"

namespace timecov::kernels {

/// Discrete Hamiltonian scale * (-kinetic * D2 + V) on a Dirichlet grid,
/// where kinetic = hbar^2 / (2 m dx^2) and D2 is the unscaled second
/// difference. The end points are fixed at zero.
struct Stencil {
  double kinetic = 0.0;
  std::span<const double> potential;
  double scale = 1.0;
};

inline double kinetic_coefficient(const PhysicalConstants& c, double dx) {
  return c.hbar * c.hbar / (2.0 * c.mass * dx * dx);
}

/// Scratch space for the tridiagonal sweep; reuse across steps.
struct Workspace {
  std::vector<Complex> diag;
  std::vector<Complex> upper;
  std::vector<Complex> rhs;

  void resize(std::size_t n) {
    diag.resize(n);
    upper.resize(n);
    rhs.resize(n);
  }
};

/// Grids smaller than this run the parallel kernels on one thread.
inline constexpr std::size_t kParallelThreshold = 4096;
/// Block length for order-fixed reductions.
inline constexpr std::size_t kReductionBlock = 1024;

#define TIMECOV_KERNEL_DECLS                                                                     \
  void apply_hamiltonian(std::span<const Complex> psi, const Stencil& h, std::span<Complex> out); \
  /* One step (I + i k H) psi_new = (I - i k H) psi with k = step / (2 hbar). In place. */       \
  void crank_nicolson_step(std::span<Complex> psi, const Stencil& h, double kappa, Workspace& ws); \
  Complex inner_product(std::span<const Complex> a, std::span<const Complex> b, double dx);      \
  double norm_squared(std::span<const Complex> a, double dx);                                    \
  /* sum_j |psi_j|^2 x_j^power dx */                                                             \
  double position_moment(std::span<const Complex> psi, std::span<const double> xs, int power,   \
                         double dx);                                                             \
  /* Probability in the first and last `guard` points. */                                        \
  double edge_mass(std::span<const Complex> psi, std::size_t guard, double dx);

namespace serial {
TIMECOV_KERNEL_DECLS
}  // namespace serial

namespace parallel {
TIMECOV_KERNEL_DECLS
}  // namespace parallel

#undef TIMECOV_KERNEL_DECLS

}  // namespace timecov::kernels
