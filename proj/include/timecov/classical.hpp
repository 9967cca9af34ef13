#pragma once

#include <optional>
#include <vector>

#include "timecov/model.hpp"

namespace timecov {

/// Arguments (T, xi, T', xi') of the homogeneous Lagrangian.
struct LagrangianPoint {
  double T = 0.0;
  double xi = 0.0;
  double tprime = 1.0;
  double xiprime = 0.0;
};

struct TauMomenta {
  double pi = 0.0;    ///< conjugate to xi
  double pi_T = 0.0;  ///< conjugate to T
};

/// Central-difference step used by the identity checks.
inline constexpr double kFiniteDifferenceStep = 1e-5;

// Lagrangian and Hamiltonian in conventional time t.
double lagrangian_t(const PotentialSpec& pot, const PhysicalConstants& c, double t, double x,
                    double xdot);
double hamiltonian_t(const PotentialSpec& pot, const PhysicalConstants& c, double t, double x,
                     double p);

/// T' * L(T, xi, xi'/T') = m xi'^2 / (2 T') - T' V(T, xi).
/// Homogeneous of degree one in (T', xi'). Throws DomainError for T' <= 0.
double homogeneous_lagrangian(const PotentialSpec& pot, const PhysicalConstants& c,
                              const LagrangianPoint& pt);

/// Closed forms pi = m xi'/T', pi_T = -m xi'^2/(2 T'^2) - V(T, xi).
TauMomenta momenta_tau(const PotentialSpec& pot, const PhysicalConstants& c,
                       const LagrangianPoint& pt);

/// T'(tau) * H(T(tau), xi, pi).
double hamiltonian_tau(const PotentialSpec& pot, const PhysicalConstants& c, const TimeMap& map,
                       double tau, double xi, double pi);

/// T' dL~/dT' + xi' dL~/dxi' - L~ with central-difference partials of step h.
/// Zero for any degree-one homogeneous Lagrangian; what remains is
/// truncation plus rounding.
double check_euler_homogeneity(const PotentialSpec& pot, const PhysicalConstants& c,
                               const LagrangianPoint& pt, double h = kFiniteDifferenceStep);

/// T' pi_T + H~ at (T(tau), xi, T'(tau), xi') from the closed forms.
double check_constraint(const PotentialSpec& pot, const PhysicalConstants& c, const TimeMap& map,
                        double tau, double xi, double xiprime);

/// Solution of Hamilton's equations in one clock, with the dense-output
/// interpolant of every accepted step.
class Trajectory {
 public:
  struct Sample {
    double clock;
    double q;
    double pm;
  };

  Trajectory(ClockKind kind, std::optional<TimeMap> map);

  ClockKind clock_kind() const { return kind_; }
  const std::vector<Sample>& samples() const { return samples_; }
  const std::optional<TimeMap>& timemap() const { return map_; }
  std::size_t size() const { return samples_.size(); }

  /// Conventional time of sample i; T(tau_i) for tau trajectories.
  double t_equivalent(std::size_t i) const;
  /// State at an arbitrary clock value inside the covered interval.
  Sample interpolate(double clock) const;
  Interval coverage() const;
  ClassicalState state(std::size_t i) const;

  // Integrator interface.
  struct Segment {
    double clock0;
    double step;
    double coeff[5][2];
  };
  void push_start(const Sample& s);
  void push_step(const Sample& end, const Segment& seg);

 private:
  ClockKind kind_;
  std::optional<TimeMap> map_;
  std::vector<Sample> samples_;
  std::vector<Segment> segments_;
};

/// x' = p/m, p' = -dV/dx(t, x). Adaptive Dormand-Prince 5(4) with local
/// tolerance tol (absolute and relative).
Trajectory integrate_t(const PotentialSpec& pot, const PhysicalConstants& c, double x0, double p0,
                       Interval t_span, double tol);

/// xi' = T' pi/m, pi' = -T' dV/dx(T(tau), xi), generated by H~ = T' H.
Trajectory integrate_tau(const PotentialSpec& pot, const PhysicalConstants& c, const TimeMap& map,
                         double xi0, double pi0, Interval tau_span, double tol);

/// max over tau samples of |xi(tau) - x(T(tau))|, x from the dense output of
/// traj_t. Throws ValidationError if traj_t does not cover the image of the
/// tau samples.
double trajectory_equivalence(const Trajectory& traj_t, const Trajectory& traj_tau,
                              const TimeMap& map);

}  // namespace timecov
