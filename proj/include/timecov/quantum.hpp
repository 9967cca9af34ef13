#pragma once

#include <optional>
#include <string>
#include <vector>

#include "timecov/model.hpp"

namespace timecov {

struct PropagatorConfig {
  double dt = 5e-4;
  /// Keep every record_every-th step (the final step is always kept).
  int record_every = 1;
  /// Fraction of the box at each end watched for boundary leakage.
  double edge_guard = 0.1;

  void validate() const;
};

/// Norm drift and edge mass above these mark a record invalid.
inline constexpr double kNormMonitorTolerance = 1e-8;
inline constexpr double kEdgeMassTolerance = 1e-8;

struct Snapshot {
  double clock;
  double t;       ///< conventional time T(clock)
  double tprime;  ///< T'(clock); 1 for t records
  Wavefunction psi;
  double norm;
  /// Expectation of the generator of the record's clock, T' <H(T)>.
  double energy;
  double edge_mass;
};

struct EvolutionRecord {
  ClockKind clock_kind = ClockKind::ConventionalT;
  std::optional<TimeMap> timemap;
  double step = 0.0;
  int record_every = 1;
  std::vector<Snapshot> snapshots;
  double max_norm_deviation = 0.0;
  double max_edge_mass = 0.0;
  bool edge_violation = false;
  bool norm_violation = false;

  bool valid() const { return !edge_violation && !norm_violation; }
};

/// (-hbar^2/2m) D2 psi + V(t, x) psi, second-order Laplacian, Dirichlet ends.
Wavefunction apply_hamiltonian(const Wavefunction& psi, const PotentialSpec& pot,
                               const PhysicalConstants& c, double t);

/// Crank-Nicolson in t with the Hamiltonian at each step's midpoint.
EvolutionRecord propagate_t(const Wavefunction& psi0, const PotentialSpec& pot,
                            const PhysicalConstants& c, Interval t_span,
                            const PropagatorConfig& cfg);

/// Crank-Nicolson in tau with step generator T'(tau_mid) H(T(tau_mid)).
EvolutionRecord propagate_tau(const Wavefunction& phi0, const PotentialSpec& pot,
                              const PhysicalConstants& c, const TimeMap& map, Interval tau_span,
                              const PropagatorConfig& cfg);

/// Evolution under H_alpha(t) = alpha H(alpha t). This is propagate_tau with
/// T(s) = alpha * s; the record's clock is the compressed one.
EvolutionRecord propagate_rescaled(const Wavefunction& psi0, const PotentialSpec& pot,
                                   const PhysicalConstants& c, double alpha, Interval t_span,
                                   const PropagatorConfig& cfg);

/// |<a|b>|, insensitive to a global phase on either argument.
double fidelity(const Wavefunction& a, const Wavefunction& b);
/// min over theta of ||a - e^{i theta} b||. For unit vectors this equals
/// sqrt(2 (1 - fidelity)) but is computed without cancellation.
double phase_aligned_distance(const Wavefunction& a, const Wavefunction& b);

/// <psi|H(t)|psi>; the imaginary part vanishes for a symmetric discrete H.
Complex hamiltonian_matrix_element(const Wavefunction& psi, const PotentialSpec& pot,
                                   const PhysicalConstants& c, double t);
double expectation_energy(const Wavefunction& psi, const PotentialSpec& pot,
                          const PhysicalConstants& c, double t);
double expectation_position(const Wavefunction& psi);
double position_variance(const Wavefunction& psi);
/// Probability in the outer `guard_fraction` of the box at each end.
double edge_mass(const Wavefunction& psi, double guard_fraction);

/// Normalized max over interior snapshot triples of
/// |i hbar (psi_{n+1} - psi_{n-1}) / (2 dt) - H_eff psi_n|,
/// H_eff = T' H(T) for tau records. Needs record_every = 1.
double residual_check(const EvolutionRecord& record, const PotentialSpec& pot,
                      const PhysicalConstants& c);

struct CovarianceSetup {
  PhysicalConstants constants;
  SpatialGrid grid{-12.0, 12.0, 512};
  PotentialSpec potential = PotentialSpec::free();
  TimeMap timemap = TimeMap::identity({0.0, 1.0});
  GaussianParams initial;
  Interval tau_span{0.0, 1.0};
  /// Stepping of the tau run; its snapshots are the comparison instants.
  PropagatorConfig tau_config;
  /// Maximum step of the reference t run.
  double reference_dt = 5e-4;
};

struct CovarianceSample {
  double tau;
  double t;
  double tprime;
  double fidelity;
  double distance;
  double norm_psi;
  double norm_phi;
  double energy_t;
  double energy_tau;
  double energy_transform_residual;
};

struct CovarianceReport {
  std::vector<CovarianceSample> samples;
  double min_fidelity = 1.0;
  double max_distance = 0.0;
  double max_energy_residual = 0.0;
  double max_norm_deviation = 0.0;
  bool flagged = false;
  std::string flag_reason;

  void summarize();
};

/// Runs the tau evolution and a t reference from the same initial state and
/// compares them at t = T(tau_k) for every tau snapshot. The reference lands
/// exactly on each T(tau_k) by shortening its last substep.
CovarianceReport covariance_experiment(const CovarianceSetup& setup,
                                       EvolutionRecord* tau_record = nullptr);

}  // namespace timecov
