#include "timecov/quantum.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "timecov/kernels.hpp"

namespace timecov {

namespace kn = kernels::parallel;

void PropagatorConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("propagator dt must be positive");
  if (record_every < 1) throw ValidationError("record_every must be >= 1");
  if (!(edge_guard > 0.0 && edge_guard < 0.5)) throw ValidationError("edge_guard must lie in (0, 0.5)");
}

namespace {

void require_same_grid(const Wavefunction& a, const Wavefunction& b) {
  if (!(a.grid() == b.grid())) throw ValidationError("wavefunctions live on different grids");
}

std::size_t guard_points(const SpatialGrid& g, double fraction) {
  const double limit = fraction * g.length();
  std::size_t k = 0;
  while (k < g.size() && static_cast<double>(k) * g.dx() < limit) ++k;
  return k;
}

// Number of steps covering `length` with steps of at most dt; a remainder
// below 1e-9 dt is absorbed rather than producing a sliver step.
std::size_t steps_for(double length, double dt) {
  const double ratio = length / dt;
  const auto n = static_cast<std::size_t>(std::ceil(ratio - 1e-9));
  return std::max<std::size_t>(n, 1);
}

bool is_static(const PotentialSpec& pot) {
  return pot.family() == PotentialSpec::Family::Free ||
         pot.family() == PotentialSpec::Family::Harmonic;
}

// Crank-Nicolson stepper in a generic clock s: physical time T(s), generator
// T'(s) H(T(s)). Without a map the clock is t itself and the scale is 1.0.
class CrankNicolsonEngine {
 public:
  CrankNicolsonEngine(const SpatialGrid& grid, const PotentialSpec& pot, const PhysicalConstants& c,
                      const TimeMap* map)
      : pot_(pot),
        c_(c),
        map_(map),
        xs_(grid.points()),
        v_(grid.size()),
        kinetic_(kernels::kinetic_coefficient(c, grid.dx())),
        static_(is_static(pot)) {
    if (static_) sample_potential(0.0);
    ws_.resize(grid.size());
  }

  TimeMap::Value at(double clock) const { return map_ ? map_->eval(clock) : TimeMap::Value{clock, 1.0}; }

  void step(std::span<Complex> psi, double clock, double h) {
    const auto [t_mid, scale] = at(clock + 0.5 * h);
    if (!static_) sample_potential(t_mid);
    const kernels::Stencil stencil{kinetic_, v_, scale};
    kn::crank_nicolson_step(psi, stencil, h / (2.0 * c_.hbar), ws_);
  }

 private:
  void sample_potential(double t) {
    const auto n = static_cast<std::ptrdiff_t>(xs_.size());
#pragma omp parallel for schedule(static) if (xs_.size() >= kernels::kParallelThreshold)
    for (std::ptrdiff_t j = 0; j < n; ++j) {
      const auto k = static_cast<std::size_t>(j);
      v_[k] = pot_.value(c_, t, xs_[k]);
    }
  }

  const PotentialSpec& pot_;
  const PhysicalConstants& c_;
  const TimeMap* map_;
  std::vector<double> xs_;
  std::vector<double> v_;
  double kinetic_;
  bool static_;
  kernels::Workspace ws_;
};

Snapshot make_snapshot(const CrankNicolsonEngine& engine, const PotentialSpec& pot,
                       const PhysicalConstants& c, double clock, std::span<const Complex> amps,
                       const SpatialGrid& grid, double guard_fraction) {
  Wavefunction psi(grid, std::vector<Complex>(amps.begin(), amps.end()));
  const auto [t, tprime] = engine.at(clock);
  const double norm = std::sqrt(kn::norm_squared(amps, grid.dx()));
  const double energy = tprime * expectation_energy(psi, pot, c, t);
  const double edge = edge_mass(psi, guard_fraction);
  return {clock, t, tprime, std::move(psi), norm, energy, edge};
}

void monitor(EvolutionRecord& rec, const Snapshot& s, double norm0) {
  rec.max_norm_deviation = std::max(rec.max_norm_deviation, std::abs(s.norm - norm0));
  rec.max_edge_mass = std::max(rec.max_edge_mass, s.edge_mass);
  if (std::abs(s.norm - norm0) > kNormMonitorTolerance) rec.norm_violation = true;
  if (s.edge_mass > kEdgeMassTolerance) rec.edge_violation = true;
}

EvolutionRecord propagate_impl(const Wavefunction& psi0, const PotentialSpec& pot,
                               const PhysicalConstants& c, const TimeMap* map, Interval span,
                               const PropagatorConfig& cfg) {
  c.validate();
  cfg.validate();
  if (!(span.hi > span.lo) || !std::isfinite(span.lo) || !std::isfinite(span.hi)) {
    throw ValidationError("propagation span must be a nonempty finite interval");
  }
  if (map && (!map->domain().contains(span.lo) || !map->domain().contains(span.hi))) {
    throw DomainError("tau span lies outside the time map domain");
  }
  const double norm0 = psi0.norm();
  if (std::abs(norm0 - 1.0) > 1e-10) throw ValidationError("initial state must be normalized");

  EvolutionRecord rec;
  rec.clock_kind = map ? ClockKind::ParameterTau : ClockKind::ConventionalT;
  if (map) rec.timemap = *map;
  rec.step = cfg.dt;
  rec.record_every = cfg.record_every;

  const SpatialGrid& grid = psi0.grid();
  CrankNicolsonEngine engine(grid, pot, c, map);
  std::vector<Complex> psi(psi0.amplitudes().begin(), psi0.amplitudes().end());

  auto record = [&](double clock) {
    rec.snapshots.push_back(make_snapshot(engine, pot, c, clock, psi, grid, cfg.edge_guard));
    monitor(rec, rec.snapshots.back(), norm0);
  };

  record(span.lo);
  const std::size_t n_steps = steps_for(span.length(), cfg.dt);
  const auto stride = static_cast<std::size_t>(cfg.record_every);
  for (std::size_t n = 0; n < n_steps; ++n) {
    const double clock = span.lo + static_cast<double>(n) * cfg.dt;
    const bool last = n + 1 == n_steps;
    const double h = last ? span.hi - clock : cfg.dt;
    engine.step(psi, clock, h);
    if (last) {
      record(span.hi);
    } else if ((n + 1) % stride == 0) {
      record(span.lo + static_cast<double>(n + 1) * cfg.dt);
    }
  }
  return rec;
}

}  // namespace

Wavefunction apply_hamiltonian(const Wavefunction& psi, const PotentialSpec& pot,
                               const PhysicalConstants& c, double t) {
  if (!psi.all_finite()) throw ValidationError("apply_hamiltonian: non-finite state");
  const SpatialGrid& grid = psi.grid();
  std::vector<double> v(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) v[j] = pot.value(c, t, grid.x(j));
  std::vector<Complex> out(grid.size());
  kn::apply_hamiltonian(psi.amplitudes(), {kernels::kinetic_coefficient(c, grid.dx()), v, 1.0}, out);
  return Wavefunction(grid, std::move(out));
}

EvolutionRecord propagate_t(const Wavefunction& psi0, const PotentialSpec& pot,
                            const PhysicalConstants& c, Interval t_span,
                            const PropagatorConfig& cfg) {
  return propagate_impl(psi0, pot, c, nullptr, t_span, cfg);
}

EvolutionRecord propagate_tau(const Wavefunction& phi0, const PotentialSpec& pot,
                              const PhysicalConstants& c, const TimeMap& map, Interval tau_span,
                              const PropagatorConfig& cfg) {
  return propagate_impl(phi0, pot, c, &map, tau_span, cfg);
}

EvolutionRecord propagate_rescaled(const Wavefunction& psi0, const PotentialSpec& pot,
                                   const PhysicalConstants& c, double alpha, Interval t_span,
                                   const PropagatorConfig& cfg) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ValidationError("rescaling alpha must be positive");
  return propagate_tau(psi0, pot, c, TimeMap::scaled(alpha, t_span), t_span, cfg);
}

double fidelity(const Wavefunction& a, const Wavefunction& b) {
  require_same_grid(a, b);
  return std::abs(kn::inner_product(a.amplitudes(), b.amplitudes(), a.grid().dx()));
}

double phase_aligned_distance(const Wavefunction& a, const Wavefunction& b) {
  require_same_grid(a, b);
  const Complex z = kn::inner_product(a.amplitudes(), b.amplitudes(), a.grid().dx());
  const Complex phase = std::abs(z) > 0.0 ? std::conj(z) / std::abs(z) : Complex(1.0, 0.0);
  std::vector<Complex> diff(a.size());
  for (std::size_t j = 0; j < a.size(); ++j) diff[j] = a[j] - phase * b[j];
  return std::sqrt(kn::norm_squared(diff, a.grid().dx()));
}

Complex hamiltonian_matrix_element(const Wavefunction& psi, const PotentialSpec& pot,
                                   const PhysicalConstants& c, double t) {
  const Wavefunction hpsi = apply_hamiltonian(psi, pot, c, t);
  return kn::inner_product(psi.amplitudes(), hpsi.amplitudes(), psi.grid().dx());
}

double expectation_energy(const Wavefunction& psi, const PotentialSpec& pot,
                          const PhysicalConstants& c, double t) {
  return hamiltonian_matrix_element(psi, pot, c, t).real();
}

double expectation_position(const Wavefunction& psi) {
  const auto xs = psi.grid().points();
  return kn::position_moment(psi.amplitudes(), xs, 1, psi.grid().dx());
}

double position_variance(const Wavefunction& psi) {
  const auto xs = psi.grid().points();
  const double dx = psi.grid().dx();
  const double m0 = kn::norm_squared(psi.amplitudes(), dx);
  const double m1 = kn::position_moment(psi.amplitudes(), xs, 1, dx) / m0;
  const double m2 = kn::position_moment(psi.amplitudes(), xs, 2, dx) / m0;
  return m2 - m1 * m1;
}

double edge_mass(const Wavefunction& psi, double guard_fraction) {
  return kn::edge_mass(psi.amplitudes(), guard_points(psi.grid(), guard_fraction), psi.grid().dx());
}

double residual_check(const EvolutionRecord& record, const PotentialSpec& pot,
                      const PhysicalConstants& c) {
  if (record.record_every != 1 || record.snapshots.size() < 3) {
    throw ValidationError("residual_check needs at least 3 consecutive snapshots (record_every = 1)");
  }
  const auto& snaps = record.snapshots;
  const double h = record.step;
  double worst = 0.0;
  double scale = 0.0;
  std::size_t triples = 0;
  for (std::size_t n = 1; n + 1 < snaps.size(); ++n) {
    const double h_back = snaps[n].clock - snaps[n - 1].clock;
    const double h_fwd = snaps[n + 1].clock - snaps[n].clock;
    // Skip the shortened final step.
    if (std::abs(h_back - h) > 1e-9 * h || std::abs(h_fwd - h) > 1e-9 * h) continue;
    const Wavefunction hpsi = apply_hamiltonian(snaps[n].psi, pot, c, snaps[n].t);
    const double tprime = snaps[n].tprime;
    for (std::size_t j = 0; j < hpsi.size(); ++j) {
      const Complex dpsi = (snaps[n + 1].psi[j] - snaps[n - 1].psi[j]) / (2.0 * h);
      const Complex lhs = Complex(0.0, c.hbar) * dpsi;
      const Complex rhs = tprime * hpsi[j];
      worst = std::max(worst, std::abs(lhs - rhs));
      scale = std::max(scale, std::abs(rhs));
    }
    ++triples;
  }
  if (triples == 0) throw ValidationError("residual_check found no uniformly spaced snapshot triple");
  if (scale == 0.0) return worst;
  return worst / scale;
}

void CovarianceReport::summarize() {
  min_fidelity = 1.0;
  max_distance = 0.0;
  max_energy_residual = 0.0;
  max_norm_deviation = 0.0;
  for (const auto& s : samples) {
    min_fidelity = std::min(min_fidelity, s.fidelity);
    max_distance = std::max(max_distance, s.distance);
    max_energy_residual = std::max(max_energy_residual, s.energy_transform_residual);
    max_norm_deviation = std::max({max_norm_deviation, std::abs(s.norm_psi - 1.0), std::abs(s.norm_phi - 1.0)});
  }
}

CovarianceReport covariance_experiment(const CovarianceSetup& setup, EvolutionRecord* tau_record) {
  setup.constants.validate();
  setup.tau_config.validate();
  if (!(setup.reference_dt > 0.0)) throw ValidationError("reference dt must be positive");
  const TimeMap& map = setup.timemap;
  const PhysicalConstants& c = setup.constants;

  const Wavefunction psi0 = prepare_gaussian(setup.grid, setup.initial, c);
  const EvolutionRecord tau_rec =
      propagate_tau(psi0, setup.potential, c, map, setup.tau_span, setup.tau_config);

  CovarianceReport report;
  if (!tau_rec.valid()) {
    report.flagged = true;
    report.flag_reason = tau_rec.edge_violation ? "tau run: edge-guard violation" : "tau run: norm drift";
  }

  // Reference t run, advanced from sample to sample with exact landing.
  CrankNicolsonEngine engine(setup.grid, setup.potential, c, nullptr);
  std::vector<Complex> psi(psi0.amplitudes().begin(), psi0.amplitudes().end());
  double t_now = map.t_of(setup.tau_span.lo);

  for (const Snapshot& snap : tau_rec.snapshots) {
    const double t_target = snap.t;
    if (t_target < t_now) throw ValidationError("reference clock would run backwards");
    if (t_target > t_now) {
      const std::size_t n = steps_for(t_target - t_now, setup.reference_dt);
      for (std::size_t k = 0; k < n; ++k) {
        const double clock = t_now + static_cast<double>(k) * setup.reference_dt;
        const double h = k + 1 == n ? t_target - clock : setup.reference_dt;
        engine.step(psi, clock, h);
      }
      t_now = t_target;
    }
    const Wavefunction ref(setup.grid, psi);
    const double energy_t = expectation_energy(ref, setup.potential, c, t_target);
    CovarianceSample s{};
    s.tau = snap.clock;
    s.t = t_target;
    s.tprime = snap.tprime;
    s.fidelity = fidelity(ref, snap.psi);
    s.distance = phase_aligned_distance(ref, snap.psi);
    s.norm_psi = ref.norm();
    s.norm_phi = snap.norm;
    s.energy_t = energy_t;
    s.energy_tau = snap.energy;
    s.energy_transform_residual = std::abs(snap.energy - snap.tprime * energy_t);
    report.samples.push_back(s);

    if (edge_mass(ref, setup.tau_config.edge_guard) > kEdgeMassTolerance && !report.flagged) {
      report.flagged = true;
      report.flag_reason = "reference run: edge-guard violation";
    }
    if (std::abs(s.norm_psi - 1.0) > kNormMonitorTolerance && !report.flagged) {
      report.flagged = true;
      report.flag_reason = "reference run: norm drift";
    }
  }
  report.summarize();
  if (tau_record) *tau_record = tau_rec;
  return report;
}

}  // namespace timecov
