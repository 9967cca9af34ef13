#include "timecov/classical.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

namespace timecov {

namespace {

void require_positive_rate(double tprime) {
  if (!(tprime > 0.0)) {
    throw DomainError("homogeneous Lagrangian needs T' > 0, got T' = " + std::to_string(tprime));
  }
}

}  // namespace

double lagrangian_t(const PotentialSpec& pot, const PhysicalConstants& c, double t, double x,
                    double xdot) {
  return 0.5 * c.mass * xdot * xdot - pot.value(c, t, x);
}

double hamiltonian_t(const PotentialSpec& pot, const PhysicalConstants& c, double t, double x,
                     double p) {
  return p * p / (2.0 * c.mass) + pot.value(c, t, x);
}

double homogeneous_lagrangian(const PotentialSpec& pot, const PhysicalConstants& c,
                              const LagrangianPoint& pt) {
  require_positive_rate(pt.tprime);
  return c.mass * pt.xiprime * pt.xiprime / (2.0 * pt.tprime) - pt.tprime * pot.value(c, pt.T, pt.xi);
}

TauMomenta momenta_tau(const PotentialSpec& pot, const PhysicalConstants& c,
                       const LagrangianPoint& pt) {
  require_positive_rate(pt.tprime);
  const double pi = c.mass * pt.xiprime / pt.tprime;
  const double pi_T =
      -c.mass * pt.xiprime * pt.xiprime / (2.0 * pt.tprime * pt.tprime) - pot.value(c, pt.T, pt.xi);
  return {pi, pi_T};
}

double hamiltonian_tau(const PotentialSpec& pot, const PhysicalConstants& c, const TimeMap& map,
                       double tau, double xi, double pi) {
  const auto [t, tprime] = map.eval(tau);
  return tprime * hamiltonian_t(pot, c, t, xi, pi);
}

double check_euler_homogeneity(const PotentialSpec& pot, const PhysicalConstants& c,
                               const LagrangianPoint& pt, double h) {
  require_positive_rate(pt.tprime);
  if (!(h > 0.0) || !(pt.tprime - h > 0.0)) {
    throw DomainError("finite-difference step must keep T' - h > 0");
  }
  auto at = [&](double tprime, double xiprime) {
    return homogeneous_lagrangian(pot, c, {pt.T, pt.xi, tprime, xiprime});
  };
  const double d_tprime = (at(pt.tprime + h, pt.xiprime) - at(pt.tprime - h, pt.xiprime)) / (2.0 * h);
  const double d_xiprime = (at(pt.tprime, pt.xiprime + h) - at(pt.tprime, pt.xiprime - h)) / (2.0 * h);
  return pt.tprime * d_tprime + pt.xiprime * d_xiprime - at(pt.tprime, pt.xiprime);
}

double check_constraint(const PotentialSpec& pot, const PhysicalConstants& c, const TimeMap& map,
                        double tau, double xi, double xiprime) {
  const auto [t, tprime] = map.eval(tau);
  const auto [pi, pi_T] = momenta_tau(pot, c, {t, xi, tprime, xiprime});
  return tprime * pi_T + hamiltonian_tau(pot, c, map, tau, xi, pi);
}

// ---------------------------------------------------------------------------
// Trajectory

Trajectory::Trajectory(ClockKind kind, std::optional<TimeMap> map)
    : kind_(kind), map_(std::move(map)) {
  if ((kind_ == ClockKind::ParameterTau) != map_.has_value()) {
    throw ValidationError("a trajectory carries a time map iff it is parametrized by tau");
  }
}

double Trajectory::t_equivalent(std::size_t i) const {
  const double clock = samples_.at(i).clock;
  return map_ ? map_->t_of(clock) : clock;
}

ClassicalState Trajectory::state(std::size_t i) const {
  const auto& s = samples_.at(i);
  return {s.q, s.pm, s.clock, kind_};
}

Interval Trajectory::coverage() const {
  if (samples_.empty()) return {0.0, 0.0};
  return {samples_.front().clock, samples_.back().clock};
}

void Trajectory::push_start(const Sample& s) {
  samples_.clear();
  segments_.clear();
  samples_.push_back(s);
}

void Trajectory::push_step(const Sample& end, const Segment& seg) {
  if (!(end.clock > samples_.back().clock)) {
    throw IntegrationError("trajectory clock values must increase strictly");
  }
  samples_.push_back(end);
  segments_.push_back(seg);
}

Trajectory::Sample Trajectory::interpolate(double clock) const {
  const Interval cov = coverage();
  if (samples_.size() < 2 || clock < cov.lo || clock > cov.hi) {
    throw ValidationError("clock " + std::to_string(clock) + " outside trajectory coverage");
  }
  // Segment k spans samples k and k+1.
  auto it = std::upper_bound(samples_.begin(), samples_.end(), clock,
                             [](double v, const Sample& s) { return v < s.clock; });
  std::size_t k = static_cast<std::size_t>(std::distance(samples_.begin(), it));
  k = std::clamp<std::size_t>(k, 1, segments_.size()) - 1;
  const Segment& seg = segments_[k];
  const double theta = (clock - seg.clock0) / seg.step;
  const double theta1 = 1.0 - theta;
  double y[2];
  for (int i = 0; i < 2; ++i) {
    const auto r = [&](int m) { return seg.coeff[m][i]; };
    y[i] = r(0) + theta * (r(1) + theta1 * (r(2) + theta * (r(3) + theta1 * r(4))));
  }
  return {clock, y[0], y[1]};
}

// ---------------------------------------------------------------------------
// Dormand-Prince 5(4) with Hairer's dense output.

namespace {

constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

using State = std::array<double, 2>;

// Right-hand side in a generic clock s: the physical time is T(s) and the
// generator is scale(s) * H, scale = T'(s). For the t clock, T(s) = s and
// scale = 1 and the products by 1.0 are exact.
struct ClockedHamiltonFlow {
  const PotentialSpec& pot;
  const PhysicalConstants& c;
  const TimeMap* map;  // null for the t clock
  double clock_end;

  State operator()(double s, const State& y) const {
    double t = s;
    double scale = 1.0;
    if (map) {
      const auto v = map->eval(std::min(s, clock_end));
      t = v.t;
      scale = v.tprime;
    }
    return {scale * (y[1] / c.mass), -scale * pot.gradient(c, t, y[0])};
  }
};

State axpy(const State& y, double h, std::initializer_list<std::pair<double, const State*>> terms) {
  State out = y;
  for (int i = 0; i < 2; ++i) {
    double acc = 0.0;
    for (const auto& [a, k] : terms) acc += a * (*k)[i];
    out[i] = y[i] + h * acc;
  }
  return out;
}

Trajectory integrate(const ClockedHamiltonFlow& f, Trajectory traj, double q0, double pm0,
                     Interval span, double tol) {
  if (!(span.hi > span.lo) || !std::isfinite(span.lo) || !std::isfinite(span.hi)) {
    throw ValidationError("integration span must be a nonempty finite interval");
  }
  if (!(tol > 0.0)) throw ValidationError("integration tolerance must be positive");
  if (!std::isfinite(q0) || !std::isfinite(pm0)) throw ValidationError("initial state must be finite");

  constexpr std::size_t kMaxSteps = 10'000'000;
  State y{q0, pm0};
  double s = span.lo;
  traj.push_start({s, y[0], y[1]});

  auto error_scale = [tol](double a, double b) { return tol + tol * std::max(std::abs(a), std::abs(b)); };

  State k1 = f(s, y);
  // Initial step guess (Hairer & Wanner, simplified).
  double h;
  {
    const double d0 = std::hypot(y[0] / error_scale(y[0], y[0]), y[1] / error_scale(y[1], y[1])) / std::sqrt(2.0);
    const double d1n = std::hypot(k1[0] / error_scale(y[0], y[0]), k1[1] / error_scale(y[1], y[1])) / std::sqrt(2.0);
    h = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
    h = std::min(h, span.length());
  }

  for (std::size_t n = 0; s < span.hi; ++n) {
    if (n > kMaxSteps) throw IntegrationError("integration exceeded the maximum step count");
    const bool last = s + h >= span.hi;
    if (last) h = span.hi - s;
    if (h <= 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(s))) {
      throw IntegrationError("step size underflow at clock " + std::to_string(s));
    }

    const State k2 = f(s + c2 * h, axpy(y, h, {{a21, &k1}}));
    const State k3 = f(s + c3 * h, axpy(y, h, {{a31, &k1}, {a32, &k2}}));
    const State k4 = f(s + c4 * h, axpy(y, h, {{a41, &k1}, {a42, &k2}, {a43, &k3}}));
    const State k5 = f(s + c5 * h, axpy(y, h, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
    const double s_next = last ? span.hi : s + h;
    const State k6 =
        f(s_next, axpy(y, h, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
    const State y_new =
        axpy(y, h, {{a71, &k1}, {a73, &k3}, {a74, &k4}, {a75, &k5}, {a76, &k6}});
    const State k7 = f(s_next, y_new);

    double err2 = 0.0;
    for (int i = 0; i < 2; ++i) {
      const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double r = e / error_scale(y[i], y_new[i]);
      err2 += r * r;
    }
    const double err = std::sqrt(err2 / 2.0);
    if (!std::isfinite(err)) throw IntegrationError("non-finite error estimate");

    if (err <= 1.0) {
      Trajectory::Segment seg{s, h, {}};
      for (int i = 0; i < 2; ++i) {
        const double dy = y_new[i] - y[i];
        const double bspl = h * k1[i] - dy;
        seg.coeff[0][i] = y[i];
        seg.coeff[1][i] = dy;
        seg.coeff[2][i] = bspl;
        seg.coeff[3][i] = dy - h * k7[i] - bspl;
        seg.coeff[4][i] =
            h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
      }
      s = s_next;
      y = y_new;
      k1 = k7;
      traj.push_step({s, y[0], y[1]}, seg);
      const double fac = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
      h *= fac;
    } else {
      h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
    }
  }
  return traj;
}

}  // namespace

Trajectory integrate_t(const PotentialSpec& pot, const PhysicalConstants& c, double x0, double p0,
                       Interval t_span, double tol) {
  c.validate();
  const ClockedHamiltonFlow flow{pot, c, nullptr, t_span.hi};
  return integrate(flow, Trajectory(ClockKind::ConventionalT, std::nullopt), x0, p0, t_span, tol);
}

Trajectory integrate_tau(const PotentialSpec& pot, const PhysicalConstants& c, const TimeMap& map,
                         double xi0, double pi0, Interval tau_span, double tol) {
  c.validate();
  if (!map.domain().contains(tau_span.lo) || !map.domain().contains(tau_span.hi)) {
    throw DomainError("tau span lies outside the time map domain");
  }
  const ClockedHamiltonFlow flow{pot, c, &map, tau_span.hi};
  return integrate(flow, Trajectory(ClockKind::ParameterTau, map), xi0, pi0, tau_span, tol);
}

double trajectory_equivalence(const Trajectory& traj_t, const Trajectory& traj_tau,
                              const TimeMap& map) {
  if (traj_t.clock_kind() != ClockKind::ConventionalT || traj_tau.clock_kind() != ClockKind::ParameterTau) {
    throw ValidationError("trajectory_equivalence expects a t trajectory and a tau trajectory");
  }
  const Interval cov = traj_t.coverage();
  const double slack = 1e-12 * std::max(1.0, std::max(std::abs(cov.lo), std::abs(cov.hi)));
  double worst = 0.0;
  for (const auto& s : traj_tau.samples()) {
    double t = map.t_of(s.clock);
    if (t < cov.lo - slack || t > cov.hi + slack) {
      throw ValidationError("t trajectory does not cover T(tau) = " + std::to_string(t));
    }
    t = std::clamp(t, cov.lo, cov.hi);
    worst = std::max(worst, std::abs(s.q - traj_t.interpolate(t).q));
  }
  return worst;
}

}  // namespace timecov
