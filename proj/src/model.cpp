#include "timecov/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace timecov {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw ValidationError(std::string(what) + " must be finite");
}

// log(cosh(u)) without overflow for large |u|.
double log_cosh(double u) {
  const double a = std::abs(u);
  return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
}

}  // namespace

void PhysicalConstants::validate() const {
  if (!(hbar > 0.0) || !std::isfinite(hbar)) throw ValidationError("hbar must be positive and finite");
  if (!(mass > 0.0) || !std::isfinite(mass)) throw ValidationError("mass must be positive and finite");
}

const char* to_string(ClockKind kind) {
  return kind == ClockKind::ConventionalT ? "t" : "tau";
}

// ---------------------------------------------------------------------------
// TimeMap

TimeMap::TimeMap(Family family, Interval domain, double p0, double p1, double p2)
    : family_(family), domain_(domain), p0_(p0), p1_(p1), p2_(p2) {
  require_finite(domain.lo, "time map domain start");
  require_finite(domain.hi, "time map domain end");
  if (!(domain.hi > domain.lo)) throw ValidationError("time map domain must satisfy tau0 < tau1");
}

TimeMap TimeMap::identity(Interval domain) {
  return TimeMap(Family::Identity, domain, 1.0, 0.0, 0.0);
}

TimeMap TimeMap::linear(double alpha, Interval domain) {
  if (!std::isfinite(alpha) || !(alpha > 0.0)) {
    throw ValidationError("time map violates monotonicity dT/dtau > 0: linear alpha = " +
                          fmt_double(alpha) + " must be positive");
  }
  return scaled(1.0 / alpha, domain);
}

TimeMap TimeMap::scaled(double rate, Interval domain) {
  if (!std::isfinite(rate) || !(rate >= kMinTimeMapRate)) {
    throw ValidationError("time map violates monotonicity dT/dtau > 0: rate = " + fmt_double(rate));
  }
  return TimeMap(Family::Linear, domain, rate, 0.0, 0.0);
}

TimeMap TimeMap::sine_perturbed(double amplitude, double frequency, Interval domain) {
  require_finite(amplitude, "sine amplitude");
  require_finite(frequency, "sine frequency");
  TimeMap map(Family::SinePerturbed, domain, amplitude, frequency, 0.0);
  map.validate_monotone(1.0 - std::abs(amplitude * frequency));
  return map;
}

TimeMap TimeMap::smooth_ramp(double final_rate, double center, double width, Interval domain) {
  require_finite(final_rate, "ramp final rate");
  require_finite(center, "ramp center");
  if (!std::isfinite(width) || !(width > 0.0)) throw ValidationError("ramp width must be positive");
  TimeMap map(Family::SmoothRamp, domain, final_rate, center, width);
  map.validate_monotone(std::min(1.0, final_rate));
  return map;
}

void TimeMap::validate_monotone(double analytic_lower_bound) const {
  if (!(analytic_lower_bound >= kMinTimeMapRate)) {
    throw ValidationError("time map violates monotonicity dT/dtau > 0: analytic lower bound of T' is " +
                          fmt_double(analytic_lower_bound));
  }
  double min_rate = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < kMonotoneSamples; ++k) {
    const double s = static_cast<double>(k) / static_cast<double>(kMonotoneSamples - 1);
    const double tau = domain_.lo + s * domain_.length();
    min_rate = std::min(min_rate, eval_unchecked(tau).tprime);
  }
  if (!(min_rate >= kMinTimeMapRate)) {
    throw ValidationError("time map violates monotonicity dT/dtau > 0: sampled min T' = " +
                          fmt_double(min_rate));
  }
}

TimeMap::Value TimeMap::eval_unchecked(double tau) const {
  switch (family_) {
    case Family::Identity:
      return {tau, 1.0};
    case Family::Linear:
      return {p0_ * tau, p0_};
    case Family::SinePerturbed:
      return {tau + p0_ * std::sin(p1_ * tau), 1.0 + p0_ * p1_ * std::cos(p1_ * tau)};
    case Family::SmoothRamp: {
      const double excess = p0_ - 1.0;
      const double u = (tau - p1_) / p2_;
      const double t = tau + 0.5 * excess * (tau + p2_ * (log_cosh(u) - log_cosh(-p1_ / p2_)));
      const double tprime = 1.0 + 0.5 * excess * (1.0 + std::tanh(u));
      return {t, tprime};
    }
  }
  return {tau, 1.0};
}

TimeMap::Value TimeMap::eval(double tau) const {
  if (!domain_.contains(tau)) {
    throw DomainError("tau = " + fmt_double(tau) + " outside time map domain [" +
                      fmt_double(domain_.lo) + ", " + fmt_double(domain_.hi) + "]");
  }
  return eval_unchecked(tau);
}

Interval TimeMap::image() const { return {eval(domain_.lo).t, eval(domain_.hi).t}; }

std::string TimeMap::describe() const {
  switch (family_) {
    case Family::Identity:
      return "identity";
    case Family::Linear:
      return "linear(alpha=" + fmt_double(alpha()) + ")";
    case Family::SinePerturbed:
      return "sine_perturbed(amplitude=" + fmt_double(p0_) + ", frequency=" + fmt_double(p1_) + ")";
    case Family::SmoothRamp:
      return "smooth_ramp(final_rate=" + fmt_double(p0_) + ", center=" + fmt_double(p1_) +
             ", width=" + fmt_double(p2_) + ")";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// PotentialSpec

PotentialSpec::PotentialSpec(Family family, std::vector<double> params)
    : family_(family), params_(std::move(params)) {
  for (double p : params_) require_finite(p, "potential parameter");
}

PotentialSpec PotentialSpec::free() { return PotentialSpec(Family::Free, {}); }

PotentialSpec PotentialSpec::harmonic(double omega) {
  return PotentialSpec(Family::Harmonic, {omega});
}

PotentialSpec PotentialSpec::driven_harmonic(double omega0, double omega_rate) {
  return PotentialSpec(Family::DrivenHarmonic, {omega0, omega_rate});
}

PotentialSpec PotentialSpec::moving_well(double stiffness, double center, double velocity,
                                         double sway, double sway_frequency) {
  if (!(stiffness >= 0.0)) throw ValidationError("moving well stiffness must be non-negative");
  return PotentialSpec(Family::MovingWell, {stiffness, center, velocity, sway, sway_frequency});
}

double PotentialSpec::omega(double t) const {
  switch (family_) {
    case Family::Harmonic:
      return params_[0];
    case Family::DrivenHarmonic:
      return params_[0] + params_[1] * t;
    default:
      return 0.0;
  }
}

double PotentialSpec::well_center(double t) const {
  if (family_ != Family::MovingWell) return 0.0;
  return params_[1] + params_[2] * t + params_[3] * std::sin(params_[4] * t);
}

double PotentialSpec::value(const PhysicalConstants& c, double t, double x) const {
  switch (family_) {
    case Family::Free:
      return 0.0;
    case Family::Harmonic:
    case Family::DrivenHarmonic: {
      const double w = omega(t);
      return 0.5 * c.mass * w * w * x * x;
    }
    case Family::MovingWell: {
      const double d = x - well_center(t);
      return 0.5 * params_[0] * d * d;
    }
  }
  return 0.0;
}

double PotentialSpec::gradient(const PhysicalConstants& c, double t, double x) const {
  switch (family_) {
    case Family::Free:
      return 0.0;
    case Family::Harmonic:
    case Family::DrivenHarmonic: {
      const double w = omega(t);
      return c.mass * w * w * x;
    }
    case Family::MovingWell:
      return params_[0] * (x - well_center(t));
  }
  return 0.0;
}

void PotentialSpec::sample(const PhysicalConstants& c, double t, std::span<const double> xs,
                           std::span<double> out) const {
  for (std::size_t j = 0; j < xs.size(); ++j) out[j] = value(c, t, xs[j]);
}

std::string PotentialSpec::describe() const {
  switch (family_) {
    case Family::Free:
      return "free";
    case Family::Harmonic:
      return "harmonic(omega=" + fmt_double(params_[0]) + ")";
    case Family::DrivenHarmonic:
      return "driven_harmonic(omega0=" + fmt_double(params_[0]) +
             ", omega_rate=" + fmt_double(params_[1]) + ")";
    case Family::MovingWell:
      return "moving_well(stiffness=" + fmt_double(params_[0]) + ")";
  }
  return "?";
}

double eval_potential(const PotentialSpec& spec, const PhysicalConstants& c, double t, double x) {
  if (!std::isfinite(t) || !std::isfinite(x)) throw DomainError("eval_potential: non-finite input");
  return spec.value(c, t, x);
}

// ---------------------------------------------------------------------------
// SpatialGrid / Wavefunction

SpatialGrid::SpatialGrid(double x_min, double x_max, std::size_t n_points)
    : x_min_(x_min), x_max_(x_max), n_(n_points), dx_(0.0) {
  require_finite(x_min, "grid x_min");
  require_finite(x_max, "grid x_max");
  if (n_points < 8) throw ValidationError("grid needs at least 8 points");
  if (!(x_max > x_min)) throw ValidationError("grid requires x_min < x_max");
  dx_ = (x_max - x_min) / static_cast<double>(n_points - 1);
  if (!(dx_ > 0.0)) throw ValidationError("grid spacing underflow");
}

std::vector<double> SpatialGrid::points() const {
  std::vector<double> xs(n_);
  for (std::size_t j = 0; j < n_; ++j) xs[j] = x(j);
  return xs;
}

Wavefunction::Wavefunction(SpatialGrid grid, std::vector<Complex> amplitudes)
    : grid_(std::move(grid)), amps_(std::move(amplitudes)) {
  if (amps_.size() != grid_.size()) throw ValidationError("wavefunction length does not match grid");
  if (!all_finite()) throw ValidationError("wavefunction has non-finite amplitudes");
  if (amps_.front() != Complex{} || amps_.back() != Complex{}) {
    throw ValidationError("wavefunction violates Dirichlet boundary (end amplitudes must be 0)");
  }
}

double Wavefunction::norm() const {
  double s = 0.0;
  for (const auto& a : amps_) s += std::norm(a);
  return std::sqrt(s * grid_.dx());
}

bool Wavefunction::all_finite() const {
  return std::all_of(amps_.begin(), amps_.end(), [](const Complex& a) {
    return std::isfinite(a.real()) && std::isfinite(a.imag());
  });
}

Wavefunction prepare_gaussian(const SpatialGrid& grid, const GaussianParams& g,
                              const PhysicalConstants& c) {
  c.validate();
  require_finite(g.center, "gaussian center");
  require_finite(g.momentum, "gaussian momentum");
  if (!std::isfinite(g.width) || !(g.width > 0.0)) throw ValidationError("gaussian width must be positive");
  const double reach = kGaussianSupportWidths * g.width;
  if (g.center - reach < grid.x_min() || g.center + reach > grid.x_max()) {
    throw ValidationError("gaussian support center +/- 8*width = [" + fmt_double(g.center - reach) +
                          ", " + fmt_double(g.center + reach) + "] leaves the box [" +
                          fmt_double(grid.x_min()) + ", " + fmt_double(grid.x_max()) + "]");
  }

  const std::size_t n = grid.size();
  std::vector<Complex> amps(n);
  for (std::size_t j = 1; j + 1 < n; ++j) {
    const double x = grid.x(j);
    const double d = (x - g.center) / g.width;
    amps[j] = std::exp(-0.5 * d * d) * std::polar(1.0, g.momentum * x / c.hbar);
  }
  double s = 0.0;
  for (const auto& a : amps) s += std::norm(a);
  const double inv = 1.0 / std::sqrt(s * grid.dx());
  for (auto& a : amps) a *= inv;
  return Wavefunction(grid, std::move(amps));
}

}  // namespace timecov
