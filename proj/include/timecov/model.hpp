#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace timecov {

using Complex = std::complex<double>;

// Error taxonomy. Everything derives from std::runtime_error so callers that
// only care about "it failed" can catch one type.
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IntegrationError : NumericalError {
  using NumericalError::NumericalError;
};

struct PhysicalConstants {
  double hbar = 1.0;
  double mass = 1.0;

  void validate() const;
};

enum class ClockKind { ConventionalT, ParameterTau };

const char* to_string(ClockKind kind);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double x) const { return x >= lo && x <= hi; }
  double length() const { return hi - lo; }
};

/// Monotone relabeling of the clock, t = T(tau), on a closed tau-interval.
///
/// Every constructor validates T'(tau) > 0 over the whole domain, so a
/// successfully built map never fails on evaluation inside its domain.
class TimeMap {
 public:
  enum class Family { Identity, Linear, SinePerturbed, SmoothRamp };

  struct Value {
    double t;
    double tprime;
  };

  static TimeMap identity(Interval domain);
  /// t = tau / alpha. A new clock running faster than t for alpha > 1.
  static TimeMap linear(double alpha, Interval domain);
  /// t = rate * tau. Same family as linear() with alpha = 1 / rate, but the
  /// rate is stored as given so that T and T' are computed as rate * tau and
  /// rate without an intermediate reciprocal.
  static TimeMap scaled(double rate, Interval domain);
  /// t = tau + amplitude * sin(frequency * tau).
  static TimeMap sine_perturbed(double amplitude, double frequency, Interval domain);
  /// Clock rate switching smoothly from 1 to `final_rate` around `center`:
  /// T'(tau) = 1 + (final_rate - 1) * (1 + tanh((tau - center) / width)) / 2,
  /// with T(0) = 0.
  static TimeMap smooth_ramp(double final_rate, double center, double width, Interval domain);

  Value eval(double tau) const;
  double t_of(double tau) const { return eval(tau).t; }

  Family family() const { return family_; }
  const Interval& domain() const { return domain_; }
  /// Image of the domain, [T(tau0), T(tau1)].
  Interval image() const;

  double alpha() const { return 1.0 / p0_; }
  double rate() const { return p0_; }
  double amplitude() const { return p0_; }
  double frequency() const { return p1_; }
  double final_rate() const { return p0_; }
  double center() const { return p1_; }
  double width() const { return p2_; }

  std::string describe() const;

 private:
  TimeMap(Family family, Interval domain, double p0, double p1, double p2);
  Value eval_unchecked(double tau) const;
  void validate_monotone(double analytic_lower_bound) const;

  Family family_;
  Interval domain_;
  double p0_;
  double p1_;
  double p2_;
};

/// Minimum T' tolerated anywhere on a map's domain.
inline constexpr double kMinTimeMapRate = 1e-6;
/// Sample count for the dense monotonicity check.
inline constexpr std::size_t kMonotoneSamples = 10001;

/// Time-dependent potential V(t, x) with analytic spatial derivative.
class PotentialSpec {
 public:
  enum class Family { Free, Harmonic, DrivenHarmonic, MovingWell };

  static PotentialSpec free();
  static PotentialSpec harmonic(double omega);
  /// omega(t) = omega0 + omega_rate * t.
  static PotentialSpec driven_harmonic(double omega0, double omega_rate);
  /// V = stiffness/2 * (x - c(t))^2 with
  /// c(t) = center + velocity * t + sway * sin(sway_frequency * t).
  static PotentialSpec moving_well(double stiffness, double center, double velocity, double sway,
                                   double sway_frequency);

  double value(const PhysicalConstants& c, double t, double x) const;
  double gradient(const PhysicalConstants& c, double t, double x) const;

  /// Sample V(t, .) onto `xs`.
  void sample(const PhysicalConstants& c, double t, std::span<const double> xs,
              std::span<double> out) const;

  Family family() const { return family_; }
  double omega(double t) const;
  double well_center(double t) const;
  const std::vector<double>& params() const { return params_; }

  std::string describe() const;

 private:
  PotentialSpec(Family family, std::vector<double> params);

  Family family_;
  std::vector<double> params_;
};

/// eval_timemap / eval_potential spelled as free functions.
inline TimeMap::Value eval_timemap(const TimeMap& map, double tau) { return map.eval(tau); }
double eval_potential(const PotentialSpec& spec, const PhysicalConstants& c, double t, double x);

class SpatialGrid {
 public:
  SpatialGrid(double x_min, double x_max, std::size_t n_points);

  double x_min() const { return x_min_; }
  double x_max() const { return x_max_; }
  std::size_t size() const { return n_; }
  double dx() const { return dx_; }
  double x(std::size_t j) const { return x_min_ + static_cast<double>(j) * dx_; }
  double length() const { return x_max_ - x_min_; }
  std::vector<double> points() const;

  bool operator==(const SpatialGrid& other) const {
    return x_min_ == other.x_min_ && x_max_ == other.x_max_ && n_ == other.n_;
  }

 private:
  double x_min_;
  double x_max_;
  std::size_t n_;
  double dx_;
};

/// Complex amplitudes on a SpatialGrid with zero Dirichlet end points.
class Wavefunction {
 public:
  Wavefunction(SpatialGrid grid, std::vector<Complex> amplitudes);

  const SpatialGrid& grid() const { return grid_; }
  std::span<const Complex> amplitudes() const { return amps_; }
  std::span<Complex> mutable_amplitudes() { return amps_; }
  std::size_t size() const { return amps_.size(); }
  const Complex& operator[](std::size_t j) const { return amps_[j]; }

  /// sqrt(sum |psi_j|^2 dx)
  double norm() const;
  bool all_finite() const;

 private:
  SpatialGrid grid_;
  std::vector<Complex> amps_;
};

struct GaussianParams {
  double center = 0.0;
  double width = 1.0;
  double momentum = 0.0;
};

/// Support of a Gaussian is checked out to this many widths.
inline constexpr double kGaussianSupportWidths = 8.0;

Wavefunction prepare_gaussian(const SpatialGrid& grid, const GaussianParams& g,
                              const PhysicalConstants& c);

struct ClassicalState {
  double q = 0.0;
  /// p = m dx/dt for ConventionalT, pi = m dxi/dtau / T' for ParameterTau.
  double pm = 0.0;
  double clock = 0.0;
  ClockKind clock_kind = ClockKind::ConventionalT;
};

}  // namespace timecov
