#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "timecov/model.hpp"
#include "timecov/quantum.hpp"

namespace timecov {

inline constexpr int kScenarioSchemaVersion = 1;

enum class ScenarioKind { QuantumCovariance, ClassicalEquivalence, ConvergenceSweep };
enum class SweepParameter { Dt, Tol };

const char* to_string(ScenarioKind kind);

struct Tolerances {
  double fidelity = 1e-5;          ///< bound on 1 - min fidelity
  double energy_residual = 1e-5;   ///< bound on |<H~> - T'<H>|
  double trajectory_error = 1e-5;  ///< bound on max |xi(tau) - x(T(tau))|
  double order_min = 1.8;
  double order_max = 2.2;
};

/// Named overrides applied on top of a scenario's declared tolerances.
/// "baseline" keeps them; "strict" pins every bound to 1e-14.
Tolerances apply_tolerance_profile(const Tolerances& declared, const std::string& profile);
bool is_known_tolerance_profile(const std::string& profile);

/// Default slope band of log(error) against log(tol) for the adaptive integrator.
inline constexpr Interval kClassicalTolOrderBand{0.7, 1.3};

struct ClassicalInitial {
  double x0 = 0.0;
  double p0 = 0.0;
};

struct SweepSpec {
  SweepParameter parameter = SweepParameter::Dt;
  ScenarioKind experiment = ScenarioKind::QuantumCovariance;
  std::vector<double> values;
};

struct Scenario {
  std::string name;
  std::string description;
  ScenarioKind kind = ScenarioKind::QuantumCovariance;
  PhysicalConstants constants;
  std::optional<SpatialGrid> grid;
  PotentialSpec potential = PotentialSpec::free();
  TimeMap timemap = TimeMap::identity({0.0, 1.0});
  Interval tau_span{0.0, 1.0};
  Interval t_span{0.0, 1.0};  ///< image of tau_span under the map
  GaussianParams gaussian;
  ClassicalInitial classical;
  PropagatorConfig propagator;
  /// Spacing of comparison instants in tau; set for dt sweeps.
  std::optional<double> record_interval;
  double reference_dt = 5e-4;
  double tol = 1e-9;
  std::optional<SweepSpec> sweep;
  Tolerances tolerances;
  std::string output_directory;
  std::vector<std::string> formats;

  /// The experiment that individual runs perform (sweeps delegate).
  ScenarioKind experiment() const { return sweep ? sweep->experiment : kind; }
  CovarianceSetup covariance_setup() const;
};

/// Thrown for malformed files; the message names file, section and key.
struct ScenarioError : ValidationError {
  using ValidationError::ValidationError;
};

Scenario parse_scenario(const std::filesystem::path& path);
Scenario parse_scenario_text(const std::string& text, const std::string& origin = "<text>");

}  // namespace timecov
