#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "timecov/scenario.hpp"

namespace timecov {

enum class RunStatus { Pass, Fail, Flagged };

const char* to_string(RunStatus status);

struct Metric {
  std::string name;
  double value = 0.0;
  /// Acceptance band; a metric without bounds is informational.
  std::optional<double> lower;
  std::optional<double> upper;

  bool headline() const { return lower || upper; }
  bool within() const;
};

struct RunSummary {
  std::string scenario;
  ScenarioKind kind = ScenarioKind::QuantumCovariance;
  RunStatus status = RunStatus::Fail;
  std::vector<Metric> metrics;
  std::string tolerance_profile = "baseline";
  Tolerances tolerances;
  double wall_seconds = 0.0;
  std::string message;
  std::vector<std::filesystem::path> artifacts;

  const Metric* metric(const std::string& name) const;
};

struct RunOptions {
  std::filesystem::path out_dir = "out";
  /// Overrides the scenario's declared formats when non-empty.
  std::vector<std::string> formats;
  std::string tolerance_profile = "baseline";
  /// Skip artifact files; the summary is still computed.
  bool write_artifacts = true;
};

RunSummary run_scenario(const Scenario& s, const RunOptions& opts = {});

inline const std::vector<double> kDefaultDtSweep = {4e-3, 2e-3, 1e-3, 5e-4};
inline const std::vector<double> kDefaultTolSweep = {1e-7, 1e-8, 1e-9, 1e-10};


/// Turns a single-run scenario into a convergence sweep over dt (quantum)
/// or tol (classical). A sweep scenario is returned unchanged unless
/// `values` is given. Comparison instants are kept on a common tau lattice.
Scenario as_sweep(const Scenario& s, std::vector<double> values = {});

/// Slope of the least-squares line through (log h, log err).
double estimate_order(const std::vector<double>& h, const std::vector<double>& err);

/// 0 all Pass, 1 any Fail, 3 some Flagged and none Failed.
int exit_code(const std::vector<RunSummary>& summaries);

std::string summary_json(const RunSummary& summary);

}  // namespace timecov
