#include "timecov/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "json.hpp"
#include "timecov/classical.hpp"
#include "timecov/report.hpp"

namespace timecov {

const char* to_string(RunStatus status) {
  switch (status) {
    case RunStatus::Pass:
      return "Pass";
    case RunStatus::Fail:
      return "Fail";
    case RunStatus::Flagged:
      return "Flagged";
  }
  return "?";
}

bool Metric::within() const {
  if (!std::isfinite(value)) return false;
  if (lower && value < *lower) return false;
  if (upper && value > *upper) return false;
  return true;
}

const Metric* RunSummary::metric(const std::string& name) const {
  for (const auto& m : metrics) {
    if (m.name == name) return &m;
  }
  return nullptr;
}

double estimate_order(const std::vector<double>& h, const std::vector<double>& err) {
  if (h.size() != err.size() || h.size() < 2) throw ValidationError("order estimate needs two or more points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (!(h[i] > 0.0) || !(err[i] > 0.0)) throw NumericalError("order estimate needs positive steps and errors");
    const double x = std::log(h[i]), y = std::log(err[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double den = n * sxx - sx * sx;
  if (den == 0.0) throw ValidationError("order estimate needs distinct steps");
  return (n * sxy - sx * sy) / den;
}

int exit_code(const std::vector<RunSummary>& summaries) {
  bool flagged = false;
  for (const auto& s : summaries) {
    if (s.status == RunStatus::Fail) return 1;
    if (s.status == RunStatus::Flagged) flagged = true;
  }
  return flagged ? 3 : 0;
}

namespace {

using nlohmann::json;

struct Emitter {
  std::filesystem::path dir;
  bool csv = false;
  bool json = false;
  bool enabled = true;
  std::vector<std::filesystem::path>* artifacts;

  template <class T>
  void report(const T& value, const std::string& stem) {
    if (!enabled) return;
    if (csv) put(value, ReportFormat::Csv, stem + ".csv");
    if (json) put(value, ReportFormat::Json, stem + ".json");
  }
  template <class T>
  void put(const T& value, ReportFormat f, const std::string& file) {
    emit_report(value, f, dir / file);
    artifacts->push_back(dir / file);
  }
  void text(const std::string& file, const std::string& content) {
    if (!enabled) return;
    write_text_file(dir / file, content);
    artifacts->push_back(dir / file);
  }
};

Metric bounded_above(std::string name, double value, double upper) {
  return Metric{std::move(name), value, std::nullopt, upper};
}
Metric info(std::string name, double value) { return Metric{std::move(name), value, std::nullopt, std::nullopt}; }

struct QuantumLevel {
  CovarianceReport report;
  EvolutionRecord tau_record;
};

QuantumLevel run_quantum(const Scenario& s, double dt) {
  CovarianceSetup setup = s.covariance_setup();
  if (dt != setup.tau_config.dt) {
    setup.tau_config.dt = dt;
    setup.reference_dt = dt;
  }
  if (s.record_interval) setup.tau_config.record_every = static_cast<int>(std::lround(*s.record_interval / dt));
  QuantumLevel out;
  out.report = covariance_experiment(setup, &out.tau_record);
  return out;
}

struct ClassicalLevel {
  Trajectory traj_t;
  Trajectory traj_tau;
  double error = 0.0;
  double momentum_error = 0.0;
  double constraint_residual = 0.0;
};

ClassicalLevel run_classical(const Scenario& s, double tol) {
  // pi = m xi'/T' equals p = m dx/dt at the common initial instant.
  ClassicalLevel out{integrate_t(s.potential, s.constants, s.classical.x0, s.classical.p0, s.t_span, tol),
                     integrate_tau(s.potential, s.constants, s.timemap, s.classical.x0, s.classical.p0,
                                   s.tau_span, tol)};
  out.error = trajectory_equivalence(out.traj_t, out.traj_tau, s.timemap);
  const Interval cover = out.traj_t.coverage();
  for (const auto& smp : out.traj_tau.samples()) {
    const auto v = s.timemap.eval(smp.clock);
    const double t = std::clamp(v.t, cover.lo, cover.hi);
    out.momentum_error = std::max(out.momentum_error, std::abs(smp.pm - out.traj_t.interpolate(t).pm));
    const double xiprime = v.tprime * smp.pm / s.constants.mass;
    out.constraint_residual = std::max(
        out.constraint_residual, std::abs(check_constraint(s.potential, s.constants, s.timemap, smp.clock, smp.q, xiprime)));
  }
  return out;
}

void covariance_metrics(RunSummary& r, const CovarianceReport& rep) {
  r.metrics.push_back(bounded_above("fidelity_error", 1.0 - rep.min_fidelity, r.tolerances.fidelity));
  r.metrics.push_back(bounded_above("max_energy_residual", rep.max_energy_residual, r.tolerances.energy_residual));
  r.metrics.push_back(info("min_fidelity", rep.min_fidelity));
  r.metrics.push_back(info("max_distance", rep.max_distance));
  r.metrics.push_back(info("max_norm_deviation", rep.max_norm_deviation));
  r.metrics.push_back(info("samples", static_cast<double>(rep.samples.size())));
}

void execute(const Scenario& s, RunSummary& r, Emitter& em) {
  switch (s.kind) {
    case ScenarioKind::QuantumCovariance: {
      const auto lvl = run_quantum(s, s.propagator.dt);
      covariance_metrics(r, lvl.report);
      if (lvl.report.flagged) {
        r.status = RunStatus::Flagged;
        r.message = lvl.report.flag_reason;
      }
      em.report(lvl.report, "covariance");
      em.report(lvl.tau_record, "tau_record");
      if (em.csv) {
        std::ostringstream out;
        write_density_csv(out, lvl.tau_record);
        em.text("density_tau.csv", out.str());
      }
      return;
    }
    case ScenarioKind::ClassicalEquivalence: {
      const auto lvl = run_classical(s, s.tol);
      r.metrics.push_back(bounded_above("max_trajectory_error", lvl.error, r.tolerances.trajectory_error));
      r.metrics.push_back(info("max_momentum_error", lvl.momentum_error));
      r.metrics.push_back(info("max_constraint_residual", lvl.constraint_residual));
      r.metrics.push_back(info("steps_t", static_cast<double>(lvl.traj_t.size() - 1)));
      r.metrics.push_back(info("steps_tau", static_cast<double>(lvl.traj_tau.size() - 1)));
      em.report(lvl.traj_t, "trajectory_t");
      em.report(lvl.traj_tau, "trajectory_tau");
      return;
    }
    case ScenarioKind::ConvergenceSweep:
      break;
  }

  const auto& sw = *s.sweep;
  std::vector<double> errors;
  std::ostringstream csv;
  json rows = json::array();
  if (sw.experiment == ScenarioKind::QuantumCovariance) {
    csv << "dt,max_distance,min_fidelity,max_energy_residual\n";
    for (double dt : sw.values) {
      const auto lvl = run_quantum(s, dt);
      const auto& rep = lvl.report;
      if (rep.flagged && r.status != RunStatus::Flagged) {
        r.status = RunStatus::Flagged;
        r.message = "dt=" + format_number(dt) + ": " + rep.flag_reason;
      }
      errors.push_back(rep.max_distance);
      csv << format_number(dt) << ',' << format_number(rep.max_distance) << ',' << format_number(rep.min_fidelity)
          << ',' << format_number(rep.max_energy_residual) << '\n';
      rows.push_back({{"dt", dt},
                      {"max_distance", rep.max_distance},
                      {"min_fidelity", rep.min_fidelity},
                      {"max_energy_residual", rep.max_energy_residual}});
    }
  } else {
    csv << "tol,max_trajectory_error\n";
    for (double tol : sw.values) {
      const auto lvl = run_classical(s, tol);
      errors.push_back(lvl.error);
      csv << format_number(tol) << ',' << format_number(lvl.error) << '\n';
      rows.push_back({{"tol", tol}, {"max_trajectory_error", lvl.error}});
    }
  }
  const double order = estimate_order(sw.values, errors);
  r.metrics.push_back(Metric{"order", order, r.tolerances.order_min, r.tolerances.order_max});
  r.metrics.push_back(info("finest_error", errors.back()));

  if (em.csv) em.text("sweep.csv", csv.str());
  if (em.json) {
    json j = {{"schema_version", kReportSchemaVersion},
              {"kind", "convergence_sweep"},
              {"parameter", sw.parameter == SweepParameter::Dt ? "dt" : "tol"},
              {"experiment", to_string(sw.experiment)},
              {"order", order},
              {"levels", std::move(rows)}};
    em.text("sweep.json", j.dump(2) + "\n");
  }
}

}  // namespace

Scenario as_sweep(const Scenario& s, std::vector<double> values) {
  if (s.sweep && values.empty()) return s;
  Scenario out = s;
  const ScenarioKind experiment = s.experiment();
  const bool quantum = experiment == ScenarioKind::QuantumCovariance;
  if (values.empty()) values = quantum ? kDefaultDtSweep : kDefaultTolSweep;
  if (values.size() < 2) throw ValidationError("a sweep needs at least two values");
  for (double v : values) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError("sweep values must be positive");
  }
  out.kind = ScenarioKind::ConvergenceSweep;
  out.sweep = SweepSpec{quantum ? SweepParameter::Dt : SweepParameter::Tol, experiment, values};
  if (!s.sweep && !quantum) {
    out.tolerances.order_min = kClassicalTolOrderBand.lo;
    out.tolerances.order_max = kClassicalTolOrderBand.hi;
  }
  if (quantum) {
    const double coarsest = *std::max_element(values.begin(), values.end());
    const double wanted = s.record_interval.value_or(s.propagator.record_every * s.propagator.dt);
    const double interval = coarsest * std::max(1.0, std::round(wanted / coarsest));
    for (double dt : values) {
      const double q = interval / dt;
      if (std::abs(q - std::round(q)) > 1e-9 * q) {
        throw ValidationError("sweep dt values must divide " + format_number(interval));
      }
    }
    out.record_interval = interval;
    out.propagator.dt = values.front();
    out.propagator.record_every = static_cast<int>(std::lround(interval / values.front()));
    out.reference_dt = values.front();
  } else {
    out.tol = values.front();
  }
  return out;
}

RunSummary run_scenario(const Scenario& s, const RunOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  RunSummary r;
  r.scenario = s.name;
  r.kind = s.kind;
  r.tolerance_profile = opts.tolerance_profile;
  r.tolerances = apply_tolerance_profile(s.tolerances, opts.tolerance_profile);
  r.status = RunStatus::Pass;

  const auto& formats = opts.formats.empty() ? s.formats : opts.formats;
  Emitter em{opts.out_dir / s.output_directory, false, false, opts.write_artifacts, &r.artifacts};
  for (const auto& f : formats) {
    if (f == "csv") {
      em.csv = true;
    } else if (f == "json") {
      em.json = true;
    } else {
      throw ValidationError("unknown output format '" + f + "'");
    }
  }

  try {
    execute(s, r, em);
    if (r.status == RunStatus::Pass) {
      for (const auto& m : r.metrics) {
        if (m.headline() && !m.within()) {
          r.status = RunStatus::Fail;
          if (!r.message.empty()) r.message += "; ";
          r.message += m.name + " outside tolerance";
        }
      }
    }
  } catch (const std::exception& e) {
    r.status = RunStatus::Fail;
    r.message = e.what();
  }
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (opts.write_artifacts) {
    try {
      const auto path = em.dir / "summary.json";
      write_text_file(path, summary_json(r));
      r.artifacts.push_back(path);
    } catch (const std::exception& e) {
      r.status = RunStatus::Fail;
      r.message = e.what();
    }
  }
  return r;
}

std::string summary_json(const RunSummary& r) {
  json metrics = json::array();
  for (const auto& m : r.metrics) {
    json jm = {{"name", m.name}, {"value", std::isfinite(m.value) ? json(m.value) : json(nullptr)}};
    if (m.lower) jm["lower"] = *m.lower;
    if (m.upper) jm["upper"] = *m.upper;
    if (m.headline()) jm["within"] = m.within();
    metrics.push_back(std::move(jm));
  }
  const auto& t = r.tolerances;
  json j = {{"schema_version", kReportSchemaVersion},
            {"scenario", r.scenario},
            {"kind", to_string(r.kind)},
            {"status", to_string(r.status)},
            {"message", r.message},
            {"tolerance_profile", r.tolerance_profile},
            {"tolerances",
             {{"fidelity", t.fidelity},
              {"energy_residual", t.energy_residual},
              {"trajectory_error", t.trajectory_error},
              {"order_min", t.order_min},
              {"order_max", t.order_max}}},
            {"metrics", std::move(metrics)},
            {"wall_seconds", r.wall_seconds}};
  return j.dump(2) + "\n";
}

}  // namespace timecov
