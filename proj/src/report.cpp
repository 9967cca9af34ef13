#include "timecov/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace timecov {

using nlohmann::json;

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

namespace {

void row(std::ostream& out, std::initializer_list<double> values) {
  bool first = true;
  for (double v : values) {
    if (!first) out << ',';
    out << format_number(v);
    first = false;
  }
  out << '\n';
}

// JSON has no NaN/Inf; refuse rather than silently write null.
double finite(double v, const char* field) {
  if (!std::isfinite(v)) throw NumericalError(std::string("non-finite value in report field ") + field);
  return v;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace

void write_csv(std::ostream& out, const CovarianceReport& report) {
  out << "tau,t,fidelity,norm_psi,norm_phi,energy_t,energy_tau,Tprime,energy_transform_residual\n";
  for (const auto& s : report.samples) {
    row(out, {s.tau, s.t, s.fidelity, s.norm_psi, s.norm_phi, s.energy_t, s.energy_tau, s.tprime,
              s.energy_transform_residual});
  }
}

void write_csv(std::ostream& out, const EvolutionRecord& record) {
  out << "clock,t,Tprime,norm,energy,edge_mass\n";
  for (const auto& s : record.snapshots) row(out, {s.clock, s.t, s.tprime, s.norm, s.energy, s.edge_mass});
}

void write_csv(std::ostream& out, const Trajectory& traj) {
  out << "clock,t_equivalent,q,pm\n";
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const auto& s = traj.samples()[i];
    row(out, {s.clock, traj.t_equivalent(i), s.q, s.pm});
  }
}

void write_density_csv(std::ostream& out, const EvolutionRecord& record) {
  out << "clock,t,x,density\n";
  for (const auto& s : record.snapshots) {
    const auto& g = s.psi.grid();
    for (std::size_t j = 0; j < g.size(); ++j) row(out, {s.clock, s.t, g.x(j), std::norm(s.psi[j])});
  }
}

std::string to_json(const CovarianceReport& report) {
  json samples = json::array();
  for (const auto& s : report.samples) {
    samples.push_back({{"tau", finite(s.tau, "tau")},
                       {"t", finite(s.t, "t")},
                       {"fidelity", finite(s.fidelity, "fidelity")},
                       {"distance", finite(s.distance, "distance")},
                       {"norm_psi", finite(s.norm_psi, "norm_psi")},
                       {"norm_phi", finite(s.norm_phi, "norm_phi")},
                       {"energy_t", finite(s.energy_t, "energy_t")},
                       {"energy_tau", finite(s.energy_tau, "energy_tau")},
                       {"Tprime", finite(s.tprime, "Tprime")},
                       {"energy_transform_residual", finite(s.energy_transform_residual, "energy_transform_residual")}});
  }
  json j = {{"schema_version", kReportSchemaVersion},
            {"kind", "covariance_report"},
            {"min_fidelity", finite(report.min_fidelity, "min_fidelity")},
            {"max_distance", finite(report.max_distance, "max_distance")},
            {"max_energy_residual", finite(report.max_energy_residual, "max_energy_residual")},
            {"max_norm_deviation", finite(report.max_norm_deviation, "max_norm_deviation")},
            {"flagged", report.flagged},
            {"flag_reason", report.flag_reason},
            {"samples", std::move(samples)}};
  return dump(j);
}

CovarianceReport covariance_report_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("covariance report: ") + e.what());
  }
  try {
    if (j.at("schema_version").get<int>() != kReportSchemaVersion) {
      throw ValidationError("covariance report: unsupported schema_version");
    }
    CovarianceReport r;
    r.min_fidelity = j.at("min_fidelity").get<double>();
    r.max_distance = j.at("max_distance").get<double>();
    r.max_energy_residual = j.at("max_energy_residual").get<double>();
    r.max_norm_deviation = j.at("max_norm_deviation").get<double>();
    r.flagged = j.at("flagged").get<bool>();
    r.flag_reason = j.at("flag_reason").get<std::string>();
    for (const auto& s : j.at("samples")) {
      CovarianceSample c{};
      c.tau = s.at("tau").get<double>();
      c.t = s.at("t").get<double>();
      c.fidelity = s.at("fidelity").get<double>();
      c.distance = s.at("distance").get<double>();
      c.norm_psi = s.at("norm_psi").get<double>();
      c.norm_phi = s.at("norm_phi").get<double>();
      c.energy_t = s.at("energy_t").get<double>();
      c.energy_tau = s.at("energy_tau").get<double>();
      c.tprime = s.at("Tprime").get<double>();
      c.energy_transform_residual = s.at("energy_transform_residual").get<double>();
      r.samples.push_back(c);
    }
    return r;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("covariance report: ") + e.what());
  }
}

std::string to_json(const EvolutionRecord& record) {
  json snaps = json::array();
  for (const auto& s : record.snapshots) {
    snaps.push_back({{"clock", finite(s.clock, "clock")},
                     {"t", finite(s.t, "t")},
                     {"Tprime", finite(s.tprime, "Tprime")},
                     {"norm", finite(s.norm, "norm")},
                     {"energy", finite(s.energy, "energy")},
                     {"edge_mass", finite(s.edge_mass, "edge_mass")}});
  }
  json j = {{"schema_version", kReportSchemaVersion},
            {"kind", "evolution_record"},
            {"clock_kind", to_string(record.clock_kind)},
            {"timemap", record.timemap ? record.timemap->describe() : std::string("identity")},
            {"step", record.step},
            {"record_every", record.record_every},
            {"max_norm_deviation", record.max_norm_deviation},
            {"max_edge_mass", record.max_edge_mass},
            {"edge_violation", record.edge_violation},
            {"norm_violation", record.norm_violation},
            {"snapshots", std::move(snaps)}};
  return dump(j);
}

std::string to_json(const Trajectory& traj) {
  json samples = json::array();
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const auto& s = traj.samples()[i];
    samples.push_back({{"clock", s.clock}, {"t_equivalent", traj.t_equivalent(i)}, {"q", s.q}, {"pm", s.pm}});
  }
  json j = {{"schema_version", kReportSchemaVersion},
            {"kind", "trajectory"},
            {"clock_kind", to_string(traj.clock_kind())},
            {"timemap", traj.timemap() ? traj.timemap()->describe() : std::string("identity")},
            {"samples", std::move(samples)}};
  return dump(j);
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw IoError(path.parent_path().string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  out << content;
  out.flush();
  if (!out) throw IoError(path.string() + ": write failed");
}

namespace {

template <class T>
void emit(const T& value, ReportFormat format, const std::filesystem::path& path) {
  if (format == ReportFormat::Json) {
    write_text_file(path, to_json(value));
    return;
  }
  std::ostringstream out;
  write_csv(out, value);
  write_text_file(path, out.str());
}

}  // namespace

void emit_report(const CovarianceReport& report, ReportFormat format, const std::filesystem::path& path) {
  emit(report, format, path);
}
void emit_report(const EvolutionRecord& record, ReportFormat format, const std::filesystem::path& path) {
  emit(record, format, path);
}
void emit_report(const Trajectory& traj, ReportFormat format, const std::filesystem::path& path) {
  emit(traj, format, path);
}

}  // namespace timecov
