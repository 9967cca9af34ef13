#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "timecov/classical.hpp"
#include "timecov/quantum.hpp"

namespace timecov {

inline constexpr int kReportSchemaVersion = 1;

enum class ReportFormat { Csv, Json };

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// 17 significant digits, scientific: enough to round-trip any double.
std::string format_number(double v);

void write_csv(std::ostream& out, const CovarianceReport& report);
void write_csv(std::ostream& out, const EvolutionRecord& record);
/// Columns clock, t_equivalent, q, pm.
void write_csv(std::ostream& out, const Trajectory& traj);
/// Long format: clock, t, x, density, one row per grid point per snapshot.
void write_density_csv(std::ostream& out, const EvolutionRecord& record);

std::string to_json(const CovarianceReport& report);
std::string to_json(const EvolutionRecord& record);
std::string to_json(const Trajectory& traj);
CovarianceReport covariance_report_from_json(const std::string& text);

void emit_report(const CovarianceReport& report, ReportFormat format, const std::filesystem::path& path);
void emit_report(const EvolutionRecord& record, ReportFormat format, const std::filesystem::path& path);
void emit_report(const Trajectory& traj, ReportFormat format, const std::filesystem::path& path);

/// Writes `content` to `path`, creating parent directories.
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace timecov
