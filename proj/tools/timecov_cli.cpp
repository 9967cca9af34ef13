// timecov: run reparametrization-covariance scenarios from the command line.
//
//   timecov run <scenario>... [--catalogue] [--out DIR] [--format csv|json|both]
//                             [--jobs N] [--tolerance-profile baseline|strict]
//   timecov sweep <scenario> [--values v1,v2,...] [same flags]
//   timecov validate <scenario>...
//   timecov catalogue [--dir DIR]
//
// Exit status: 0 all Pass, 1 any Fail, 2 usage or parse error, 3 Flagged only.

#include <omp.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "timecov/report.hpp"
#include "timecov/runner.hpp"
#include "timecov/scenario.hpp"

#ifndef TIMECOV_CATALOGUE_DIR
#define TIMECOV_CATALOGUE_DIR "scenarios"
#endif

namespace fs = std::filesystem;
using namespace timecov;

namespace {

constexpr int kExitUsage = 2;

std::vector<fs::path> catalogue_files(const fs::path& dir) {
  std::vector<fs::path> out;
  std::error_code ec;
  for (const auto& e : fs::directory_iterator(dir, ec)) {
    if (e.is_regular_file() && e.path().extension() == ".ini") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

// A bare catalogue name resolves to <catalogue>/<name>.ini.
fs::path resolve(const std::string& arg, const fs::path& catalogue) {
  if (fs::exists(arg)) return arg;
  const fs::path named = catalogue / (arg + ".ini");
  if (fs::exists(named)) return named;
  return arg;
}

std::string headline(const RunSummary& r) {
  std::string out;
  for (const auto& m : r.metrics) {
    if (!m.headline()) continue;
    char buf[96];
    std::snprintf(buf, sizeof buf, "%s%s=%.3e", out.empty() ? "" : " ", m.name.c_str(), m.value);
    out += buf;
  }
  return out;
}

std::vector<std::string> formats_from(const std::string& f) {
  if (f == "both") return {"csv", "json"};
  if (f.empty()) return {};
  return {f};
}

struct Common {
  std::string out = "out";
  std::string format;
  int jobs = 1;
  std::string profile = "baseline";
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--out", c.out, "Output directory")->capture_default_str();
  cmd->add_option("--format", c.format, "Artifact format (default: as declared by each scenario)")
      ->check(CLI::IsMember({"csv", "json", "both"}));
  cmd->add_option("--jobs", c.jobs, "Scenarios run concurrently")->check(CLI::Range(1, 256))->capture_default_str();
  cmd->add_option("--tolerance-profile", c.profile, "baseline or strict")
      ->check(CLI::IsMember({"baseline", "strict"}))
      ->capture_default_str();
}

int execute(std::vector<Scenario> scenarios, const Common& c) {
  std::map<std::string, std::string> dirs;
  for (const auto& s : scenarios) {
    auto [it, fresh] = dirs.emplace(s.output_directory, s.name);
    if (!fresh) {
      std::cerr << "error: scenarios '" << it->second << "' and '" << s.name << "' share output directory '"
                << s.output_directory << "'\n";
      return kExitUsage;
    }
  }

  RunOptions opts;
  opts.out_dir = c.out;
  opts.formats = formats_from(c.format);
  opts.tolerance_profile = c.profile;

  std::vector<RunSummary> results(scenarios.size());
  const int n = static_cast<int>(scenarios.size());
#pragma omp parallel for num_threads(c.jobs) schedule(dynamic, 1)
  for (int i = 0; i < n; ++i) results[i] = run_scenario(scenarios[i], opts);

  for (const auto& r : results) {
    std::printf("%-8s %-32s %-22s %s  (%.2fs)\n", to_string(r.status), r.scenario.c_str(), to_string(r.kind),
                headline(r).c_str(), r.wall_seconds);
    if (!r.message.empty()) std::printf("         %s\n", r.message.c_str());
  }
  return exit_code(results);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-reparametrization covariance experiments"};
  app.require_subcommand(1);
  fs::path catalogue_dir = TIMECOV_CATALOGUE_DIR;

  Common common;
  std::vector<std::string> run_files;
  bool run_catalogue = false;
  auto* run = app.add_subcommand("run", "Run scenarios");
  run->add_option("scenarios", run_files, "Scenario files or catalogue names");
  run->add_flag("--catalogue", run_catalogue, "Run every bundled scenario");
  add_common(run, common);

  std::string sweep_file;
  std::vector<double> sweep_values;
  auto* sweep = app.add_subcommand("sweep", "Convergence sweep of one scenario");
  sweep->add_option("scenario", sweep_file, "Scenario file or catalogue name")->required();
  sweep->add_option("--values", sweep_values, "dt or tol values (default: built-in ladder)")->delimiter(',');
  add_common(sweep, common);

  std::vector<std::string> validate_files;
  auto* validate = app.add_subcommand("validate", "Parse and validate scenarios without running");
  validate->add_option("scenarios", validate_files, "Scenario files")->required();

  auto* catalogue = app.add_subcommand("catalogue", "List bundled scenarios");
  catalogue->add_option("--dir", catalogue_dir, "Catalogue directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*catalogue) {
      const auto files = catalogue_files(catalogue_dir);
      if (files.empty()) {
        std::cerr << "error: no scenarios in " << catalogue_dir << "\n";
        return kExitUsage;
      }
      for (const auto& f : files) {
        const Scenario s = parse_scenario(f);
        std::printf("%-32s %-22s %s\n", s.name.c_str(), to_string(s.kind), s.description.c_str());
      }
      return 0;
    }

    if (*validate) {
      for (const auto& f : validate_files) {
        const Scenario s = parse_scenario(resolve(f, catalogue_dir));
        std::printf("ok  %-32s %-22s tau=[%s, %s] t=[%s, %s]\n", s.name.c_str(), to_string(s.kind),
                    format_number(s.tau_span.lo).c_str(), format_number(s.tau_span.hi).c_str(),
                    format_number(s.t_span.lo).c_str(), format_number(s.t_span.hi).c_str());
      }
      return 0;
    }

    std::vector<Scenario> scenarios;
    if (*sweep) {
      scenarios.push_back(as_sweep(parse_scenario(resolve(sweep_file, catalogue_dir)), sweep_values));
    } else {
      std::vector<fs::path> files;
      if (run_catalogue) files = catalogue_files(catalogue_dir);
      for (const auto& f : run_files) files.push_back(resolve(f, catalogue_dir));
      if (files.empty()) {
        std::cerr << "error: no scenarios given\n";
        return kExitUsage;
      }
      for (const auto& f : files) scenarios.push_back(parse_scenario(f));
    }
    return execute(std::move(scenarios), common);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
