#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "doctest.h"
#include "timecov/report.hpp"
#include "timecov/runner.hpp"
#include "timecov/scenario.hpp"

using namespace timecov;
namespace fs = std::filesystem;

namespace {

const std::string kIdentity = R"(schema_version = 1
name = gauge
kind = quantum_covariance

[potential]
family = harmonic
omega = 1

[timemap]
family = identity
tau_start = 0
tau_end = 0.5

[initial_state]
center = 1
width = 1

[numerics]
dt = 5e-4
record_every = 100

[tolerances]
fidelity = 1e-12
energy_residual = 1e-12
)";

std::string replace(std::string s, const std::string& from, const std::string& to) {
  const auto at = s.find(from);
  REQUIRE(at != std::string::npos);
  return s.replace(at, from.size(), to);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream b;
  b << in.rdbuf();
  return b.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag)
      : path(fs::temp_directory_path() / ("timecov_" + tag + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("parse: identity map with the default grid") {
  const Scenario s = parse_scenario_text(kIdentity);
  CHECK(s.name == "gauge");
  CHECK(s.kind == ScenarioKind::QuantumCovariance);
  REQUIRE(s.grid);
  CHECK(*s.grid == SpatialGrid(-12.0, 12.0, 512));
  CHECK(s.t_span.lo == s.tau_span.lo);
  CHECK(s.t_span.hi == s.tau_span.hi);
  CHECK(s.propagator.record_every == 100);
  CHECK(s.output_directory == "gauge");
  CHECK(s.formats == std::vector<std::string>{"csv", "json"});
}

TEST_CASE("parse: derived t-interval follows the map") {
  auto text = replace(kIdentity, "family = identity", "family = linear\nalpha = 2");
  text = replace(text, "tau_end = 0.5", "tau_end = 2pi");
  const Scenario s = parse_scenario_text(text);
  CHECK(s.tau_span.hi == doctest::Approx(2.0 * M_PI).epsilon(1e-15));
  CHECK(s.t_span.hi == s.timemap.t_of(s.tau_span.hi));
  CHECK(s.t_span.hi == doctest::Approx(M_PI).epsilon(1e-15));
}

TEST_CASE("parse: rejections name the offending field") {
  auto rejects = [](const std::string& text, const std::string& needle) {
    CAPTURE(needle);
    CHECK_THROWS_WITH_AS(parse_scenario_text(text, "s.ini"), doctest::Contains(needle.c_str()), ScenarioError);
  };

  SUBCASE("alpha = 0 breaks monotonicity") {
    rejects(replace(kIdentity, "family = identity", "family = linear\nalpha = 0"), "[timemap] alpha");
    rejects(replace(kIdentity, "family = identity", "family = linear\nalpha = 0"), "monotonicity");
  }
  SUBCASE("Gaussian too close to the wall") {
    rejects(replace(kIdentity, "center = 1", "center = 11.5"), "[initial_state] center");
  }
  SUBCASE("sine map with |a w| >= 1") {
    rejects(replace(kIdentity, "family = identity", "family = sine_perturbed\namplitude = 0.5\nfrequency = 2"),
            "[timemap] amplitude");
  }
  SUBCASE("schema version") {
    rejects(replace(kIdentity, "schema_version = 1\n", ""), "schema_version: required");
    rejects(replace(kIdentity, "schema_version = 1", "schema_version = 2"), "unsupported version");
  }
  SUBCASE("unknown keys and sections are errors") {
    rejects(replace(kIdentity, "omega = 1", "omega = 1\nomgea = 2"), "[potential] omgea: unknown key");
    rejects(kIdentity + "\n[extras]\nfoo = 1\n", "[extras]");
    rejects(replace(kIdentity, "kind = quantum_covariance", "kind = quantum_covariance\ncolour = red"),
            "colour: unknown key");
  }
  SUBCASE("family-specific keys") {
    rejects(replace(kIdentity, "omega = 1", "omega = 1\nomega_rate = 0.1"), "[potential] omega_rate");
    rejects(replace(kIdentity, "family = harmonic", "family = anharmonic"), "[potential] family");
  }
  SUBCASE("numbers") {
    rejects(replace(kIdentity, "dt = 5e-4", "dt = fast"), "[numerics] dt");
    rejects(replace(kIdentity, "dt = 5e-4", "dt = -1e-3"), "[numerics] dt");
    rejects(replace(kIdentity, "dt = 5e-4", "dt = nan"), "[numerics] dt");
    rejects(replace(kIdentity, "record_every = 100", "record_every = 2.5"), "[numerics] record_every");
    rejects(replace(kIdentity, "width = 1", "width = 0"), "[initial_state]");
  }
  SUBCASE("grid") {
    rejects(kIdentity + "\n[grid]\nn_points = 4\n", "[grid]");
    rejects(kIdentity + "\n[grid]\nx_min = 3\nx_max = 3\n", "[grid]");
  }
  SUBCASE("spans") {
    rejects(replace(kIdentity, "tau_end = 0.5", "tau_end = 0"), "[timemap] tau_end");
  }
  SUBCASE("duplicate key") {
    CHECK_THROWS_AS(parse_scenario_text(replace(kIdentity, "omega = 1", "omega = 1\nomega = 2")), ScenarioError);
  }
  SUBCASE("classical scenarios take no grid") {
    const std::string classical = R"(schema_version = 1
name = c
kind = classical_equivalence
[potential]
family = free
[timemap]
family = identity
tau_start = 0
tau_end = 1
[initial_state]
x0 = 0
p0 = 1
[numerics]
tol = 1e-9
)";
    CHECK_NOTHROW(parse_scenario_text(classical));
    rejects(classical + "[grid]\nn_points = 64\n", "[grid]");
    rejects(replace(classical, "tol = 1e-9", "tol = 0"), "[numerics] tol");
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(parse_scenario("/nonexistent/none.ini"), ScenarioError); }
}

TEST_CASE("parse: dt sweep needs a record interval on every dt") {
  const std::string text = R"(schema_version = 1
name = sw
kind = convergence_sweep
[sweep]
experiment = quantum_covariance
parameter = dt
values = 4e-3, 2e-3, 1e-3
[potential]
family = harmonic
omega = 1
[timemap]
family = identity
tau_start = 0
tau_end = 0.2
[initial_state]
center = 0
width = 1
[numerics]
record_interval = 0.1
)";
  const Scenario s = parse_scenario_text(text);
  REQUIRE(s.sweep);
  CHECK(s.sweep->values.size() == 3);
  CHECK(s.record_interval.value() == 0.1);
  CHECK(s.tolerances.order_min == 1.8);
  CHECK_THROWS_WITH_AS(parse_scenario_text(replace(text, "record_interval = 0.1", "record_interval = 0.003")),
                       doctest::Contains("record_interval"), ScenarioError);
  CHECK_THROWS_WITH_AS(parse_scenario_text(replace(text, "parameter = dt", "parameter = tol")),
                       doctest::Contains("[sweep] parameter"), ScenarioError);
  CHECK_THROWS_AS(parse_scenario_text(replace(text, "values = 4e-3, 2e-3, 1e-3", "values = 4e-3")), ScenarioError);
}

TEST_CASE("parse: the bundled catalogue is valid") {
  int count = 0;
  for (const auto& e : fs::directory_iterator(TIMECOV_CATALOGUE_DIR)) {
    if (e.path().extension() != ".ini") continue;
    CAPTURE(e.path().string());
    CHECK_NOTHROW(parse_scenario(e.path()));
    ++count;
  }
  CHECK(count >= 6);
}

TEST_CASE("tolerance profiles") {
  const Tolerances declared;
  CHECK(apply_tolerance_profile(declared, "baseline").fidelity == declared.fidelity);
  const auto strict = apply_tolerance_profile(declared, "strict");
  CHECK(strict.fidelity == 1e-14);
  CHECK(strict.trajectory_error == 1e-14);
  CHECK(strict.order_max - strict.order_min <= 2.1e-14);
  CHECK_THROWS_AS(apply_tolerance_profile(declared, "lenient"), ValidationError);
}

TEST_CASE("format_number has 17 significant digits") {
  CHECK(format_number(0.1) == "1.0000000000000001e-01");
  CHECK(format_number(0.0) == "0.0000000000000000e+00");
  CHECK(format_number(-2.5) == "-2.5000000000000000e+00");
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) * std::pow(10.0, i % 40 - 20);
    CHECK(std::stod(format_number(v)) == v);
  }
}

TEST_CASE("emit_report: covariance CSV") {
  SUBCASE("empty report is header only") {
    std::ostringstream out;
    write_csv(out, CovarianceReport{});
    CHECK(out.str() == "tau,t,fidelity,norm_psi,norm_phi,energy_t,energy_tau,Tprime,energy_transform_residual\n");
  }
  SUBCASE("one-sample identity report") {
    CovarianceReport r;
    r.samples.push_back({0.25, 0.25, 1.0, 1.0, 1.0, 1.0, 0.5, 0.5, 0.5, 0.0});
    std::ostringstream out;
    write_csv(out, r);
    std::istringstream in(out.str());
    std::string header, line;
    std::getline(in, header);
    std::getline(in, line);
    CHECK(line.rfind("2.5000000000000000e-01,2.5000000000000000e-01,1.0000000000000000e+00,", 0) == 0);
  }
}

TEST_CASE("emit_report: JSON round trip is exact") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  CovarianceReport r;
  for (int i = 0; i < 50; ++i) {
    r.samples.push_back({u(rng) * 10, u(rng) * 5, 1.0 - u(rng) * 1e-9, u(rng), u(rng), -u(rng) * 1e300,
                         u(rng) * 1e-300, 1.0 / 3.0 + u(rng), u(rng) * 1e-17,
                         std::numeric_limits<double>::denorm_min() * (i + 1)});
  }
  r.summarize();
  r.flagged = true;
  r.flag_reason = "edge";
  const auto back = covariance_report_from_json(to_json(r));
  REQUIRE(back.samples.size() == r.samples.size());
  for (std::size_t i = 0; i < r.samples.size(); ++i) {
    const auto& a = r.samples[i];
    const auto& b = back.samples[i];
    CHECK(a.tau == b.tau);
    CHECK(a.t == b.t);
    CHECK(a.tprime == b.tprime);
    CHECK(a.fidelity == b.fidelity);
    CHECK(a.distance == b.distance);
    CHECK(a.norm_psi == b.norm_psi);
    CHECK(a.norm_phi == b.norm_phi);
    CHECK(a.energy_t == b.energy_t);
    CHECK(a.energy_tau == b.energy_tau);
    CHECK(a.energy_transform_residual == b.energy_transform_residual);
  }
  CHECK(back.min_fidelity == r.min_fidelity);
  CHECK(back.max_distance == r.max_distance);
  CHECK(back.max_energy_residual == r.max_energy_residual);
  CHECK(back.flagged);
  CHECK(back.flag_reason == "edge");
  CHECK(to_json(back) == to_json(r));
  CHECK(to_json(r).find("\"schema_version\": 1") != std::string::npos);

  CHECK_THROWS_AS(covariance_report_from_json("{\"schema_version\": 9}"), ValidationError);
  CHECK_THROWS_AS(covariance_report_from_json("not json"), ValidationError);
}

TEST_CASE("emit_report: unwritable path reports the path") {
  CHECK_THROWS_WITH_AS(emit_report(CovarianceReport{}, ReportFormat::Csv, "/proc/timecov/x.csv"),
                       doctest::Contains("/proc/timecov"), IoError);
}

TEST_CASE("estimate_order recovers an exact power law") {
  const std::vector<double> h = {4e-3, 2e-3, 1e-3, 5e-4};
  std::vector<double> e;
  for (double x : h) e.push_back(3.0 * x * x);
  CHECK(estimate_order(h, e) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK_THROWS(estimate_order({1e-3}, {1.0}));
  CHECK_THROWS(estimate_order({1e-3, 1e-3}, {1.0, 2.0}));
  CHECK_THROWS(estimate_order({1e-3, 2e-3}, {0.0, 2.0}));
}

TEST_CASE("exit code contract") {
  auto with = [](std::initializer_list<RunStatus> st) {
    std::vector<RunSummary> v;
    for (auto s : st) {
      RunSummary r;
      r.status = s;
      v.push_back(r);
    }
    return exit_code(v);
  };
  CHECK(with({RunStatus::Pass, RunStatus::Pass}) == 0);
  CHECK(with({RunStatus::Pass, RunStatus::Fail, RunStatus::Flagged}) == 1);
  CHECK(with({RunStatus::Flagged, RunStatus::Pass}) == 3);
  CHECK(with({}) == 0);
}

TEST_CASE("run_scenario: identity gauge passes and is byte-stable") {
  const Scenario s = parse_scenario_text(kIdentity);
  TempDir a("run_a"), b("run_b");
  RunOptions oa, ob;
  oa.out_dir = a.path;
  ob.out_dir = b.path;
  const auto ra = run_scenario(s, oa);
  const auto rb = run_scenario(s, ob);
  CHECK(ra.status == RunStatus::Pass);
  REQUIRE(ra.metric("min_fidelity"));
  CHECK(std::abs(ra.metric("min_fidelity")->value - 1.0) <= 1e-12);
  for (const char* f : {"covariance.csv", "tau_record.csv", "density_tau.csv", "covariance.json"}) {
    CAPTURE(f);
    const auto x = slurp(a.path / "gauge" / f);
    CHECK(!x.empty());
    CHECK(x == slurp(b.path / "gauge" / f));
  }
  const auto csv = slurp(a.path / "gauge" / "covariance.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 11);

  SUBCASE("strict profile fails") {
    // The gauge case is exact, so strict only bites once the clocks differ.
    RunOptions o = oa;
    o.tolerance_profile = "strict";
    o.write_artifacts = false;
    CHECK(run_scenario(s, o).status == RunStatus::Pass);
    auto text = replace(kIdentity, "family = identity", "family = linear\nalpha = 2");
    text = replace(text, "family = harmonic\nomega = 1", "family = driven_harmonic\nomega0 = 1\nomega_rate = 0.2");
    const auto driven = parse_scenario_text(text);
    CHECK(run_scenario(driven, o).status == RunStatus::Fail);
    o.tolerance_profile = "baseline";
    CHECK(run_scenario(driven, o).status == RunStatus::Fail);  // declared 1e-12 is also too tight
  }
  SUBCASE("format override") {
    TempDir c("run_c");
    RunOptions o;
    o.out_dir = c.path;
    o.formats = {"json"};
    run_scenario(s, o);
    CHECK(fs::exists(c.path / "gauge" / "covariance.json"));
    CHECK(!fs::exists(c.path / "gauge" / "covariance.csv"));
  }
}

TEST_CASE("run_scenario: a packet hitting the wall is Flagged") {
  const auto text = replace(replace(kIdentity, "width = 1", "width = 1\nmomentum = 6"), "family = harmonic\nomega = 1",
                            "family = free");
  const auto s = parse_scenario_text(replace(text, "tau_end = 0.5", "tau_end = 2"));
  RunOptions o;
  o.write_artifacts = false;
  const auto r = run_scenario(s, o);
  CHECK(r.status == RunStatus::Flagged);
  CHECK(r.message.find("edge") != std::string::npos);
}

TEST_CASE("run_scenario: errors become Fail with the originating message") {
  Scenario s = parse_scenario_text(kIdentity);
  s.grid.reset();
  RunOptions o;
  o.write_artifacts = false;
  const auto r = run_scenario(s, o);
  CHECK(r.status == RunStatus::Fail);
  CHECK(r.message.find("no grid") != std::string::npos);
}

TEST_CASE("as_sweep keeps comparison instants on a common lattice") {
  const Scenario s = parse_scenario_text(kIdentity);
  const Scenario w = as_sweep(s);
  REQUIRE(w.sweep);
  CHECK(w.kind == ScenarioKind::ConvergenceSweep);
  CHECK(w.sweep->parameter == SweepParameter::Dt);
  CHECK(w.sweep->values == kDefaultDtSweep);
  REQUIRE(w.record_interval);
  for (double dt : w.sweep->values) {
    const double q = *w.record_interval / dt;
    CHECK(std::abs(q - std::round(q)) <= 1e-9 * q);
  }
  CHECK_THROWS_AS(as_sweep(s, {1e-3}), ValidationError);
  CHECK_THROWS_AS(as_sweep(s, {3e-3, 7e-4}), ValidationError);
}
