#include "timecov/scenario.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

namespace timecov {

namespace pt = boost::property_tree;

const char* to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::QuantumCovariance:
      return "quantum_covariance";
    case ScenarioKind::ClassicalEquivalence:
      return "classical_equivalence";
    case ScenarioKind::ConvergenceSweep:
      return "convergence_sweep";
  }
  return "?";
}

bool is_known_tolerance_profile(const std::string& profile) {
  return profile == "baseline" || profile == "strict";
}

Tolerances apply_tolerance_profile(const Tolerances& declared, const std::string& profile) {
  if (profile == "baseline") return declared;
  if (profile == "strict") {
    constexpr double eps = 1e-14;
    Tolerances t;
    t.fidelity = t.energy_residual = t.trajectory_error = eps;
    const double mid = 0.5 * (declared.order_min + declared.order_max);
    t.order_min = mid - eps;
    t.order_max = mid + eps;
    return t;
  }
  throw ValidationError("unknown tolerance profile '" + profile + "' (expected baseline or strict)");
}

CovarianceSetup Scenario::covariance_setup() const {
  if (!grid) throw ValidationError("scenario '" + name + "' has no grid");
  CovarianceSetup s{constants, *grid, potential, timemap, gaussian, tau_span, propagator, reference_dt};
  return s;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Plain decimal, or a multiple of pi written as "pi", "2pi", "0.5pi", "-pi".
std::optional<double> parse_number(const std::string& raw) {
  std::string s = trim(raw);
  double factor = 1.0;
  if (s.size() >= 2 && s.compare(s.size() - 2, 2, "pi") == 0) {
    factor = std::numbers::pi;
    s.resize(s.size() - 2);
    if (s.empty() || s == "+") s = "1";
    if (s == "-") s = "-1";
  }
  if (s.empty()) return std::nullopt;
  const char* first = s.data();
  if (*first == '+') ++first;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  v *= factor;
  if (!std::isfinite(v)) return std::nullopt;
  return v;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

class Reader {
 public:
  Reader(const pt::ptree& root, std::string origin) : root_(root), origin_(std::move(origin)) {
    for (const auto& [key, node] : root_) {
      if (node.empty()) {
        top_keys_.insert(key);
      } else {
        sections_.insert(key);
      }
    }
  }

  [[noreturn]] void fail(const std::string& section, const std::string& key,
                         const std::string& what) const {
    std::string where = origin_ + ": ";
    if (!section.empty()) where += "[" + section + "] ";
    if (!key.empty()) where += key + ": ";
    throw ScenarioError(where + what);
  }

  bool has_section(const std::string& s) const { return sections_.count(s) > 0; }

  std::optional<std::string> text(const std::string& section, const std::string& key) {
    const pt::ptree* node = &root_;
    if (!section.empty()) {
      auto it = root_.find(section);
      if (it == root_.not_found()) return std::nullopt;
      node = &it->second;
    }
    auto it = node->find(key);
    if (it == node->not_found() || !it->second.empty()) return std::nullopt;
    used_.insert(section + "\n" + key);
    return trim(it->second.data());
  }

  std::string require_text(const std::string& section, const std::string& key) {
    auto v = text(section, key);
    if (!v || v->empty()) fail(section, key, "required key is missing");
    return *v;
  }

  double require(const std::string& section, const std::string& key) {
    const auto s = require_text(section, key);
    auto v = parse_number(s);
    if (!v) fail(section, key, "'" + s + "' is not a finite number");
    return *v;
  }

  double optional(const std::string& section, const std::string& key, double fallback) {
    auto s = text(section, key);
    if (!s) return fallback;
    auto v = parse_number(*s);
    if (!v) fail(section, key, "'" + *s + "' is not a finite number");
    return *v;
  }

  long long require_integer(const std::string& section, const std::string& key) {
    const auto s = require_text(section, key);
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) fail(section, key, "'" + s + "' is not an integer");
    return v;
  }

  std::vector<double> require_list(const std::string& section, const std::string& key) {
    const auto s = require_text(section, key);
    std::vector<double> out;
    for (const auto& item : split_list(s)) {
      auto v = parse_number(item);
      if (!v) fail(section, key, "'" + item + "' is not a finite number");
      out.push_back(*v);
    }
    if (out.empty()) fail(section, key, "empty list");
    return out;
  }

  // Every section must be in `allowed`; every key must have been read.
  void finish(const std::set<std::string>& allowed) const {
    for (const auto& s : sections_) {
      if (!allowed.count(s)) fail(s, "", "unknown or inapplicable section");
    }
    for (const auto& k : top_keys_) {
      if (!used_.count("\n" + k)) fail("", k, "unknown key");
    }
    for (const auto& s : sections_) {
      for (const auto& [key, node] : root_.find(s)->second) {
        (void)node;
        if (!used_.count(s + "\n" + key)) fail(s, key, "unknown key");
      }
    }
  }

 private:
  const pt::ptree& root_;
  std::string origin_;
  std::set<std::string> top_keys_;
  std::set<std::string> sections_;
  std::set<std::string> used_;
};

ScenarioKind parse_kind(Reader& r, const std::string& section, const std::string& key) {
  const auto s = r.require_text(section, key);
  for (auto k : {ScenarioKind::QuantumCovariance, ScenarioKind::ClassicalEquivalence,
                 ScenarioKind::ConvergenceSweep}) {
    if (s == to_string(k)) return k;
  }
  r.fail(section, key,
         "'" + s + "' is not one of quantum_covariance, classical_equivalence, convergence_sweep");
}

template <class F>
auto guarded(Reader& r, const std::string& section, const std::string& key, F&& build) {
  try {
    return build();
  } catch (const ValidationError& e) {
    r.fail(section, key, e.what());
  } catch (const DomainError& e) {
    r.fail(section, key, e.what());
  }
}

PotentialSpec read_potential(Reader& r) {
  const std::string sec = "potential";
  const auto family = r.require_text(sec, "family");
  if (family == "free") return PotentialSpec::free();
  if (family == "harmonic") {
    const double w = r.require(sec, "omega");
    return guarded(r, sec, "omega", [&] { return PotentialSpec::harmonic(w); });
  }
  if (family == "driven_harmonic") {
    const double w0 = r.require(sec, "omega0");
    const double rate = r.require(sec, "omega_rate");
    return guarded(r, sec, "omega0", [&] { return PotentialSpec::driven_harmonic(w0, rate); });
  }
  if (family == "moving_well") {
    const double k = r.require(sec, "stiffness");
    const double c0 = r.require(sec, "center");
    const double v = r.optional(sec, "velocity", 0.0);
    const double a = r.optional(sec, "sway", 0.0);
    const double w = r.optional(sec, "sway_frequency", 0.0);
    return guarded(r, sec, "stiffness", [&] { return PotentialSpec::moving_well(k, c0, v, a, w); });
  }
  r.fail(sec, "family", "'" + family + "' is not one of free, harmonic, driven_harmonic, moving_well");
}

TimeMap read_timemap(Reader& r, Interval& span) {
  const std::string sec = "timemap";
  span.lo = r.require(sec, "tau_start");
  span.hi = r.require(sec, "tau_end");
  if (!(span.hi > span.lo)) r.fail(sec, "tau_end", "must exceed tau_start");
  const auto family = r.require_text(sec, "family");
  if (family == "identity") return TimeMap::identity(span);
  if (family == "linear") {
    const double alpha = r.require(sec, "alpha");
    return guarded(r, sec, "alpha", [&] { return TimeMap::linear(alpha, span); });
  }
  if (family == "sine_perturbed") {
    const double a = r.require(sec, "amplitude");
    const double w = r.require(sec, "frequency");
    return guarded(r, sec, "amplitude", [&] { return TimeMap::sine_perturbed(a, w, span); });
  }
  if (family == "smooth_ramp") {
    const double rate = r.require(sec, "final_rate");
    const double c = r.require(sec, "center");
    const double w = r.require(sec, "width");
    return guarded(r, sec, "final_rate", [&] { return TimeMap::smooth_ramp(rate, c, w, span); });
  }
  r.fail(sec, "family", "'" + family + "' is not one of identity, linear, sine_perturbed, smooth_ramp");
}

bool integral_ratio(double interval, double dt, int& steps) {
  const double q = interval / dt;
  const double n = std::round(q);
  if (n < 1.0 || std::abs(q - n) > 1e-9 * std::max(1.0, q)) return false;
  steps = static_cast<int>(n);
  return true;
}

Scenario build(Reader& r) {
  Scenario s;

  const auto version = r.text("", "schema_version");
  if (!version) r.fail("", "schema_version", "required key is missing");
  if (*version != std::to_string(kScenarioSchemaVersion)) {
    r.fail("", "schema_version",
           "unsupported version '" + *version + "' (expected " + std::to_string(kScenarioSchemaVersion) + ")");
  }
  s.name = r.require_text("", "name");
  for (char ch : s.name) {
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-' || ch == '.')) {
      r.fail("", "name", "only letters, digits, '_', '-' and '.' are allowed");
    }
  }
  s.kind = parse_kind(r, "", "kind");
  s.description = r.text("", "description").value_or("");

  std::set<std::string> allowed = {"constants", "potential", "timemap", "initial_state", "numerics",
                                   "tolerances", "outputs"};

  if (s.kind == ScenarioKind::ConvergenceSweep) {
    allowed.insert("sweep");
    SweepSpec sw;
    sw.experiment = parse_kind(r, "sweep", "experiment");
    if (sw.experiment == ScenarioKind::ConvergenceSweep) r.fail("sweep", "experiment", "a sweep cannot nest a sweep");
    const auto param = r.require_text("sweep", "parameter");
    if (param == "dt") {
      sw.parameter = SweepParameter::Dt;
    } else if (param == "tol") {
      sw.parameter = SweepParameter::Tol;
    } else {
      r.fail("sweep", "parameter", "'" + param + "' is not one of dt, tol");
    }
    if ((sw.parameter == SweepParameter::Dt) != (sw.experiment == ScenarioKind::QuantumCovariance)) {
      r.fail("sweep", "parameter", "dt sweeps need quantum_covariance, tol sweeps need classical_equivalence");
    }
    sw.values = r.require_list("sweep", "values");
    if (sw.values.size() < 2) r.fail("sweep", "values", "need at least two values for an order estimate");
    for (double v : sw.values) {
      if (!(v > 0.0)) r.fail("sweep", "values", "values must be positive");
    }
    s.sweep = sw;
  } else if (r.has_section("sweep")) {
    r.fail("sweep", "", "only convergence_sweep scenarios take a [sweep] section");
  }

  const bool quantum = s.experiment() == ScenarioKind::QuantumCovariance;

  s.constants.hbar = r.optional("constants", "hbar", 1.0);
  s.constants.mass = r.optional("constants", "mass", 1.0);
  guarded(r, "constants", "", [&] {
    s.constants.validate();
    return 0;
  });

  s.potential = read_potential(r);
  s.timemap = read_timemap(r, s.tau_span);
  s.t_span = s.timemap.image();

  if (quantum) {
    allowed.insert("grid");
    const double lo = r.optional("grid", "x_min", -12.0);
    const double hi = r.optional("grid", "x_max", 12.0);
    std::size_t n = 512;
    if (r.text("grid", "n_points")) {
      const long long v = r.require_integer("grid", "n_points");
      if (v < 0) r.fail("grid", "n_points", "must be positive");
      n = static_cast<std::size_t>(v);
    }
    s.grid = guarded(r, "grid", "", [&] { return SpatialGrid(lo, hi, n); });

    s.gaussian.center = r.require("initial_state", "center");
    s.gaussian.width = r.require("initial_state", "width");
    s.gaussian.momentum = r.optional("initial_state", "momentum", 0.0);
    guarded(r, "initial_state", "center", [&] {
      (void)prepare_gaussian(*s.grid, s.gaussian, s.constants);
      return 0;
    });

    s.propagator.dt = s.sweep ? s.sweep->values.front() : r.require("numerics", "dt");
    s.propagator.edge_guard = r.optional("numerics", "edge_guard", 0.1);
    const auto every = r.text("numerics", "record_every");
    const auto interval = r.text("numerics", "record_interval");
    if (every && interval) r.fail("numerics", "record_interval", "give record_every or record_interval, not both");
    if (s.sweep && !interval) r.fail("numerics", "record_interval", "dt sweeps need a record_interval");
    if (interval) {
      const double iv = r.require("numerics", "record_interval");
      s.record_interval = iv;
      const std::vector<double> dts = s.sweep ? s.sweep->values : std::vector<double>{s.propagator.dt};
      for (double dt : dts) {
        int steps = 0;
        if (!integral_ratio(iv, dt, steps)) {
          r.fail("numerics", "record_interval", "must be a whole multiple of every dt");
        }
        if (dt == s.propagator.dt) s.propagator.record_every = steps;
      }
    } else if (every) {
      const long long v = r.require_integer("numerics", "record_every");
      if (v < 1 || v > 1000000000) r.fail("numerics", "record_every", "must be a positive integer");
      s.propagator.record_every = static_cast<int>(v);
    } else {
      s.propagator.record_every = 1;
    }
    if (s.sweep && r.text("numerics", "reference_dt")) {
      r.fail("numerics", "reference_dt", "dt sweeps use each dt for both runs");
    }
    s.reference_dt = r.optional("numerics", "reference_dt", s.propagator.dt);
    if (s.sweep) {
      for (double dt : s.sweep->values) {
        guarded(r, "sweep", "values", [&] {
          PropagatorConfig c = s.propagator;
          c.dt = dt;
          c.validate();
          return 0;
        });
      }
    } else {
      guarded(r, "numerics", "dt", [&] {
        s.propagator.validate();
        return 0;
      });
    }
    if (!(s.reference_dt > 0.0)) r.fail("numerics", "reference_dt", "must be positive");

    s.tolerances.fidelity = r.optional("tolerances", "fidelity", s.tolerances.fidelity);
    s.tolerances.energy_residual = r.optional("tolerances", "energy_residual", s.tolerances.energy_residual);
  } else {
    s.classical.x0 = r.require("initial_state", "x0");
    s.classical.p0 = r.require("initial_state", "p0");
    s.tol = s.sweep ? s.sweep->values.front() : r.require("numerics", "tol");
    const std::vector<double> tols = s.sweep ? s.sweep->values : std::vector<double>{s.tol};
    for (double t : tols) {
      if (!(t >= 1e-15 && t <= 1e-2)) {
        r.fail(s.sweep ? "sweep" : "numerics", s.sweep ? "values" : "tol", "tolerance must lie in [1e-15, 1e-2]");
      }
    }
    s.tolerances.trajectory_error = r.optional("tolerances", "trajectory_error", s.tolerances.trajectory_error);
  }
  if (s.sweep) {
    if (!quantum) {
      s.tolerances.order_min = kClassicalTolOrderBand.lo;
      s.tolerances.order_max = kClassicalTolOrderBand.hi;
    }
    s.tolerances.order_min = r.optional("tolerances", "order_min", s.tolerances.order_min);
    s.tolerances.order_max = r.optional("tolerances", "order_max", s.tolerances.order_max);
    if (!(s.tolerances.order_max > s.tolerances.order_min)) {
      r.fail("tolerances", "order_max", "must exceed order_min");
    }
  }
  for (double t : {s.tolerances.fidelity, s.tolerances.energy_residual, s.tolerances.trajectory_error}) {
    if (!(t > 0.0)) r.fail("tolerances", "", "tolerances must be positive");
  }

  s.output_directory = r.text("outputs", "directory").value_or(s.name);
  if (s.output_directory.empty() || s.output_directory.find("..") != std::string::npos ||
      s.output_directory.front() == '/') {
    r.fail("outputs", "directory", "must be a non-empty relative path without '..'");
  }
  s.formats = {"csv", "json"};
  if (auto f = r.text("outputs", "formats")) {
    s.formats = split_list(*f);
    if (s.formats.empty()) r.fail("outputs", "formats", "empty list");
    for (const auto& x : s.formats) {
      if (x != "csv" && x != "json") r.fail("outputs", "formats", "'" + x + "' is not csv or json");
    }
  }

  r.finish(allowed);
  return s;
}

}  // namespace

Scenario parse_scenario_text(const std::string& text, const std::string& origin) {
  pt::ptree root;
  std::istringstream in(text);
  try {
    pt::read_ini(in, root);
  } catch (const pt::ini_parser_error& e) {
    throw ScenarioError(origin + ": line " + std::to_string(e.line()) + ": " + e.message());
  }
  Reader r(root, origin);
  return build(r);
}

Scenario parse_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioError(path.string() + ": cannot open scenario file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario_text(buf.str(), path.string());
}

}  // namespace timecov
