#pragma once

// Batch commands behind tools/orbitgauge. Every command is a function of a
// RunConfig; it writes its outputs atomically, stamps them with the config
// hash, and returns the process exit code.
//
// Exit codes: 0 ok, 1 usage / I/O error or failed check, 2 singular orbit or
// chart point, 3 relaxation did not converge.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "orbitgauge/acceptance.hpp"
#include "orbitgauge/field_io.hpp"

namespace orbitgauge {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitSingular = 2;
inline constexpr int kExitNoConvergence = 3;

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Flat key=value configuration. Unknown keys are rejected; missing keys take
// the defaults below. The hash covers every effective value.
class RunConfig {
 public:
  static const std::map<std::string, std::string>& defaults() {
    static const std::map<std::string, std::string> d = {
        {"n1", "3"},          {"n2", "3"},          {"seed", "1"},
        {"tol", "1e-14"},     {"max_sweeps", "20000"}, {"omega", "1.7"},
        {"restarts", "8"},    {"threads", "0"},     {"fd_first", "1e-5"},
        {"fd_second", "1e-4"}, {"input", ""},       {"input2", ""},
        {"output", ""},       {"report", ""},       {"function", "plaquette"},
        {"steps", "100"},     {"t_max", "1"},       {"tau_seed", "0"},
        {"tau_scale", "0.4"}, {"convention", "first"},
    };
    return d;
  }

  RunConfig() : values_(defaults()) {}

  static RunConfig parse(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
      cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
  }

  static RunConfig from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
  }

  void set(const std::string& key, const std::string& value) {
    if (!defaults().count(key)) throw ConfigError("unknown config key '" + key + "'");
    values_[key] = value;
  }

  // "key=value" as given on the command line.
  void set_assignment(const std::string& kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + kv + "'");
    set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
  }

  const std::string& get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
    return it->second;
  }

  double get_double(const std::string& key) const {
    try {
      std::size_t pos = 0;
      const double v = std::stod(get(key), &pos);
      if (pos != get(key).size()) throw std::invalid_argument(key);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "' is not a number: '" + get(key) + "'");
    }
  }

  long long get_int(const std::string& key) const {
    try {
      std::size_t pos = 0;
      const long long v = std::stoll(get(key), &pos);
      if (pos != get(key).size()) throw std::invalid_argument(key);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "' is not an integer: '" + get(key) + "'");
    }
  }

  std::uint64_t seed() const { return static_cast<std::uint64_t>(get_int("seed")); }

  void validate() const {
    if (get_int("n1") < 2 || get_int("n2") < 2) throw ConfigError("n1 and n2 must be at least 2");
    for (const char* k : {"tol", "fd_first", "fd_second", "t_max", "tau_scale"})
      if (!(get_double(k) > 0.0)) throw ConfigError(std::string(k) + " must be > 0");
    if (get_int("max_sweeps") < 1 || get_int("restarts") < 1 || get_int("steps") < 1)
      throw ConfigError("max_sweeps, restarts and steps must be >= 1");
    const double omega = get_double("omega");
    if (!(omega >= 1.0 && omega < 2.0)) throw ConfigError("omega must lie in [1, 2)");
    if (get("convention") != "first" && get("convention") != "last") throw ConfigError("convention is first or last");
  }

  std::string canonical() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
    return out;
  }

  // FNV-1a over the canonical text, as 16 hex digits.
  std::string hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical()) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }

  RelaxationOptions relaxation() const {
    RelaxationOptions opt;
    opt.tol = get_double("tol");
    opt.max_sweeps = static_cast<int>(get_int("max_sweeps"));
    opt.omega = get_double("omega");
    opt.restarts = static_cast<int>(get_int("restarts"));
    opt.seed = seed();
    opt.threads = static_cast<int>(get_int("threads"));
    return opt;
  }

  LbOptions lb_options() const { return {get_double("fd_first"), get_double("fd_second")}; }

  ResidualConvention convention() const {
    return get("convention") == "last" ? ResidualConvention::last_eligible : ResidualConvention::first_eligible;
  }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  std::map<std::string, std::string> values_;
};

// ---------------------------------------------------------------------------

struct CommandResult {
  int exit_code = kExitOk;
  nlohmann::ordered_json report = nlohmann::ordered_json::object();
  std::string lines;  // extra JSON-lines printed before the report (check)
};

namespace cli_detail {

inline nlohmann::ordered_json header(const RunConfig& cfg, const std::string& command) {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["config"] = cfg.hash();
  return j;
}

inline std::string csv_matrix(const RunConfig& cfg, const std::vector<std::string>& names, const Eigen::MatrixXd& m) {
  std::string out = "# config " + cfg.hash() + "\n";
  for (std::size_t i = 0; i < names.size(); ++i) out += (i ? "," : "") + names[i];
  out += "\n";
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out += (c ? "," : "") + format_double(m(r, c));
    out += "\n";
  }
  return out;
}

inline void require_output(const RunConfig& cfg) {
  if (cfg.get("output").empty()) throw ConfigError("output path not set");
}

inline GaugeField sample_field(const RunConfig& cfg) {
  std::mt19937_64 rng(cfg.seed());
  return random_field(Lattice(static_cast<int>(cfg.get_int("n1")), static_cast<int>(cfg.get_int("n2"))), rng);
}

// The input file if given, otherwise the Haar sample for (seed, n1, n2).
inline GaugeField input_field(const RunConfig& cfg, const std::string& key = "input") {
  if (cfg.get(key).empty()) return sample_field(cfg);
  return field_io_read(cfg.get(key));
}

inline CommandResult singular(CommandResult r, const std::string& what) {
  r.exit_code = kExitSingular;
  r.report["status"] = "singular";
  r.report["detail"] = what;
  return r;
}

inline std::string edge_name(const std::optional<EdgeId>& e) { return e ? to_string(*e) : ""; }

}  // namespace cli_detail

inline CommandResult cmd_sample(const RunConfig& cfg) {
  cfg.validate();
  cli_detail::require_output(cfg);
  const GaugeField u = cli_detail::sample_field(cfg);
  field_io_write(cfg.get("output"), u, {"config " + cfg.hash(), "seed " + cfg.get("seed")});
  CommandResult r{kExitOk, cli_detail::header(cfg, "sample"), ""};
  r.report["status"] = "ok";
  r.report["edges"] = u.lattice().edge_count();
  return r;
}

inline CommandResult cmd_gauge_fix(const RunConfig& cfg) {
  cfg.validate();
  cli_detail::require_output(cfg);
  const GaugeField u = cli_detail::input_field(cfg);
  const FixedConfiguration f = reconstruct_orbit_representative(u, cfg.convention());
  field_io_write(cfg.get("output"), f.field,
                 {"config " + cfg.hash(), std::string("singular ") + (f.singular ? "1" : "0")});
  CommandResult r{kExitOk, cli_detail::header(cfg, "gauge-fix"), ""};
  r.report["phi"] = f.phi;
  r.report["reference_edge"] = cli_detail::edge_name(f.reference_edge);
  r.report["residual_unfixed"] = f.residual_unfixed;
  r.report["violation"] = fixing_violation(u, f);
  if (f.singular) return cli_detail::singular(std::move(r), "U_2(1,0) is central");
  r.report["status"] = "ok";
  return r;
}

inline CommandResult cmd_dist(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.get("input").empty() || cfg.get("input2").empty()) throw ConfigError("dist needs input and input2");
  const GaugeField u = field_io_read(cfg.get("input"));
  const GaugeField v = field_io_read(cfg.get("input2"));
  cli_detail::require_output(cfg);
  const DistanceResult d = orbit_distance(u, v, cfg.relaxation());
  CommandResult r{kExitOk, cli_detail::header(cfg, "dist"), ""};
  r.report["rho"] = d.rho;
  r.report["rho_sq"] = d.rho_sq;
  r.report["distance_I"] = distance_I(u, v);
  r.report["sweeps"] = d.iterations;
  r.report["converged"] = d.converged;
  r.report["restart_values"] = d.restart_values;
  r.report["status"] = d.converged ? "ok" : "not_converged";
  if (!d.converged) r.exit_code = kExitNoConvergence;
  write_file_atomic(cfg.get("output"), r.report.dump() + "\n");
  return r;
}

namespace cli_detail {

template <class Body>
CommandResult at_chart_point(const RunConfig& cfg, const std::string& command, Body body) {
  cfg.validate();
  CommandResult r{kExitOk, header(cfg, command), ""};
  const GaugeField u = input_field(cfg);
  const ChartPoint p = u.lattice().edge_count() == 1
                           ? chart_point_of(u)
                           : chart_point(reconstruct_orbit_representative(u, cfg.convention()));
  try {
    body(p, u, r);
  } catch (const StabilizerDegeneracyError& e) {
    return singular(std::move(r), e.what());
  } catch (const ChartSingularityError& e) {
    return singular(std::move(r), e.what());
  }
  r.report["status"] = "ok";
  return r;
}

}  // namespace cli_detail

inline CommandResult cmd_invmetric(const RunConfig& cfg) {
  cli_detail::require_output(cfg);
  return cli_detail::at_chart_point(cfg, "invmetric", [&](const ChartPoint& p, const GaugeField&, CommandResult& r) {
    const Eigen::MatrixXd g_inv = inverse_metric(gauss_substitution(p));
    write_file_atomic(cfg.get("output"), cli_detail::csv_matrix(cfg, p.layout->names(), g_inv));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g_inv);
    r.report["dimension"] = p.layout->dimension();
    r.report["min_eigenvalue"] = es.eigenvalues().minCoeff();
  });
}

inline CommandResult cmd_metric(const RunConfig& cfg) {
  cli_detail::require_output(cfg);
  return cli_detail::at_chart_point(cfg, "metric", [&](const ChartPoint& p, const GaugeField&, CommandResult& r) {
    const MetricPair m = metric_pair(p);
    write_file_atomic(cfg.get("output"), cli_detail::csv_matrix(cfg, p.layout->names(), m.g));
    const ConsistencyReport c = consistency_check(m);
    r.report["dimension"] = p.layout->dimension();
    r.report["gauge_rank"] = m.gauge_rank;
    r.report["rank_deficient"] = m.rank_deficient;
    r.report["has_constraint"] = m.has_constraint;
    r.report["complement_residual"] = c.complement_residual;
    r.report["constraint_residual"] = c.constraint_residual;
    r.report["consistent"] = c.pass;
  });
}

inline FieldFunction named_function(const std::string& name) {
  if (name == "plaquette") {
    return [](const GaugeField& u) {
      double s = 0.0;
      for (const Site& c : plaquette_corners(u.lattice())) s += plaquette_trace(u, c);
      return s;
    };
  }
  if (name == "plaquette_squared") {
    return [](const GaugeField& u) {
      double s = 0.0;
      for (const Site& c : plaquette_corners(u.lattice())) s += std::pow(plaquette_trace(u, c), 2);
      return s;
    };
  }
  if (name == "constant") return [](const GaugeField&) { return 1.0; };
  throw ConfigError("unknown function '" + name + "' (plaquette, plaquette_squared, constant)");
}

inline CommandResult cmd_lb_apply(const RunConfig& cfg) {
  const FieldFunction f = named_function(cfg.get("function"));
  return cli_detail::at_chart_point(cfg, "lb-apply", [&](const ChartPoint& p, const GaugeField& u, CommandResult& r) {
    const double chart = lb_apply(p, f, cfg.lb_options());
    const double direct = lb_direct(u, f, cfg.lb_options().second_step);
    r.report["function"] = cfg.get("function");
    r.report["value"] = f(u);
    r.report["minus_laplacian_chart"] = chart;
    r.report["minus_laplacian_direct"] = direct;
    r.report["gap"] = std::abs(chart - direct);
  });
}

inline CommandResult cmd_geodesic(const RunConfig& cfg) {
  cfg.validate();
  cli_detail::require_output(cfg);
  const Lattice lat(static_cast<int>(cfg.get_int("n1")), static_cast<int>(cfg.get_int("n2")));
  const auto tau_seed = static_cast<std::uint64_t>(cfg.get_int("tau_seed"));
  std::mt19937_64 rng(tau_seed ? tau_seed : cfg.seed());
  std::normal_distribution<double> n01;
  std::vector<Vec3> tau(static_cast<std::size_t>(lat.edge_count()));
  const double scale = cfg.get_double("tau_scale");
  for (auto& v : tau) {
    const double a = n01(rng), b = n01(rng), c = n01(rng);
    v = scale * Vec3(a, b, c);
  }
  const GeodesicPath path = geodesic_path(lat, tau, static_cast<int>(cfg.get_int("steps")), cfg.get_double("t_max"));

  std::string csv = "# config " + cfg.hash() + "\nt,singular,near_chart_singularity,jump,step";
  for (const auto& n : path.names) csv += "," + n;
  csv += "\n";
  int singular_after_start = 0;
  for (std::size_t i = 0; i < path.samples.size(); ++i) {
    const GeodesicSample& s = path.samples[i];
    if (i > 0 && s.singular) ++singular_after_start;
    csv += format_double(s.t) + "," + (s.singular ? "1" : "0") + "," + (s.near_chart_singularity ? "1" : "0") + "," +
           (s.jump ? "1" : "0") + "," + format_double(s.step);
    for (Eigen::Index k = 0; k < s.coords.size(); ++k) csv += "," + format_double(s.coords[k]);
    csv += "\n";
  }
  write_file_atomic(cfg.get("output"), csv);

  CommandResult r{kExitOk, cli_detail::header(cfg, "geodesic"), ""};
  r.report["samples"] = path.samples.size();
  r.report["max_step"] = path.max_step();
  r.report["unflagged_steps"] = path.unflagged_steps();
  r.report["singular_samples_after_start"] = singular_after_start;
  // Every path starts at the identity orbit; only later singular samples count.
  if (singular_after_start > 0) return cli_detail::singular(std::move(r), "path crosses a singular orbit");
  r.report["status"] = "ok";
  return r;
}

// ---------------------------------------------------------------------------
// Criterion 9 and the full check.

using Command = CommandResult (*)(const RunConfig&);

inline std::vector<std::pair<std::string, Command>> all_commands() {
  return {{"sample", cmd_sample},   {"gauge-fix", cmd_gauge_fix}, {"dist", cmd_dist},
          {"invmetric", cmd_invmetric}, {"metric", cmd_metric}, {"lb-apply", cmd_lb_apply},
          {"geodesic", cmd_geodesic}};
}

inline std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Writes the report line to the `report` path (atomically) and returns it.
inline std::string emit_report(const RunConfig& cfg, const CommandResult& r) {
  const std::string line = r.report.dump() + "\n";
  if (!cfg.get("report").empty()) write_file_atomic(cfg.get("report"), line);
  return line;
}

// 9. Runs every command twice with the same config and compares output bytes.
inline CriterionResult check_determinism(const std::filesystem::path& workdir, std::uint64_t seed) {
  std::filesystem::create_directories(workdir);
  const auto field_a = (workdir / "a.field").string();
  const auto field_b = (workdir / "b.field").string();
  CriterionResult out{9, "determinism", true, {}};
  for (const auto& [name, cmd] : all_commands()) {
    RunConfig cfg;
    cfg.set("seed", std::to_string(seed));
    cfg.set("n1", "3");
    cfg.set("n2", "3");
    cfg.set("steps", "20");
    cfg.set("output", name == "sample" ? field_a : (workdir / (name + ".out")).string());
    cfg.set("report", (workdir / (name + ".jsonl")).string());
    if (name != "sample") cfg.set("input", field_a);
    if (name == "dist") cfg.set("input2", field_b);
    if (name == "sample") {
      RunConfig other = cfg;
      other.set("seed", std::to_string(seed + 1));
      other.set("output", field_b);
      cmd_sample(other);
    }
    std::string first, second;
    for (int run = 0; run < 2; ++run) {
      emit_report(cfg, cmd(cfg));
      (run == 0 ? first : second) = read_bytes(cfg.get("output")) + read_bytes(cfg.get("report"));
    }
    const bool same = first == second;
    out.measured[name] = same ? "identical" : "differs";
    out.pass = out.pass && same;
  }
  return out;
}

struct CheckOptions {
  std::uint64_t seed = 20240601;
  bool inject_tree_perturbation = false;
  std::filesystem::path workdir = std::filesystem::temp_directory_path() / "orbitgauge_check";
};

inline std::vector<CriterionResult> run_acceptance(const CheckOptions& opt) {
  AcceptanceOptions a;
  a.seed = opt.seed;
  a.inject_tree_perturbation = opt.inject_tree_perturbation;
  std::vector<CriterionResult> out = run_library_criteria(a);
  out.push_back(check_determinism(opt.workdir, opt.seed));
  return out;
}

inline CommandResult cmd_check(const RunConfig& cfg, bool inject_tree_perturbation = false) {
  CheckOptions opt;
  opt.seed = cfg.seed();
  opt.inject_tree_perturbation = inject_tree_perturbation;
  std::string lines;
  bool all = true;
  for (const CriterionResult& c : run_acceptance(opt)) {
    lines += c.json_line() + "\n";
    all = all && c.pass;
  }
  if (!cfg.get("output").empty()) write_file_atomic(cfg.get("output"), "# config " + cfg.hash() + "\n" + lines);
  CommandResult r{all ? kExitOk : kExitError, cli_detail::header(cfg, "check"), lines};
  r.report["status"] = all ? "pass" : "fail";
  return r;
}

}  // namespace orbitgauge
