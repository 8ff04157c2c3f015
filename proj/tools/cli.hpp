#pragma once

// Command-line front end.  Kept in a header so the test suite can drive it
// in-process; tools/cdeph.cpp only forwards main().

#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cdeph/dephasing.hpp"
#include "cdeph/entanglement.hpp"
#include "cdeph/nonlocality.hpp"
#include "cdeph/parallel.hpp"
#include "cdeph/state_config.hpp"
#include "cdeph/states.hpp"

#ifndef CDEPH_VERSION
#define CDEPH_VERSION "0.0.0"
#endif

namespace cdeph::cli {

enum ExitCode { kOk = 0, kConfig = 2, kNumerical = 3 };

using json = nlohmann::json;

// --- parsing helpers -------------------------------------------------------

inline std::vector<double> parse_numbers(const std::string& text, char sep, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) raise(ErrorCode::ConfigError, std::string("malformed ") + what + ": " + text);
    out.push_back(v);
  }
  return out;
}

/// "start:stop:points".
inline std::vector<double> parse_grid(const std::string& text) {
  const auto v = parse_numbers(text, ':', "--t-grid");
  if (v.size() != 3) raise(ErrorCode::ConfigError, "--t-grid expects start:stop:points");
  if (v[2] != static_cast<double>(static_cast<int>(v[2]))) raise(ErrorCode::ConfigError, "grid points must be an integer");
  if (!(v[0] >= 0.0) || !(v[1] > v[0]) || v[2] < 2)
    raise(ErrorCode::ConfigError, "--t-grid needs start >= 0, stop > start and points >= 2");
  return linear_grid(v[0], v[1], static_cast<int>(v[2]));
}

/// "x,y,z", normalised.
inline FieldOrientation parse_orientation(const std::string& text) {
  const auto v = parse_numbers(text, ',', "--orientation");
  if (v.size() != 3) raise(ErrorCode::ConfigError, "--orientation expects x,y,z");
  const double norm = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  if (!(norm > 0.0) || !std::isfinite(norm)) raise(ErrorCode::ConfigError, "--orientation must be a nonzero vector");
  return FieldOrientation::normalized(v[0], v[1], v[2]);
}

/// "cauchy", "cauchy:x0,scale" or "cauchy:x0,:scale".
inline SpectralDistribution parse_spectrum(const std::string& text) {
  if (text == "cauchy") return SpectralDistribution::standard_cauchy();
  const std::string prefix = "cauchy:";
  if (text.rfind(prefix, 0) != 0) raise(ErrorCode::ConfigError, "--spectrum must be cauchy or cauchy:x0,scale");
  std::string body = text.substr(prefix.size());
  if (const auto pos = body.find(",:"); pos != std::string::npos) body.erase(pos + 1, 1);
  const auto v = parse_numbers(body, ',', "--spectrum");
  if (v.size() != 2) raise(ErrorCode::ConfigError, "--spectrum must be cauchy or cauchy:x0,scale");
  try {
    return SpectralDistribution::cauchy(v[0], v[1]);
  } catch (const Error& e) {
    raise(ErrorCode::ConfigError, e.what());
  }
}

inline sdp::Precision parse_precision(const std::string& text) {
  if (text == "double") return sdp::Precision::Double;
  if (text == "extended") return sdp::Precision::Extended;
  if (text == "quad") return sdp::Precision::Quad;
  raise(ErrorCode::ConfigError, "--precision must be double, extended or quad");
}

// --- formatting ------------------------------------------------------------

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline json complex_json(Complex c) { return json::array({c.real(), c.imag()}); }

inline json matrix_json(const ComplexMatrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(complex_json(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// --- shared options --------------------------------------------------------

struct Common {
  std::string family;
  std::string params;
  std::string state_json;
  std::optional<double> t;
  std::string t_grid;
  std::string orientation = "0,0,1";
  std::string spectrum = "cauchy";
  std::uint64_t seed = 42;
  std::string out;
  bool deterministic = false;
  double tol_invariance = 1e-5;
  int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  std::string precision = "double";
  std::optional<int> max_iterations;

  StateSource state() const {
    if (family.empty() == state_json.empty()) raise(ErrorCode::ConfigError, "give exactly one of --family or --state-json");
    if (!state_json.empty()) {
      if (!params.empty()) raise(ErrorCode::ConfigError, "--params only applies to --family");
      return load_state_json(state_json);
    }
    return make_state_source(family, parse_params(params));
  }

  DephasingChannel channel(int n_qubits) const {
    return DephasingChannel(n_qubits, parse_orientation(orientation), parse_spectrum(spectrum));
  }

  GenuineNegativityOptions gn() const {
    auto o = GenuineNegativityOptions::for_precision(parse_precision(precision));
    if (max_iterations) o.sdp.max_iterations = *max_iterations;
    return o;
  }

  std::vector<double> grid(const std::string& fallback) const { return parse_grid(t_grid.empty() ? fallback : t_grid); }
};

/// Writes to --out when given, otherwise to the supplied stream.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : os_(&fallback) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) raise(ErrorCode::ConfigError, "cannot write " + path);
      os_ = file_.get();
    }
  }
  std::ostream& operator*() { return *os_; }
  void flush() { os_->flush(); }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* os_;
};

inline std::string grid_text(const std::vector<double>& g) {
  return detail::shortest(g.front()) + ":" + detail::shortest(g.back()) + ":" + std::to_string(g.size());
}

inline std::string orientation_text(const DephasingChannel& ch) {
  const auto& n = ch.orientation();
  return detail::shortest(n.x()) + "," + detail::shortest(n.y()) + "," + detail::shortest(n.z());
}

inline void csv_metadata(std::ostream& os, const Common& c, const std::string& command,
                         const std::vector<std::pair<std::string, std::string>>& extra) {
  os << "# tool=cdeph\n# version=" << CDEPH_VERSION << "\n# command=" << command << '\n';
  for (const auto& [k, v] : extra) os << "# " << k << '=' << v << '\n';
  os << "# seed=" << c.seed << '\n';
  if (!c.deterministic) os << "# timestamp=" << utc_timestamp() << '\n';
}

inline std::string one_line(std::string s) {
  for (auto& ch : s)
    if (ch == '\n' || ch == '\r') ch = ' ';
  return s;
}

// --- commands --------------------------------------------------------------

inline int cmd_evolve(const Common& c, std::ostream& out) {
  if (!c.t) raise(ErrorCode::ConfigError, "evolve needs --t");
  if (!(*c.t >= 0.0)) raise(ErrorCode::ConfigError, "--t must be non-negative");
  const auto src = c.state();
  const auto channel = c.channel(src.n_qubits());
  const DensityMatrix rho = evolve_source(src, *c.t, channel);
  const auto& n = channel.orientation();
  json j;
  j["command"] = "evolve";
  j["version"] = CDEPH_VERSION;
  if (!c.deterministic) j["timestamp"] = utc_timestamp();
  j["state"] = src.description;
  j["n_qubits"] = rho.n_qubits();
  j["t"] = *c.t;
  j["orientation"] = {n.x(), n.y(), n.z()};
  j["spectrum"] = channel.spectrum().describe();
  j["rho"] = matrix_json(rho.matrix());
  Sink sink(c.out, out);
  *sink << j.dump(2) << '\n';
  return kOk;
}

inline int cmd_sweep_entanglement(const Common& c, std::ostream& out) {
  const auto src = c.state();
  const auto grid = c.grid("0:5:101");
  const auto channel = c.channel(src.n_qubits());
  const auto opt = c.gn();
  const auto masks = all_bipartitions(src.n_qubits());
  const DensityMatrix rho0 = evolve_source(src, grid.front(), channel);

  struct Row {
    double e = 0.0;
    std::vector<double> neg;
    double change = 0.0;
    std::string error;
    bool numerical = false;
  };
  const auto rows = parallel_map(grid.size(), c.jobs, [&](std::size_t i) {
    Row r;
    try {
      const DensityMatrix rho = evolve_source(src, grid[i], channel);
      r.e = genuine_negativity(rho, opt).value;
      for (const auto& m : masks) r.neg.push_back(negativity(rho, m));
      r.change = frobenius_distance(rho.matrix(), rho0.matrix());
    } catch (const Error& e) {
      r.error = e.what();
      r.numerical = !e.is_config_error();
      if (!r.numerical) throw;
    }
    return r;
  });

  Sink sink(c.out, out);
  auto& os = *sink;
  csv_metadata(os, c, "sweep-entanglement",
               {{"state", src.description},
                {"n_qubits", std::to_string(src.n_qubits())},
                {"orientation", orientation_text(channel)},
                {"spectrum", channel.spectrum().describe()},
                {"t_grid", grid_text(grid)},
                {"precision", c.precision},
                {"gap_tolerance", detail::shortest(opt.sdp.gap_tolerance)},
                {"feasibility_tolerance", detail::shortest(opt.sdp.feasibility_tolerance)},
                {"max_iterations", std::to_string(opt.sdp.max_iterations)},
                {"tol_invariance", detail::shortest(c.tol_invariance)}});
  os << "t,E";
  for (const auto& m : masks) os << ",N_" << m.label();
  os << ",state_change_norm\n";
  double max_dev = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& r = rows[i];
    if (!r.error.empty()) {
      os << "FAILED," << fmt(grid[i]) << '\n' << "# error=" << one_line(r.error) << '\n';
      sink.flush();
      return kNumerical;
    }
    os << fmt(grid[i]) << ',' << fmt(r.e);
    for (double v : r.neg) os << ',' << fmt(v);
    os << ',' << fmt(r.change) << '\n';
    max_dev = std::max(max_dev, std::abs(r.e - rows.front().e));
  }
  os << "# invariance=" << (max_dev <= c.tol_invariance ? "Invariant" : "Decaying") << " max_deviation=" << fmt(max_dev)
     << '\n';
  return kOk;
}

inline int cmd_sweep_bell(const Common& c, std::ostream& out) {
  const auto src = c.state();
  if (src.n_qubits() != 4) raise(ErrorCode::ConfigError, "sweep-bell needs a four-qubit state");
  const auto grid = c.grid("0:3:101");
  const auto channel = c.channel(4);
  const ComplexMatrix op = transported_ardehali();
  const auto values = parallel_map(grid.size(), c.jobs, [&](std::size_t i) {
    return bell_expectation(evolve_source(src, grid[i], channel), op);
  });

  Sink sink(c.out, out);
  auto& os = *sink;
  csv_metadata(os, c, "sweep-bell",
               {{"state", src.description},
                {"n_qubits", "4"},
                {"orientation", orientation_text(channel)},
                {"spectrum", channel.spectrum().describe()},
                {"t_grid", grid_text(grid)},
                {"operator", "ardehali transported by I,X,I,X"},
                {"threshold", "8"}});
  os << "t,bell_expectation,is_genuinely_nonlocal\n";
  std::optional<double> crossing;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const bool nl = genuine_nonlocality_test(values[i], 4);
    if (!nl && !crossing && i > 0 && genuine_nonlocality_test(values[i - 1], 4)) crossing = grid[i];
    os << fmt(grid[i]) << ',' << fmt(values[i]) << ',' << (nl ? 1 : 0) << '\n';
  }
  os << "# numeric_crossing=" << (crossing ? fmt(*crossing) : std::string("none")) << '\n';
  if (src.is_family() && std::holds_alternative<RhoAlphaBeta>(src.family())) {
    const auto p = std::get<RhoAlphaBeta>(src.family());
    const auto sd = sudden_death_time(p.alpha, p.beta);
    os << "# sudden_death=" << to_string(sd.kind);
    if (sd.kind == SuddenDeath::Kind::At) os << ',' << fmt(sd.time);
    os << '\n';
  } else {
    os << "# sudden_death=unavailable\n";
  }
  return kOk;
}

inline int cmd_invariance_scan(const Common& c, int samples, int qubits, bool dfs_biased, std::ostream& out) {
  if (samples < 1) raise(ErrorCode::ConfigError, "--samples must be at least 1");
  ScanOptions so;
  so.n_qubits = qubits;
  so.n_samples = samples;
  so.seed = c.seed;
  so.grid = c.grid("0:5:11");
  so.tol = c.tol_invariance;
  so.dfs_biased = dfs_biased || qubits == 4;
  so.jobs = c.jobs;
  so.gn = c.gn();
  const auto rep = random_invariance_scan(so);

  json j;
  j["command"] = "invariance-scan";
  j["version"] = CDEPH_VERSION;
  if (!c.deterministic) j["timestamp"] = utc_timestamp();
  j["n_qubits"] = rep.n_qubits;
  j["seed"] = rep.seed;
  j["dfs_biased"] = so.dfs_biased;
  j["grid"] = rep.grid;
  j["tol"] = rep.tol;
  j["samples_tested"] = rep.samples.size();
  j["nontrivial_hits"] = rep.nontrivial_hits();
  json arr = json::array();
  for (const auto& s : rep.samples) {
    json comps = json::array();
    for (const auto& p : s.components) comps.push_back({{"kind", p.kind}, {"weight", p.weight}});
    arr.push_back({{"index", s.index},
                   {"seed", s.seed},
                   {"components", comps},
                   {"e0", s.e0},
                   {"max_delta_e", s.max_delta_e},
                   {"max_state_change", s.max_state_change},
                   {"invariant", s.invariant},
                   {"nontrivial_hit", s.nontrivial_hit}});
  }
  j["samples"] = std::move(arr);
  Sink sink(c.out, out);
  *sink << j.dump(2) << '\n';
  return kOk;
}

inline int cmd_witness(const Common& c, std::ostream& out) {
  const double t = c.t.value_or(0.0);
  if (!(t >= 0.0)) raise(ErrorCode::ConfigError, "--t must be non-negative");
  const auto src = c.state();
  const auto channel = c.channel(src.n_qubits());
  const DensityMatrix rho = evolve_source(src, t, channel);
  const auto r = genuine_negativity(rho, c.gn());
  const auto rep = verify_witness(r, rho);

  json j;
  j["command"] = "witness";
  j["version"] = CDEPH_VERSION;
  if (!c.deterministic) j["timestamp"] = utc_timestamp();
  j["state"] = src.description;
  j["t"] = t;
  j["E"] = r.value;
  j["expectation"] = rep.expectation;
  j["verdict"] = rep.entanglement_detected ? "genuine multipartite entanglement detected" : "no entanglement detected";
  j["solver"] = {{"status", sdp::to_string(r.status)},
                 {"duality_gap", r.duality_gap},
                 {"max_residual", r.max_residual},
                 {"iterations", r.iterations},
                 {"precision", sdp::to_string(r.precision)}};
  j["W"] = matrix_json(r.witness);
  json parts = json::array();
  for (const auto& cert : r.decomposition)
    parts.push_back({{"bipartition", cert.mask.label()}, {"P", matrix_json(cert.p)}, {"Q", matrix_json(cert.q)}});
  j["decomposition"] = std::move(parts);
  json checks = json::array();
  for (const auto& ch : rep.checks)
    checks.push_back({{"name", ch.name}, {"value", ch.value}, {"tolerance", ch.tolerance}, {"passed", ch.passed}});
  j["verification"] = {{"all_passed", rep.all_passed()}, {"checks", checks}};
  Sink sink(c.out, out);
  *sink << j.dump(2) << '\n';
  return rep.all_passed() ? kOk : kNumerical;
}

/// gnuplot script for a CSV written by one of the sweeps.
inline int cmd_emit_plot_script(const std::string& csv, const std::string& out_path, std::ostream& out) {
  std::ifstream in(csv);
  if (!in) raise(ErrorCode::ConfigError, "cannot open " + csv);
  std::string line, command, header;
  while (std::getline(in, line)) {
    if (line.rfind("# command=", 0) == 0) command = line.substr(10);
    if (!line.empty() && line[0] != '#') {
      header = line;
      break;
    }
  }
  if (header.empty()) raise(ErrorCode::ConfigError, csv + " has no column header");
  std::vector<std::string> cols;
  {
    std::stringstream ss(header);
    std::string col;
    while (std::getline(ss, col, ',')) cols.push_back(col);
  }
  Sink sink(out_path, out);
  auto& os = *sink;
  os << "# gnuplot script for " << csv << "\n"
     << "set datafile separator ','\n"
     << "set datafile commentschars '#'\n"
     << "set key autotitle columnhead\n"
     << "set xlabel 'Gamma t'\n"
     << "set grid\n";
  const std::string file = "'" + csv + "'";
  if (command == "sweep-bell") {
    os << "set ylabel '<B_A>'\n"
       << "plot " << file << " using 1:2 with lines lw 2 title 'bell expectation', \\\n"
       << "     8 with lines dt 2 title 'threshold 8'\n";
  } else if (command == "sweep-entanglement") {
    os << "set ylabel 'genuine negativity'\n"
       << "set yrange [0:0.55]\n"
       << "plot " << file << " using 1:2 with lines lw 2 title 'E'";
    for (std::size_t k = 2; k + 1 < cols.size(); ++k)
      os << ", \\\n     " << file << " using 1:" << k + 1 << " with lines dt 3 title '" << cols[k] << "'";
    os << '\n';
  } else {
    raise(ErrorCode::ConfigError, csv + " was not written by sweep-entanglement or sweep-bell");
  }
  os << "pause -1\n";
  return kOk;
}

// --- entry point -----------------------------------------------------------

inline void add_state_options(CLI::App* sub, Common& c) {
  sub->add_option("--family", c.family, "rho_a, rho_ab, rho_eta, rho_alpha, rho_alpha_beta, ghz, w, bell");
  sub->add_option("--params", c.params, "family parameters as k=v,...");
  sub->add_option("--state-json", c.state_json, "JSON state config (family or mixture)");
  sub->add_option("--orientation", c.orientation, "field direction x,y,z")->capture_default_str();
  sub->add_option("--spectrum", c.spectrum, "cauchy or cauchy:x0,scale")->capture_default_str();
}

inline void add_output_options(CLI::App* sub, Common& c) {
  sub->add_option("--out", c.out, "output path (default stdout)");
  sub->add_flag("--deterministic", c.deterministic, "omit the timestamp so reruns are byte-identical");
  sub->add_option("--seed", c.seed, "master seed")->capture_default_str();
}

inline void add_solver_options(CLI::App* sub, Common& c) {
  sub->add_option("--precision", c.precision, "double, extended or quad")->capture_default_str();
  sub->add_option("--jobs", c.jobs, "worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--max-iterations", c.max_iterations, "interior-point iteration cap")->check(CLI::PositiveNumber);
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Collective dephasing: entanglement and nonlocality sweeps"};
  app.require_subcommand(1);
  app.set_version_flag("--version", CDEPH_VERSION);
  Common c;
  int samples = 100;
  int qubits = 3;
  bool dfs_biased = false;
  std::string csv;

  auto* evolve = app.add_subcommand("evolve", "print rho(t) as JSON");
  add_state_options(evolve, c);
  add_output_options(evolve, c);
  evolve->add_option("--t", c.t, "time in units of 1/Gamma");

  auto* sweep_e = app.add_subcommand("sweep-entanglement", "E(t) and bipartite negativities as CSV");
  add_state_options(sweep_e, c);
  add_output_options(sweep_e, c);
  add_solver_options(sweep_e, c);
  sweep_e->add_option("--t-grid", c.t_grid, "start:stop:points (default 0:5:101)");
  sweep_e->add_option("--tol-invariance", c.tol_invariance, "invariance tolerance")->capture_default_str();

  auto* sweep_b = app.add_subcommand("sweep-bell", "Ardehali expectation along rho(t) as CSV");
  add_state_options(sweep_b, c);
  add_output_options(sweep_b, c);
  sweep_b->add_option("--t-grid", c.t_grid, "start:stop:points (default 0:3:101)");
  sweep_b->add_option("--jobs", c.jobs, "worker threads")->check(CLI::PositiveNumber);

  auto* scan = app.add_subcommand("invariance-scan", "random search for time-invariant E; JSON report");
  add_output_options(scan, c);
  add_solver_options(scan, c);
  scan->add_option("--samples", samples, "number of random mixtures")->capture_default_str();
  scan->add_option("--qubits", qubits, "3, or 4 for DFS-biased mixtures")->check(CLI::IsMember({3, 4}));
  scan->add_flag("--dfs-biased", dfs_biased, "mixtures dominated by DFS GHZ states (four qubits)");
  scan->add_option("--t-grid", c.t_grid, "start:stop:points (default 0:5:11)");
  scan->add_option("--tol-invariance", c.tol_invariance, "invariance tolerance")->capture_default_str();

  auto* witness = app.add_subcommand("witness", "optimal witness, decomposition and certificate report as JSON");
  add_state_options(witness, c);
  add_output_options(witness, c);
  add_solver_options(witness, c);
  witness->add_option("--t", c.t, "time in units of 1/Gamma (default 0)");

  auto* plot = app.add_subcommand("emit-plot-script", "gnuplot script for a sweep CSV");
  plot->add_option("--csv", csv, "CSV written by a sweep")->required();
  plot->add_option("--out", c.out, "script path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*evolve) return cmd_evolve(c, out);
    if (*sweep_e) return cmd_sweep_entanglement(c, out);
    if (*sweep_b) return cmd_sweep_bell(c, out);
    if (*scan) {
      if (dfs_biased && qubits != 4) raise(ErrorCode::ConfigError, "--dfs-biased needs --qubits 4");
      return cmd_invariance_scan(c, samples, qubits, dfs_biased, out);
    }
    if (*witness) return cmd_witness(c, out);
    if (*plot) return cmd_emit_plot_script(csv, c.out, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.is_config_error() ? kConfig : kNumerical;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kNumerical;
  }
  return kConfig;
}

}  // namespace cdeph::cli
