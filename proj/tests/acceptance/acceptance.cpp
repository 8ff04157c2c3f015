// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "cdeph/entanglement.hpp"
#include "cdeph/nonlocality.hpp"
#include "cdeph/random.hpp"
#include "cdeph/states.hpp"
#include "cli.hpp"

using namespace cdeph;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

struct Certified {
  double t = 0.0;
  GenuineNegativityResult result;
  WitnessReport report;
};

// Every E computed anywhere in the run, for the global bound.
std::vector<double> g_all_e;
// Every solution from the time sweeps and the two-qubit grid.
std::vector<Certified> g_certified;

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

Certified solve_certified(const DensityMatrix& rho, double t, const GenuineNegativityOptions& opt = {}) {
  Certified c;
  c.t = t;
  c.result = genuine_negativity(rho, opt);
  c.report = verify_witness(c.result, rho);
  g_all_e.push_back(c.result.value);
  g_certified.push_back(c);
  return c;
}

int run_criterion(int id, const std::string& title, double budget_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("error: ") + e.what()};
  }
  const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = budget_s <= 0.0 || dt < budget_s;
  const bool ok = o.passed && in_time;
  std::string timing = fmt("runtime %.2fs", dt);
  if (budget_s > 0.0) timing += fmt(" (limit %gs%s)", budget_s, in_time ? "" : ", exceeded");
  std::printf("%s %2d %s: %s; %s\n", ok ? "PASS" : "FAIL", id, title.c_str(), o.detail.c_str(), timing.c_str());
  std::fflush(stdout);
  return ok ? 0 : 1;
}

const std::vector<double> kA = {0.5, 1.0};
const std::vector<double> kB = {0.7, 0.75, 0.9};
const std::vector<double> kT = {0.0, 0.5, 1.0, 3.0};

std::vector<double> sorted(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v;
}

std::vector<double> eigen_list(const ComplexMatrix& m) {
  const RealVector ev = hermitian_eigenvalues(m);
  return sorted({ev.data(), ev.data() + ev.size()});
}

Outcome two_qubit_closed_form() {
  const auto mask = BipartitionMask::from_qubits(2, {1});
  double worst = 0.0;
  int checked = 0;
  for (double a : kA)
    for (double b : kB)
      for (double t : kT) {
        if (!(b > (1.0 + a) / (3.0 + a))) continue;
        const double expected = ((3.0 + a) * b - 1.0 - a) / 2.0;
        worst = std::max(worst, std::abs(negativity(evolved_family(RhoAB{a, b}, t), mask) - expected));
        ++checked;
      }
  return {worst <= 1e-8, fmt("%d points, max |N - ((3+a)b-1-a)/2| = %.3e (tol 1e-8)", checked, worst)};
}

Outcome spectrum_oracles() {
  rnd::Engine g(20240601);
  const auto mask = BipartitionMask::from_qubits(2, {1});
  double worst_ab = 0.0, worst_alpha_beta = 0.0;
  for (int draw = 0; draw < 100; ++draw) {
    const double a = rnd::uniform(g), b = rnd::uniform(g), t = rnd::uniform(g, 0.0, 5.0);
    const auto closed = closed_pt_spectrum_rho_ab(a, b, t);
    const auto cl = sorted({closed.begin(), closed.end()});
    const auto num = eigen_list(partial_transpose(evolved_family(RhoAB{a, b}, t), mask));
    for (std::size_t i = 0; i < cl.size(); ++i) worst_ab = std::max(worst_ab, std::abs(cl[i] - num[i]));
  }
  for (int draw = 0; draw < 100; ++draw) {
    const double al = rnd::uniform(g), be = rnd::uniform(g), t = rnd::uniform(g, 0.0, 5.0);
    const auto closed = closed_spectrum_rho_alpha_beta(al, be, t);
    const auto cl = sorted({closed.begin(), closed.end()});
    const auto num = eigen_list(evolved_family(RhoAlphaBeta{al, be}, t).matrix());
    for (std::size_t i = 0; i < cl.size(); ++i) worst_alpha_beta = std::max(worst_alpha_beta, std::abs(cl[i] - num[i]));
  }
  const double worst = std::max(worst_ab, worst_alpha_beta);
  return {worst <= 1e-10, fmt("200 draws, max deviation rho_ab PT %.3e, rho_alpha_beta %.3e (tol 1e-10)", worst_ab,
                              worst_alpha_beta)};
}

Outcome channel_contract() {
  rnd::Engine g(31337);
  double trace_err = 0.0, min_eig = 1.0, fast_err = 0.0;
  for (int s = 0; s < 100; ++s) {
    const int n = 2 + s % 3;
    const DensityMatrix rho0(rnd::random_density(g, n));
    const double nx = rnd::normal(g), ny = rnd::normal(g), nz = rnd::normal(g);
    const double t = rnd::uniform(g, 0.0, 10.0);
    const DephasingChannel ch(n, FieldOrientation::normalized(nx, ny, nz));
    const ComplexMatrix out = evolve(ch, rho0, t).matrix();
    trace_err = std::max(trace_err, std::abs(out.trace() - Complex(1.0, 0.0)));
    min_eig = std::min(min_eig, hermitian_eigenvalues(0.5 * (out + out.adjoint()))(0));
    const ComplexMatrix full = evolve(DephasingChannel::z_axis(n), rho0, t).matrix();
    fast_err = std::max(fast_err, max_abs(full - evolve_z_fastpath(rho0, t).matrix()));
  }
  const bool ok = trace_err <= 1e-10 && min_eig >= -1e-9 && fast_err <= 1e-10;
  return {ok, fmt("100 states, trace error %.3e (tol 1e-10), min eigenvalue %.3e (floor -1e-9), "
                  "fast path vs Theta-sum %.3e (tol 1e-10)",
                  trace_err, min_eig, fast_err)};
}

Outcome four_qubit_invariance() {
  const auto grid = linear_grid(0.0, 5.0, 26);
  bool ok = true;
  std::string detail;
  for (double beta : {0.8, 0.85}) {
    const DensityMatrix ref = evolved_family(RhoAlphaBeta{0.9, beta}, 0.0);
    double e0 = 0.0, dev = 0.0, change = 0.0;
    for (double t : grid) {
      const auto rho = evolved_family(RhoAlphaBeta{0.9, beta}, t);
      const double e = solve_certified(rho, t).result.value;
      if (t == grid.front()) e0 = e;
      dev = std::max(dev, std::abs(e - e0));
      change = std::max(change, frobenius_distance(rho.matrix(), ref.matrix()));
    }
    const bool good = dev <= 1e-5 && change >= 1e-3;
    ok = ok && good;
    detail += fmt("beta=%g E(0)=%.9f max|dE|=%.3e max|drho|=%.3e%s; ", beta, e0, dev, change, good ? "" : " [fail]");
  }
  std::vector<double> e;
  for (double t : grid) e.push_back(solve_certified(evolved_family(RhoAlphaBeta{0.9, 0.1}, t), t).result.value);
  int violations = 0;
  double first_flat = -1.0;
  for (std::size_t i = 1; i < e.size(); ++i)
    if (!(e[i] < e[i - 1])) {
      ++violations;
      if (first_flat < 0.0) first_flat = grid[i];
    }
  const double drop = e.front() - e.back();
  const bool decay_ok = violations == 0 && drop >= 0.01;
  ok = ok && decay_ok;
  detail += fmt("beta=0.1 drop=%.6f, %d non-decreasing steps", drop, violations);
  if (violations > 0)
    detail += fmt(" (E = %.3e from t=%g onward: entanglement sudden death)", e.back(), first_flat);
  return {ok, detail};
}

Outcome three_qubit_decay() {
  const auto grid = linear_grid(0.0, 5.0, 26);
  const auto opt = GenuineNegativityOptions::for_precision(sdp::Precision::Quad);
  bool ok = true;
  std::string detail;
  for (double eta : {0.9, 0.99}) {
    std::vector<wide_real> e;
    for (double t : grid) e.push_back(solve_certified(evolved_family(RhoEta{eta}, t), t, opt).result.value_extended);
    int violations = 0;
    for (std::size_t i = 1; i < e.size(); ++i)
      if (!(e[i] < e[i - 1])) ++violations;
    InvarianceOptions io;
    io.gn = opt;
    const auto inv = detect_time_invariance(RhoEta{eta}, grid, io);
    const bool good = violations == 0 && !inv.invariant();
    ok = ok && good;
    detail += fmt("eta=%g E(0)=%.6e E(5)=%.6e, %d non-decreasing steps, invariance flag %s; ", eta,
                  static_cast<double>(e.front()), static_cast<double>(e.back()), violations,
                  inv.invariant() ? "set" : "clear");
  }
  detail += "quad precision";
  return {ok, detail};
}

Outcome bipartite_consistency() {
  const auto mask = BipartitionMask::from_qubits(2, {1});
  double worst = 0.0;
  int n = 0;
  for (double a : kA)
    for (double b : kB)
      for (double t : kT) {
        const auto rho = evolved_family(RhoAB{a, b}, t);
        const double e = solve_certified(rho, t).result.value;
        worst = std::max(worst, std::abs(2.0 * e - negativity(rho, mask)));
        ++n;
      }
  return {worst <= 1e-6, fmt("%d points, max |2E - N| = %.3e (tol 1e-6)", n, worst)};
}

Outcome nonlocality_anchors() {
  const double kMax = 8.0 * std::sqrt(2.0);
  const ComplexMatrix base = ardehali_operator().materialize();
  const ComplexMatrix transported = transported_ardehali();
  const double ghz = bell_expectation(ghz_state(GhzSpec(4, 0)), base);
  const bool ghz_ok = std::abs(ghz - kMax) <= 1e-9;

  double worst = 0.0, wa = 0.0, wb = 0.0, wt = 0.0, w_num = 0.0, w_closed = 0.0;
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j)
      for (int k = 0; k < 10; ++k) {
        const double al = i / 9.0, be = j / 9.0, t = 3.0 * k / 9.0;
        const double num = bell_expectation(evolved_family(RhoAlphaBeta{al, be}, t), transported);
        const double closed = closed_form_bell_expectation(al, be, t);
        if (std::abs(num - closed) > worst) {
          worst = std::abs(num - closed);
          wa = al, wb = be, wt = t, w_num = num, w_closed = closed;
        }
      }
  const bool formula_ok = worst <= 1e-8;

  const auto death = sudden_death_time(0.9, 0.8);
  const bool death_ok = death.kind == SuddenDeath::Kind::At && std::abs(death.time - 1.1216) <= 1e-3;
  const bool never_ok = sudden_death_time(0.9, 0.85).kind == SuddenDeath::Kind::Never;
  const double thr = nonlocality_threshold_beta(0.9);
  const bool thr_ok = std::abs(thr - 0.736725) <= 1e-6;

  std::string detail = fmt("GHZ %.12f%s; analytic vs numeric max gap %.3e (tol 1e-8)%s", ghz, ghz_ok ? "" : " [fail]",
                           worst, formula_ok ? "" : " [fail]");
  if (!formula_ok)
    detail += fmt(" worst at alpha=%.4f beta=%.4f t=%.4f: numeric %.9f closed form %.9f", wa, wb, wt, w_num, w_closed);
  detail += fmt("; sudden death (0.9,0.8) %s t=%.6f%s; (0.9,0.85) %s%s; threshold(0.9)=%.7f%s",
                to_string(death.kind).c_str(), death.time, death_ok ? "" : " [fail]",
                to_string(sudden_death_time(0.9, 0.85).kind).c_str(), never_ok ? "" : " [fail]", thr,
                thr_ok ? "" : " [fail]");
  return {ghz_ok && formula_ok && death_ok && never_ok && thr_ok, detail};
}

Outcome monotone_bound() {
  double worst = 0.0;
  for (double e : g_all_e) worst = std::max(worst, e);
  return {!g_all_e.empty() && worst <= 0.5 + 1e-7, fmt("%zu values, max E = %.12f (bound 0.5 + 1e-7)", g_all_e.size(), worst)};
}

Outcome sdp_certificates() {
  int optimal = 0, bad = 0;
  double gap = 0.0, resid = 0.0;
  for (const auto& c : g_certified) {
    if (c.result.status != sdp::SdpStatus::Optimal) continue;
    ++optimal;
    gap = std::max(gap, c.result.duality_gap);
    resid = std::max(resid, c.report.max_decomposition_residual());
    if (c.result.duality_gap > 1e-7 || c.report.max_decomposition_residual() > 1e-7 || !c.report.all_passed()) ++bad;
  }
  return {optimal > 0 && bad == 0,
          fmt("%d optimal solutions re-verified, max gap %.3e, max decomposition residual %.3e, %d failing", optimal,
              gap, resid, bad)};
}

Outcome conjecture_scan() {
  const std::string path = "acceptance_scan.json";
  const std::vector<const char*> argv = {"cdeph", "invariance-scan", "--samples", "100", "--seed", "2718",
                                         "--jobs", "1",   "--deterministic", "--out", path.c_str()};
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  if (code != 0) return {false, fmt("scan exited %d: %s", code, cli::one_line(err.str()).c_str())};
  std::ifstream in(path);
  const auto report = nlohmann::json::parse(in);
  const int tested = report.at("samples_tested").get<int>();
  const int hits = report.at("nontrivial_hits").get<int>();
  for (const auto& s : report.at("samples")) g_all_e.push_back(s.at("e0").get<double>());
  std::string detail = fmt("%d samples (seed 2718), %d nontrivial invariance hits, report %s", tested, hits, path.c_str());
  if (hits > 0) {
    detail += "; HITS:";
    for (const auto& s : report.at("samples"))
      if (s.at("nontrivial_hit").get<bool>()) detail += fmt(" #%d", s.at("index").get<int>());
  }
  return {tested == 100 && hits == 0, detail};
}

}  // namespace

int main() {
  int failures = 0;
  failures += run_criterion(1, "two-qubit closed form", 1.0, two_qubit_closed_form);
  failures += run_criterion(2, "PT spectrum oracle", 5.0, spectrum_oracles);
  failures += run_criterion(3, "channel contract", 30.0, channel_contract);
  failures += run_criterion(4, "four-qubit time invariance", 600.0, four_qubit_invariance);
  failures += run_criterion(5, "three-qubit decay", 180.0, three_qubit_decay);
  failures += run_criterion(6, "bipartite vs genuine consistency", 0.0, bipartite_consistency);
  failures += run_criterion(7, "nonlocality anchors", 0.0, nonlocality_anchors);
  failures += run_criterion(10, "conjecture scan", 1200.0, conjecture_scan);
  failures += run_criterion(8, "monotone bound", 0.0, monotone_bound);
  failures += run_criterion(9, "SDP certificates", 0.0, sdp_certificates);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
