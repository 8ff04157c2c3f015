#pragma once

// Bipartite negativity and the genuine multipartite negativity
//
//   E(rho) = max(0, -min Tr(W rho)),  W = P_M + Q_M^{T_M},  0 <= P_M, Q_M <= I
//
// for every bipartition M, computed with the in-house SDP solver.
//
// Normalizations differ on purpose: negativity() is doubled (Bell states give
// 1) while E keeps its native scale (E <= 1/2).  For two qubits 2E = N.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <string>
#include <vector>

#include "cdeph/dephasing.hpp"
#include "cdeph/errors.hpp"
#include "cdeph/linalg.hpp"
#include "cdeph/parallel.hpp"
#include "cdeph/random.hpp"
#include "cdeph/sdp.hpp"
#include "cdeph/states.hpp"

namespace cdeph {

/// N = 2 * sum |negative eigenvalues of rho^{T_M}|.
inline double negativity(const DensityMatrix& rho, const BipartitionMask& mask) {
  const RealVector ev = hermitian_eigenvalues(partial_transpose(rho, mask));
  double s = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev(i) < 0.0) s -= ev(i);
  return 2.0 * s;
}

struct BipartitionCertificate {
  BipartitionMask mask;
  ComplexMatrix p;  // P_M
  ComplexMatrix q;  // Q_M, W = P_M + Q_M^{T_M}
};

struct GenuineNegativityResult {
  double value = 0.0;        // E, clamped at 0
  wide_real value_extended = 0;  // E at the solver's working precision
  double expectation = 0.0;  // Tr(W rho) as reported by the solver
  ComplexMatrix witness;
  std::vector<BipartitionCertificate> decomposition;
  sdp::SdpStatus status = sdp::SdpStatus::MaxIterations;
  double duality_gap = 0.0;
  double max_residual = 0.0;
  int iterations = 0;
  bool real_reduced = false;
  sdp::Precision precision = sdp::Precision::Double;  // the one that converged
};

struct GenuineNegativityOptions {
  sdp::SdpOptions sdp;
  /// For real rho the optimal witness can be taken real symmetric, which
  /// avoids the doubled embedding.  Disable to force the complex program.
  bool exploit_real = true;
  /// Retry a solve that ran out of iterations at the next wider precision,
  /// same tolerances.  Pure states put the optimum on a degenerate face
  /// where double rounding can stall the primal side.
  bool escalate_precision = true;

  /// Tolerances matched to the working precision.  Quad resolves E to about
  /// 1e-21, enough to order values that differ below double resolution.
  static GenuineNegativityOptions for_precision(sdp::Precision p) {
    GenuineNegativityOptions o;
    o.sdp.precision = p;
    if (p == sdp::Precision::Extended) {
      o.sdp.gap_tolerance = 1e-11;
      o.sdp.feasibility_tolerance = 1e-11;
    } else if (p == sdp::Precision::Quad) {
      o.sdp.gap_tolerance = 1e-22;
      o.sdp.feasibility_tolerance = 1e-10;
    }
    return o;
  }
};

namespace detail {

struct SparseEntry {
  int row;
  int col;
  Complex value;
};

/// Hermitian basis of d x d matrices: E_aa, then E_ab + E_ba and
/// i(E_ab - E_ba) for a < b.  The antisymmetric part is skipped in the real
/// case.  Each element has unit Frobenius-norm entries.
inline std::vector<std::vector<SparseEntry>> hermitian_basis(int d, bool real_only) {
  std::vector<std::vector<SparseEntry>> basis;
  for (int a = 0; a < d; ++a) basis.push_back({{a, a, 1.0}});
  for (int a = 0; a < d; ++a)
    for (int b = a + 1; b < d; ++b) {
      basis.push_back({{a, b, 1.0}, {b, a, 1.0}});
      if (!real_only) basis.push_back({{a, b, Complex(0.0, 1.0)}, {b, a, Complex(0.0, -1.0)}});
    }
  return basis;
}

inline std::vector<SparseEntry> partial_transpose(const std::vector<SparseEntry>& h, std::uint32_t sel) {
  std::vector<SparseEntry> out;
  out.reserve(h.size());
  const auto s = static_cast<int>(sel);
  for (const auto& e : h) out.push_back({(e.row & ~s) | (e.col & s), (e.col & ~s) | (e.row & s), e.value});
  return out;
}

/// Upper-triangle entries of the real symmetric image of a sparse Hermitian
/// matrix: the matrix itself (real case) or its [[Re,-Im],[Im,Re]] embedding.
inline std::vector<sdp::MatrixEntry> real_image(const std::vector<SparseEntry>& h, int d, bool real_only,
                                                double sign) {
  std::vector<sdp::MatrixEntry> out;
  auto put = [&](int r, int c, double v) {
    if (v != 0.0 && r <= c) out.push_back({r, c, sign * v});
  };
  for (const auto& e : h) {
    put(e.row, e.col, e.value.real());
    if (real_only) continue;
    put(e.row + d, e.col + d, e.value.real());
    put(e.row, e.col + d, -e.value.imag());
    put(e.row + d, e.col, e.value.imag());
  }
  return out;
}

inline ComplexMatrix dense(const std::vector<SparseEntry>& h, int d) {
  ComplexMatrix m = ComplexMatrix::Zero(d, d);
  for (const auto& e : h) m(e.row, e.col) += e.value;
  return m;
}

inline bool is_real(const ComplexMatrix& m) { return m.imag().cwiseAbs().maxCoeff() <= 1e-14; }

}  // namespace detail

/// Layout of the witness program so results can be mapped back.
struct PptMixtureProgram {
  sdp::SdpProblem problem;
  int n_qubits = 0;
  bool real_only = false;
  std::vector<ComplexMatrix> basis;  // W = sum_k y_k basis[k]
  std::vector<BipartitionMask> masks;
  std::vector<int> p_block;  // Z block holding P_M
  std::vector<int> q_block;  // Z block holding Q_M
};

/// Builds the program in LMI form on the dual side of the solver:
/// y = (w, p_M for each M), maximize -Tr(W rho), with slack blocks
/// P_M, I - P_M, Q_M = (W - P_M)^{T_M} and I - Q_M.  Because the Hermitian
/// parameters are real variables, the embedding never doubles the objective.
inline PptMixtureProgram build_ppt_mixture_program(const DensityMatrix& rho, bool real_only) {
  const int n = rho.n_qubits();
  if (n < 2 || n > 4) raise(ErrorCode::Unsupported, "genuine negativity is implemented for 2..4 qubits");
  const int d = static_cast<int>(rho.dim());
  const int bd = real_only ? d : 2 * d;
  PptMixtureProgram prog;
  prog.n_qubits = n;
  prog.real_only = real_only;
  prog.masks = all_bipartitions(n);
  const auto basis = detail::hermitian_basis(d, real_only);
  const int nb = static_cast<int>(basis.size());
  for (const auto& h : basis) prog.basis.push_back(detail::dense(h, d));

  std::vector<sdp::MatrixEntry> identity;
  for (int i = 0; i < bd; ++i) identity.push_back({i, i, 1.0});

  struct Blocks {
    int p, ip, q, iq;
  };
  std::vector<Blocks> blk;
  for (const auto& m : prog.masks) {
    const std::string tag = "[" + m.label() + "]";
    Blocks b{prog.problem.add_block("P" + tag, bd), prog.problem.add_block("I-P" + tag, bd),
             prog.problem.add_block("Q" + tag, bd), prog.problem.add_block("I-Q" + tag, bd)};
    prog.problem.add_objective(b.ip, identity);
    prog.problem.add_objective(b.iq, identity);
    blk.push_back(b);
    prog.p_block.push_back(b.p);
    prog.q_block.push_back(b.q);
  }

  std::vector<std::vector<std::vector<detail::SparseEntry>>> pt(prog.masks.size());
  for (std::size_t mi = 0; mi < prog.masks.size(); ++mi)
    for (const auto& h : basis) pt[mi].push_back(detail::partial_transpose(h, prog.masks[mi].bits()));

  // Z = C - sum y_i A_i, so a slack block equal to +X carries A = -X.
  for (int k = 0; k < nb; ++k) {
    std::vector<sdp::BlockMatrix> terms;
    for (std::size_t mi = 0; mi < prog.masks.size(); ++mi) {
      terms.push_back({blk[mi].q, detail::real_image(pt[mi][static_cast<std::size_t>(k)], d, real_only, -1.0)});
      terms.push_back({blk[mi].iq, detail::real_image(pt[mi][static_cast<std::size_t>(k)], d, real_only, 1.0)});
    }
    const double rhs = -(prog.basis[static_cast<std::size_t>(k)] * rho.matrix()).trace().real();
    prog.problem.add_constraint(std::move(terms), rhs, 0);
  }
  for (std::size_t mi = 0; mi < prog.masks.size(); ++mi)
    for (int k = 0; k < nb; ++k) {
      const auto& h = basis[static_cast<std::size_t>(k)];
      const auto& hp = pt[mi][static_cast<std::size_t>(k)];
      std::vector<sdp::BlockMatrix> terms{{blk[mi].p, detail::real_image(h, d, real_only, -1.0)},
                                          {blk[mi].ip, detail::real_image(h, d, real_only, 1.0)},
                                          {blk[mi].q, detail::real_image(hp, d, real_only, 1.0)},
                                          {blk[mi].iq, detail::real_image(hp, d, real_only, -1.0)}};
      prog.problem.add_constraint(std::move(terms), 0.0, static_cast<int>(mi) + 1);
    }
  return prog;
}

inline GenuineNegativityResult genuine_negativity(const DensityMatrix& rho, const GenuineNegativityOptions& opt = {}) {
  const bool real_only = opt.exploit_real && detail::is_real(rho.matrix());
  const auto prog = build_ppt_mixture_program(rho, real_only);
  sdp::SdpOptions sopt = opt.sdp;
  auto sol = sdp::solve(prog.problem, sopt);
  while (opt.escalate_precision && sol.status == sdp::SdpStatus::MaxIterations &&
         sopt.precision != sdp::Precision::Quad) {
    sopt.precision = sopt.precision == sdp::Precision::Double ? sdp::Precision::Extended : sdp::Precision::Quad;
    sol = sdp::solve(prog.problem, sopt);
  }
  if (sol.status != sdp::SdpStatus::Optimal) {
    char buf[200];
    std::snprintf(buf, sizeof buf, "witness program ended %s after %d iterations (gap %.3g, residual %.3g)",
                  sdp::to_string(sol.status), sol.iterations, sol.duality_gap, sol.max_residual);
    raise(ErrorCode::SolverFailed, buf);
  }
  const int d = static_cast<int>(rho.dim());
  GenuineNegativityResult r;
  r.real_reduced = real_only;
  r.status = sol.status;
  r.duality_gap = sol.duality_gap;
  r.max_residual = sol.max_residual;
  r.iterations = sol.iterations;
  r.precision = sopt.precision;
  r.witness = ComplexMatrix::Zero(d, d);
  for (std::size_t k = 0; k < prog.basis.size(); ++k) r.witness += sol.y(static_cast<Eigen::Index>(k)) * prog.basis[k];
  auto unpack = [&](int block) -> ComplexMatrix {
    const RealMatrix& z = sol.z_blocks[static_cast<std::size_t>(block)];
    if (real_only) return z.cast<Complex>();
    return sdp::extract_hermitian(z);
  };
  for (std::size_t mi = 0; mi < prog.masks.size(); ++mi)
    r.decomposition.push_back({prog.masks[mi], unpack(prog.p_block[mi]), unpack(prog.q_block[mi])});
  r.expectation = -sol.dual_objective;
  r.value = std::max(0.0, sol.dual_objective);
  r.value_extended = sol.dual_objective_extended > 0 ? sol.dual_objective_extended : wide_real(0);
  return r;
}

// --- independent certificate check ----------------------------------------

struct WitnessCheck {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

struct WitnessReport {
  double expectation = 0.0;  // Tr(W rho), recomputed
  bool entanglement_detected = false;
  std::vector<WitnessCheck> checks;

  bool all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const WitnessCheck& c) { return c.passed; });
  }
  double max_decomposition_residual() const {
    double m = 0.0;
    for (const auto& c : checks)
      if (c.name.rfind("decomposition", 0) == 0) m = std::max(m, c.value);
    return m;
  }
};

struct WitnessTolerances {
  double decomposition = 1e-7;
  double eigenvalue = 1e-8;
  double value = 1e-7;
  double detection = 1e-7;
};

/// Recomputes everything from W, P_M, Q_M and rho; uses nothing from the
/// solver except those matrices and the claimed value.
inline WitnessReport verify_witness(const GenuineNegativityResult& result, const DensityMatrix& rho,
                                    const WitnessTolerances& tol = {}) {
  WitnessReport rep;
  auto add = [&](std::string name, double value, double limit, bool ok) {
    rep.checks.push_back({std::move(name), value, limit, ok});
  };
  const ComplexMatrix& w = result.witness;
  if (w.rows() != rho.dim() || w.cols() != rho.dim())
    raise(ErrorCode::DimensionMismatch, "witness and state dimensions differ");
  rep.expectation = (w * rho.matrix()).trace().real();
  rep.entanglement_detected = rep.expectation < -tol.detection;

  add("witness hermitian", max_abs(w - w.adjoint()), 1e-12 * std::max(1.0, max_abs(w)),
      max_abs(w - w.adjoint()) <= 1e-12 * std::max(1.0, max_abs(w)));
  const double claimed = std::max(0.0, -rep.expectation);
  add("value matches Tr(W rho)", std::abs(claimed - result.value), tol.value,
      std::abs(claimed - result.value) <= tol.value);
  add("value bound", result.value, 0.5 + tol.value, result.value <= 0.5 + tol.value && result.value >= 0.0);

  const auto expected = all_bipartitions(rho.n_qubits());
  add("bipartitions covered", static_cast<double>(result.decomposition.size()), static_cast<double>(expected.size()),
      result.decomposition.size() == expected.size());
  for (const auto& cert : result.decomposition) {
    const std::string tag = " " + cert.mask.label();
    const double resid = (w - cert.p - partial_transpose(cert.q, cert.mask)).norm();
    add("decomposition" + tag, resid, tol.decomposition, resid <= tol.decomposition);
    for (const auto& [which, mat] : {std::pair{"P", &cert.p}, std::pair{"Q", &cert.q}}) {
      const ComplexMatrix herm = 0.5 * (*mat + mat->adjoint());
      const RealVector ev = hermitian_eigenvalues(herm);
      const double lo = ev(0), hi = ev(ev.size() - 1);
      const double viol = std::max({0.0, -lo, hi - 1.0});
      add(std::string("eigenvalues ") + which + tag, viol, tol.eigenvalue,
          lo >= -tol.eigenvalue && hi <= 1.0 + tol.eigenvalue);
    }
  }
  return rep;
}

// --- time invariance -------------------------------------------------------

enum class InvarianceKind { Invariant, Decaying };

struct InvarianceReport {
  InvarianceKind kind = InvarianceKind::Decaying;
  std::vector<double> times;
  std::vector<double> values;  // E(t)
  double max_deviation = 0.0;     // max_t |E(t) - E(0)|
  double max_state_change = 0.0;  // max_t ||rho(t) - rho(0)||_F
  bool invariant() const { return kind == InvarianceKind::Invariant; }
};

struct InvarianceOptions {
  double tol = 1e-5;
  int jobs = 1;
  GenuineNegativityOptions gn;
};

inline void check_grid(const std::vector<double>& grid) {
  if (grid.empty()) raise(ErrorCode::InvalidArgument, "time grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0)) raise(ErrorCode::InvalidArgument, "times must be non-negative");
    if (i > 0 && !(grid[i] > grid[i - 1])) raise(ErrorCode::InvalidArgument, "time grid must be ascending");
  }
}

/// E along an arbitrary trajectory t -> rho(t); rho(grid[0]) is the reference.
template <typename Trajectory>
InvarianceReport invariance_along(Trajectory&& at, const std::vector<double>& grid, const InvarianceOptions& opt) {
  check_grid(grid);
  struct Point {
    double e;
    double change;
  };
  const DensityMatrix ref = at(grid.front());
  const auto pts = parallel_map(grid.size(), opt.jobs, [&](std::size_t i) {
    const DensityMatrix rho = at(grid[i]);
    return Point{genuine_negativity(rho, opt.gn).value, frobenius_distance(rho.matrix(), ref.matrix())};
  });
  InvarianceReport rep;
  rep.times = grid;
  for (const auto& p : pts) {
    rep.values.push_back(p.e);
    rep.max_deviation = std::max(rep.max_deviation, std::abs(p.e - pts.front().e));
    rep.max_state_change = std::max(rep.max_state_change, p.change);
  }
  rep.kind = rep.max_deviation <= opt.tol ? InvarianceKind::Invariant : InvarianceKind::Decaying;
  return rep;
}

/// Family members evolve in closed form under the z-axis channel.
inline InvarianceReport detect_time_invariance(const FamilyParams& params, const std::vector<double>& grid,
                                               const InvarianceOptions& opt = {}) {
  validate(params);
  return invariance_along([&](double t) { return evolved_family(params, t); }, grid, opt);
}

inline InvarianceReport detect_time_invariance(const DensityMatrix& rho0, const DephasingChannel& channel,
                                               const std::vector<double>& grid, const InvarianceOptions& opt = {}) {
  return invariance_along([&](double t) { return evolve(channel, rho0, t); }, grid, opt);
}

// --- random scan -----------------------------------------------------------

struct ScanOptions {
  int n_qubits = 3;
  int n_samples = 100;
  std::uint64_t seed = 42;
  std::vector<double> grid;  // empty: 11 points on [0, 5]
  double tol = 1e-5;
  /// A hit is nontrivial only if the state moves by more than this.
  double state_change_floor = 1e-6;
  /// Four-qubit mode: mixtures dominated by GHZ states inside the DFS.
  bool dfs_biased = false;
  int jobs = 1;
  GenuineNegativityOptions gn;
};

struct ScanComponent {
  std::string kind;  // "ghz:<pattern><sign>", "w", "haar", "identity"
  double weight = 0.0;
};

struct ScanSample {
  int index = 0;
  std::uint64_t seed = 0;
  std::vector<ScanComponent> components;
  double e0 = 0.0;
  double max_delta_e = 0.0;
  double max_state_change = 0.0;
  bool invariant = false;
  bool nontrivial_hit = false;
};

struct ScanReport {
  int n_qubits = 0;
  std::uint64_t seed = 0;
  std::vector<double> grid;
  double tol = 0.0;
  std::vector<ScanSample> samples;
  int nontrivial_hits() const {
    return static_cast<int>(std::count_if(samples.begin(), samples.end(), [](const auto& s) { return s.nontrivial_hit; }));
  }
};

inline std::vector<double> linear_grid(double start, double stop, int points) {
  if (points < 2 || !(stop > start) || !(start >= 0.0))
    raise(ErrorCode::InvalidArgument, "grid needs start >= 0, stop > start and at least 2 points");
  std::vector<double> g(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) g[static_cast<std::size_t>(i)] = start + (stop - start) * i / (points - 1);
  g.back() = stop;
  return g;
}

namespace detail {

inline std::string ghz_tag(const GhzSpec& s) {
  std::string bits;
  for (int q = s.n_qubits - 1; q >= 0; --q) bits += ((s.pattern >> q) & 1u) ? '1' : '0';
  return "ghz:" + bits + (s.plus ? "+" : "-");
}

/// Three qubits: a GHZ-basis state, |W> and one or two Haar-random kets.
/// Four qubits (DFS-biased): one DFS GHZ state carrying most of the weight,
/// one non-DFS GHZ state and white noise.
inline std::pair<ComplexMatrix, std::vector<ScanComponent>> scan_mixture(rnd::Engine& g, int n, bool dfs_biased) {
  const Eigen::Index d = Eigen::Index{1} << n;
  ComplexMatrix rho = ComplexMatrix::Zero(d, d);
  std::vector<ScanComponent> parts;
  auto ghz_by_balance = [&](bool balanced) {
    std::vector<GhzSpec> pool;
    for (const auto& s : ghz_enumeration(n))
      if ((std::popcount(s.pattern) * 2 == n) == balanced) pool.push_back(s);
    return pool[static_cast<std::size_t>(g() % pool.size())];
  };
  if (dfs_biased) {
    const double w_dfs = rnd::uniform(g, 0.8, 0.95);
    const double rest = 1.0 - w_dfs;
    const double w_other = rest * rnd::uniform(g);
    const auto a = ghz_by_balance(true);
    const auto b = ghz_by_balance(false);
    rho += w_dfs * detail::projector(ghz_ket(a));
    rho += w_other * detail::projector(ghz_ket(b));
    rho += (rest - w_other) * detail::identity_over_dim(n);
    parts = {{ghz_tag(a), w_dfs}, {ghz_tag(b), w_other}, {"identity", rest - w_other}};
    return {rho, parts};
  }
  const auto all = ghz_enumeration(n);
  const auto ghz = all[static_cast<std::size_t>(g() % all.size())];
  const int n_haar = 1 + static_cast<int>(g() % 2);
  const auto w = rnd::dirichlet(g, static_cast<std::size_t>(2 + n_haar));
  rho += w[0] * detail::projector(ghz_ket(ghz));
  parts.push_back({ghz_tag(ghz), w[0]});
  rho += w[1] * detail::projector(w_ket(n));
  parts.push_back({"w", w[1]});
  for (int h = 0; h < n_haar; ++h) {
    rho += w[static_cast<std::size_t>(2 + h)] * detail::projector(rnd::haar_ket(g, d));
    parts.push_back({"haar", w[static_cast<std::size_t>(2 + h)]});
  }
  return {0.5 * (rho + rho.adjoint()), parts};
}

}  // namespace detail

/// Samples random mixtures, evolves them numerically under the z-axis
/// channel and flags time-invariant E.  A hit counts as nontrivial only when
/// the state itself changes and E(0) is nonzero.
inline ScanReport random_invariance_scan(const ScanOptions& opt) {
  if (opt.n_samples < 1) raise(ErrorCode::InvalidArgument, "n_samples must be at least 1");
  if (opt.dfs_biased ? opt.n_qubits != 4 : opt.n_qubits != 3)
    raise(ErrorCode::Unsupported, "scan supports 3 qubits, or 4 qubits in DFS-biased mode");
  ScanReport rep;
  rep.n_qubits = opt.n_qubits;
  rep.seed = opt.seed;
  rep.tol = opt.tol;
  rep.grid = opt.grid.empty() ? linear_grid(0.0, 5.0, 11) : opt.grid;
  check_grid(rep.grid);
  const auto channel = DephasingChannel::z_axis(opt.n_qubits);
  InvarianceOptions inv{opt.tol, 1, opt.gn};
  rep.samples = parallel_map(static_cast<std::size_t>(opt.n_samples), opt.jobs, [&](std::size_t i) {
    ScanSample s;
    s.index = static_cast<int>(i);
    s.seed = rnd::derive_seed(opt.seed, i);
    rnd::Engine g(s.seed);
    auto [m, parts] = detail::scan_mixture(g, opt.n_qubits, opt.dfs_biased);
    s.components = std::move(parts);
    const DensityMatrix rho0(std::move(m));
    const auto r = detect_time_invariance(rho0, channel, rep.grid, inv);
    s.e0 = r.values.front();
    s.max_delta_e = r.max_deviation;
    s.max_state_change = r.max_state_change;
    s.invariant = r.invariant();
    s.nontrivial_hit = s.invariant && s.max_state_change > opt.state_change_floor && s.e0 > opt.tol;
    return s;
  });
  return rep;
}

}  // namespace cdeph
