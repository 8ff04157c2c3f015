#pragma once

// Small dense semidefinite programs in standard primal-dual form
//
//   (P)  minimize  <C, X>    subject to  <A_i, X> = b_i,  X = diag(X_1..X_K) >= 0
//   (D)  maximize  b^T y     subject to  sum_i y_i A_i + Z = C,  Z >= 0
//
// solved by an infeasible primal-dual path-following method with the HKM
// search direction and Mehrotra predictor-corrector steps.  All matrices are
// real symmetric; complex Hermitian programs go through embed_hermitian.
//
// Constraints may carry a group id.  Constraints in distinct nonzero groups
// must not share a block; group 0 links everything.  The Schur complement is
// then block-arrow shaped and is factored group by group.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "cdeph/detail/quad.hpp"
#include "cdeph/errors.hpp"
#include "cdeph/linalg.hpp"

namespace cdeph::sdp {

/// Entry of a sparse symmetric matrix.  Only row <= col is stored; an
/// off-diagonal entry stands for both (row, col) and (col, row).
struct MatrixEntry {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

struct BlockMatrix {
  int block = 0;
  std::vector<MatrixEntry> entries;
};

struct Block {
  std::string name;
  int dim = 0;
};

struct Constraint {
  std::vector<BlockMatrix> terms;
  double rhs = 0.0;
  int group = 0;
};

class SdpProblem {
 public:
  int add_block(std::string name, int dim) {
    if (dim < 1) raise(ErrorCode::InvalidArgument, "block dimension must be positive");
    blocks_.push_back({std::move(name), dim});
    return static_cast<int>(blocks_.size()) - 1;
  }

  /// Adds `entries` to the objective matrix of `block`.
  void add_objective(int block, const std::vector<MatrixEntry>& entries) {
    objective_.push_back({block, entries});
  }

  int add_constraint(std::vector<BlockMatrix> terms, double rhs, int group = 0) {
    constraints_.push_back({std::move(terms), rhs, group});
    return static_cast<int>(constraints_.size()) - 1;
  }

  const std::vector<Block>& blocks() const { return blocks_; }
  const std::vector<BlockMatrix>& objective() const { return objective_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }

  int block_index(const std::string& name) const {
    for (std::size_t b = 0; b < blocks_.size(); ++b)
      if (blocks_[b].name == name) return static_cast<int>(b);
    return -1;
  }

  /// Throws InvalidArgument on dangling block references, out-of-range
  /// entries, lower-triangle entries or conflicting constraint groups.
  void validate() const {
    auto check = [&](const BlockMatrix& bm) {
      if (bm.block < 0 || bm.block >= static_cast<int>(blocks_.size()))
        raise(ErrorCode::InvalidArgument, "reference to undeclared block " + std::to_string(bm.block));
      const int dim = blocks_[static_cast<std::size_t>(bm.block)].dim;
      for (const auto& e : bm.entries) {
        if (e.row < 0 || e.col < 0 || e.row >= dim || e.col >= dim)
          raise(ErrorCode::InvalidArgument, "entry outside block " + blocks_[static_cast<std::size_t>(bm.block)].name);
        if (e.row > e.col) raise(ErrorCode::InvalidArgument, "entries must be given in the upper triangle");
        if (!std::isfinite(e.value)) raise(ErrorCode::InvalidArgument, "non-finite coefficient");
      }
    };
    if (blocks_.empty()) raise(ErrorCode::InvalidArgument, "problem has no blocks");
    for (const auto& bm : objective_) check(bm);
    std::vector<int> owner(blocks_.size(), 0);
    for (const auto& c : constraints_) {
      if (!std::isfinite(c.rhs)) raise(ErrorCode::InvalidArgument, "non-finite right-hand side");
      if (c.group < 0) raise(ErrorCode::InvalidArgument, "constraint groups are non-negative");
      for (const auto& bm : c.terms) {
        check(bm);
        if (c.group == 0) continue;
        int& o = owner[static_cast<std::size_t>(bm.block)];
        if (o != 0 && o != c.group)
          raise(ErrorCode::InvalidArgument, "block " + blocks_[static_cast<std::size_t>(bm.block)].name +
                                                " is shared by two constraint groups");
        o = c.group;
      }
    }
  }

 private:
  std::vector<Block> blocks_;
  std::vector<BlockMatrix> objective_;
  std::vector<Constraint> constraints_;
};

enum class SdpStatus { Optimal, Infeasible, MaxIterations };

inline const char* to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::Optimal: return "Optimal";
    case SdpStatus::Infeasible: return "Infeasible";
    case SdpStatus::MaxIterations: return "MaxIterations";
  }
  return "?";
}

/// Double is the default.  Extended (long double) and Quad (binary128) run
/// the whole iteration at higher precision for programs whose optimum must be
/// resolved below double resolution; Quad is software-emulated and slow.
enum class Precision { Double, Extended, Quad };

inline const char* to_string(Precision p) {
  switch (p) {
    case Precision::Double: return "double";
    case Precision::Extended: return "extended";
    case Precision::Quad: return "quad";
  }
  return "?";
}

struct SdpOptions {
  double gap_tolerance = 1e-7;
  double feasibility_tolerance = 1e-8;
  int max_iterations = 200;
  double step_fraction = 0.98;
  Precision precision = Precision::Double;
  /// Re-impose A(dX) = b - A(X) on every step.  Double needs it: the Schur
  /// solve leaks feasibility near the optimum.  Ignored at Quad precision,
  /// where the raw step is accurate and the projection stalls on the boundary.
  bool project_feasibility = true;
};

struct IterationRecord {
  int iteration = 0;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double complementarity = 0.0;  // <X, Z>
  double primal_residual = 0.0;  // max |b - A(X)|
  double dual_residual = 0.0;    // max |C - Z - A^T y|
  double primal_step = 0.0;
  double dual_step = 0.0;
};

struct SdpSolution {
  SdpStatus status = SdpStatus::MaxIterations;
  double objective_value = 0.0;  // primal <C, X>
  double dual_objective = 0.0;   // b^T y
  std::vector<RealMatrix> x_blocks;
  std::vector<RealMatrix> z_blocks;
  RealVector y;
  /// max(|<C,X> - b^T y|, <X,Z>)
  double duality_gap = 0.0;
  double complementarity = 0.0;
  double max_residual = 0.0;
  int iterations = 0;
  std::vector<IterationRecord> history;
  /// Objectives at the working precision, for callers resolving differences
  /// below double resolution.
  wide_real primal_objective_extended = 0;
  wide_real dual_objective_extended = 0;
};

// --- Hermitian <-> real symmetric embedding --------------------------------

/// [[Re H, -Im H], [Im H, Re H]]: PSD iff H is, every eigenvalue of H appears
/// twice, and <embed(H), embed(K)> = 2 Re Tr(H K).
inline RealMatrix embed_hermitian(const ComplexMatrix& h) {
  require_hermitian(h, "embedding input");
  const Eigen::Index d = h.rows();
  RealMatrix out(2 * d, 2 * d);
  out.topLeftCorner(d, d) = h.real();
  out.bottomRightCorner(d, d) = h.real();
  out.topRightCorner(d, d) = -h.imag();
  out.bottomLeftCorner(d, d) = h.imag();
  return out;
}

/// Left inverse of embed_hermitian that averages the redundant copies.
inline ComplexMatrix extract_hermitian(const RealMatrix& s) {
  const Eigen::Index d = s.rows() / 2;
  const RealMatrix re = 0.5 * (s.topLeftCorner(d, d) + s.bottomRightCorner(d, d));
  const RealMatrix im = 0.5 * (s.bottomLeftCorner(d, d) - s.topRightCorner(d, d));
  ComplexMatrix out(d, d);
  out.real() = re;
  out.imag() = im;
  return 0.5 * (out + out.adjoint());
}

/// Sparse upper-triangle entries of embed_hermitian(h), dropping zeros.
inline std::vector<MatrixEntry> embedded_entries(const ComplexMatrix& h, double scale = 1.0) {
  const RealMatrix e = embed_hermitian(h);
  std::vector<MatrixEntry> out;
  for (int c = 0; c < e.cols(); ++c)
    for (int r = 0; r <= c; ++r)
      if (e(r, c) != 0.0) out.push_back({r, c, scale * e(r, c)});
  return out;
}

namespace detail {

template <typename Real>
using Mat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Real>
using Vec = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

template <typename Real>
struct Entry {
  int row;
  int col;
  Real value;
};

/// Constraint i restricted to one block.
template <typename Real>
struct Slice {
  int constraint;
  std::vector<Entry<Real>> entries;
};

template <typename Real>
Real inner(const std::vector<Entry<Real>>& a, const Mat<Real>& g) {
  Real s = 0;
  for (const auto& e : a) s += e.value * (e.row == e.col ? g(e.row, e.col) : g(e.row, e.col) + g(e.col, e.row));
  return s;
}

template <typename Real>
void scatter(const std::vector<Entry<Real>>& a, Real w, Mat<Real>& out) {
  for (const auto& e : a) {
    out(e.row, e.col) += w * e.value;
    if (e.row != e.col) out(e.col, e.row) += w * e.value;
  }
}

template <typename Real>
Real max_step(const Mat<Real>& x, const Mat<Real>& dx) {
  Eigen::LLT<Mat<Real>> llt(x);
  const Mat<Real> l_inv_dx = llt.matrixL().solve(dx);
  Mat<Real> w = llt.matrixL().solve(l_inv_dx.transpose());
  w = Real(0.5) * (w + w.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Mat<Real>> es(w, Eigen::EigenvaluesOnly);
  const Real lmin = es.eigenvalues()(0);
  return lmin < 0 ? Real(-1) / lmin : std::numeric_limits<Real>::infinity();
}

/// Constraint order: n_link linking rows first, then contiguous groups that
/// only couple to themselves and to the linking rows.
struct ArrowLayout {
  int n_link = 0;
  std::vector<int> group_start, group_size;
};

/// Cholesky factorization of a symmetric positive definite matrix with
/// block-arrow sparsity, by eliminating each group onto the linking block.
template <typename Real>
class ArrowCholesky {
 public:
  ArrowLayout layout;

  bool factor(Mat<Real> m) {
    m_ = std::move(m);
    const int nl = layout.n_link;
    group_llt_.assign(layout.group_start.size(), {});
    coupling_.assign(layout.group_start.size(), {});
    Mat<Real> reduced = m_.topLeftCorner(nl, nl);
    for (std::size_t g = 0; g < layout.group_start.size(); ++g) {
      const int s0 = layout.group_start[g], ng = layout.group_size[g];
      if (!robust_llt(group_llt_[g], m_.block(s0, s0, ng, ng))) return false;
      if (nl > 0) {
        coupling_[g] = group_llt_[g].solve(m_.block(s0, 0, ng, nl));
        reduced.noalias() -= m_.block(0, s0, nl, ng) * coupling_[g];
      }
    }
    return nl == 0 || robust_llt(link_llt_, reduced);
  }

  Vec<Real> solve(const Vec<Real>& rhs) const {
    const int nl = layout.n_link;
    Vec<Real> out(rhs.size());
    Vec<Real> r_link = rhs.head(nl);
    std::vector<Vec<Real>> t(layout.group_start.size());
    for (std::size_t g = 0; g < t.size(); ++g) {
      t[g] = group_llt_[g].solve(rhs.segment(layout.group_start[g], layout.group_size[g]));
      if (nl > 0) r_link.noalias() -= m_.block(0, layout.group_start[g], nl, layout.group_size[g]) * t[g];
    }
    const Vec<Real> y_link = nl > 0 ? Vec<Real>(link_llt_.solve(r_link)) : Vec<Real>(0);
    out.head(nl) = y_link;
    for (std::size_t g = 0; g < t.size(); ++g) {
      if (nl > 0) t[g].noalias() -= coupling_[g] * y_link;
      out.segment(layout.group_start[g], layout.group_size[g]) = t[g];
    }
    return out;
  }

  /// Two rounds of iterative refinement against the assembled matrix; they
  /// matter once the factorization needed a diagonal shift.
  Vec<Real> solve_refined(const Vec<Real>& rhs) const {
    Vec<Real> x = solve(rhs);
    for (int pass = 0; pass < 2; ++pass) x += solve(rhs - m_ * x);
    return x;
  }

 private:
  /// Cholesky with escalating diagonal shifts.  Near the optimum the Schur
  /// complement is positive definite in exact arithmetic but can lose that
  /// property to rounding; a shift of a few hundred ulps of its diagonal is
  /// enough and only perturbs the search direction.
  static bool robust_llt(Eigen::LLT<Mat<Real>>& llt, const Mat<Real>& m) {
    llt.compute(m);
    if (llt.info() == Eigen::Success) return true;
    const Real eps = std::numeric_limits<Real>::epsilon();
    const Real diag = m.diagonal().cwiseAbs().maxCoeff();
    Real shift = Real(256) * eps * diag;
    for (; shift < Real(1e-3) * diag; shift *= Real(100)) {
      Mat<Real> r = m;
      r.diagonal().array() += shift;
      llt.compute(r);
      if (llt.info() == Eigen::Success) return true;
    }
    return false;
  }

  Mat<Real> m_;
  std::vector<Eigen::LLT<Mat<Real>>> group_llt_;
  std::vector<Mat<Real>> coupling_;  // M_gg^{-1} M_gL
  Eigen::LLT<Mat<Real>> link_llt_;
};

template <typename Real>
class InteriorPoint {
 public:
  InteriorPoint(const SdpProblem& p, const SdpOptions& opt) : opt_(opt) {
    p.validate();
    const auto nb = p.blocks().size();
    dims_.reserve(nb);
    for (const auto& b : p.blocks()) dims_.push_back(b.dim);
    m_ = static_cast<int>(p.constraints().size());

    c_.resize(nb);
    for (std::size_t b = 0; b < nb; ++b) c_[b] = Mat<Real>::Zero(dims_[b], dims_[b]);
    for (const auto& bm : p.objective())
      for (const auto& e : bm.entries) {
        c_[static_cast<std::size_t>(bm.block)](e.row, e.col) += Real(e.value);
        if (e.row != e.col) c_[static_cast<std::size_t>(bm.block)](e.col, e.row) += Real(e.value);
      }

    // Order constraints: linking group first, then each group contiguously.
    std::map<int, std::vector<int>> by_group;
    for (int i = 0; i < m_; ++i) by_group[p.constraints()[static_cast<std::size_t>(i)].group].push_back(i);
    ArrowLayout layout;
    for (const auto& [g, members] : by_group) {
      if (g == 0) {
        layout.n_link = static_cast<int>(members.size());
      } else {
        layout.group_start.push_back(static_cast<int>(order_.size()));
        layout.group_size.push_back(static_cast<int>(members.size()));
      }
      order_.insert(order_.end(), members.begin(), members.end());
    }
    project_ = opt_.project_feasibility && !std::is_same_v<Real, cdeph::detail::quad>;
    schur_.layout = layout;
    gram_.layout = layout;
    scaled_.layout = layout;

    b_.resize(m_);
    slices_.resize(nb);
    for (int k = 0; k < m_; ++k) {
      const auto& con = p.constraints()[static_cast<std::size_t>(order_[static_cast<std::size_t>(k)])];
      b_(k) = Real(con.rhs);
      std::map<int, std::vector<Entry<Real>>> merged;
      for (const auto& bm : con.terms)
        for (const auto& e : bm.entries) merged[bm.block].push_back({e.row, e.col, Real(e.value)});
      for (auto& [blk, entries] : merged) slices_[static_cast<std::size_t>(blk)].push_back({k, std::move(entries)});
    }
  }

  SdpSolution run() {
    using std::abs;
    const std::size_t nb = dims_.size();
    Real scale_c = 0;
    for (const auto& c : c_) scale_c = std::max(scale_c, c.size() ? c.cwiseAbs().maxCoeff() : Real(0));
    Real scale_b = m_ ? b_.cwiseAbs().maxCoeff() : Real(0);
    const Real x0 = std::max(Real(1), scale_b) + 1;
    const Real z0 = scale_c + 1;
    std::vector<Mat<Real>> x(nb), z(nb);
    for (std::size_t k = 0; k < nb; ++k) {
      x[k] = x0 * Mat<Real>::Identity(dims_[k], dims_[k]);
      z[k] = z0 * Mat<Real>::Identity(dims_[k], dims_[k]);
    }
    Vec<Real> y = Vec<Real>::Zero(m_);
    if (m_ > 0 && !factor_gram()) raise(ErrorCode::InvalidArgument, "constraint matrices are linearly dependent");
    int n_total = 0;
    for (int d : dims_) n_total += d;

    SdpSolution sol;
    SdpStatus status = SdpStatus::MaxIterations;
    Best best;
    int iter = 0;
    int stalled = 0;
    for (;; ++iter) {
      const Vec<Real> rp = b_ - apply_a(x);
      std::vector<Mat<Real>> rd = dual_residual(y, z);
      const Real pobj = inner_blocks(c_, x);
      const Real dobj = b_.dot(y);
      const Real comp = inner_blocks(x, z);
      const Real presid = m_ ? rp.cwiseAbs().maxCoeff() : Real(0);
      Real dresid = 0;
      for (const auto& r : rd) dresid = std::max(dresid, r.cwiseAbs().maxCoeff());
      // Optimality is judged on <X,Z>.  The objective gap also carries the
      // residual terms, so it only has to agree to the looser tolerance.
      const Real obj_tol = Real(std::max(opt_.gap_tolerance, opt_.feasibility_tolerance));

      IterationRecord rec;
      rec.iteration = iter;
      rec.primal_objective = static_cast<double>(pobj);
      rec.dual_objective = static_cast<double>(dobj);
      rec.complementarity = static_cast<double>(comp);
      rec.primal_residual = static_cast<double>(presid);
      rec.dual_residual = static_cast<double>(dresid);
      if (!sol.history.empty()) {
        rec.primal_step = last_ap_;
        rec.dual_step = last_ad_;
      }
      sol.history.push_back(rec);

      const Real merit = std::max({comp / Real(opt_.gap_tolerance), abs(pobj - dobj) / obj_tol,
                                   presid / Real(opt_.feasibility_tolerance),
                                   dresid / Real(opt_.feasibility_tolerance)});
      if (!best.valid || merit < best.merit) best = {true, merit, x, z, y, iter};

      if (merit <= 1) {
        status = SdpStatus::Optimal;
        break;
      }
      // Primal infeasibility: the dual objective diverges while the dual
      // constraints stay satisfied, so y / b^T y is a Farkas certificate.
      if (dobj > Real(1e8) * (1 + scale_c) && dresid <= Real(1e-6) * dobj) {
        status = SdpStatus::Infeasible;
        break;
      }
      if (iter >= opt_.max_iterations) break;
      // Stalled at the precision floor: neither side can move.
      if (last_ap_ < 1e-6 && last_ad_ < 1e-6 && ++stalled >= 3) break;

      const Real mu = comp / Real(n_total);
      std::vector<Mat<Real>> zinv(nb);
      bool ok = true;
      for (std::size_t k = 0; k < nb; ++k) {
        Eigen::LLT<Mat<Real>> llt(z[k]);
        if (llt.info() != Eigen::Success) {
          ok = false;
          break;
        }
        zinv[k] = llt.solve(Mat<Real>::Identity(dims_[k], dims_[k]));
        zinv[k] = Real(0.5) * (zinv[k] + zinv[k].transpose()).eval();
      }
      if (!ok) break;
      if (!factor_schur(x, zinv)) break;

      // X Rd Z^{-1} enters both right-hand sides.
      std::vector<Mat<Real>> x_rd_zinv(nb);
      for (std::size_t k = 0; k < nb; ++k) x_rd_zinv[k] = x[k] * rd[k] * zinv[k];
      const Vec<Real> a_xrz = apply_a(x_rd_zinv);

      // Predictor (sigma = 0).
      std::vector<Mat<Real>> target(nb);
      for (std::size_t k = 0; k < nb; ++k) target[k] = Mat<Real>::Zero(dims_[k], dims_[k]);
      Direction aff = direction(x, zinv, rp, rd, target, a_xrz);
      const Real ap_aff = step_length(x, aff.dx);
      const Real ad_aff = step_length(z, aff.dz);
      Real mu_aff = 0;
      for (std::size_t k = 0; k < nb; ++k)
        mu_aff += ((x[k] + ap_aff * aff.dx[k]).cwiseProduct(z[k] + ad_aff * aff.dz[k])).sum();
      mu_aff /= Real(n_total);
      const Real ratio = std::max(mu_aff, Real(0)) / mu;
      Real sigma = ratio * ratio * ratio;
      sigma = std::clamp(sigma, Real(0), Real(1));

      // Corrector.
      for (std::size_t k = 0; k < nb; ++k)
        target[k] = sigma * mu * zinv[k] - aff.dx[k] * aff.dz[k] * zinv[k];
      Direction dir = direction(x, zinv, rp, rd, target, a_xrz);
      Real ap = step_length(x, dir.dx);
      Real ad = step_length(z, dir.dz);
      // Close to the boundary the plain feasibility projection can point
      // out of the cone; redo it in the metric of X, which keeps the
      // correction inside the range of X.
      bool scaled = false;
      if (project_ && ap < Real(0.1) && scaled_.factor(assemble(x, x))) {
        scaled = true;
        Direction alt = direction(x, zinv, rp, rd, target, a_xrz, &x);
        const Real ap2 = step_length(x, alt.dx);
        if (ap2 > ap) {
          dir = std::move(alt);
          ap = ap2;
        }
      }
      // The second-order term can pin the iterate to the boundary on
      // degenerate faces; fall back to a plain centering step when it does.
      if (std::min(ap, ad) < Real(0.1)) {
        for (std::size_t k = 0; k < nb; ++k) target[k] = std::max(sigma, Real(0.5)) * mu * zinv[k];
        Direction alt = direction(x, zinv, rp, rd, target, a_xrz, scaled ? &x : nullptr);
        const Real ap2 = step_length(x, alt.dx);
        const Real ad2 = step_length(z, alt.dz);
        if (std::min(ap2, ad2) > std::min(ap, ad)) {
          dir = std::move(alt);
          ap = ap2;
          ad = ad2;
        }
      }
      for (std::size_t k = 0; k < nb; ++k) {
        x[k] += ap * dir.dx[k];
        z[k] += ad * dir.dz[k];
        x[k] = Real(0.5) * (x[k] + x[k].transpose()).eval();
        z[k] = Real(0.5) * (z[k] + z[k].transpose()).eval();
      }
      y += ad * dir.dy;
      last_ap_ = static_cast<double>(ap);
      last_ad_ = static_cast<double>(ad);
    }

    if (status == SdpStatus::MaxIterations && best.valid) {
      x = best.x;
      z = best.z;
      y = best.y;
    }
    finish(sol, status, x, z, y, iter);
    return sol;
  }

 private:
  struct Direction {
    std::vector<Mat<Real>> dx, dz;
    Vec<Real> dy;
  };
  struct Best {
    bool valid = false;
    Real merit = 0;
    std::vector<Mat<Real>> x, z;
    Vec<Real> y;
    int iteration = 0;
  };

  Vec<Real> apply_a(const std::vector<Mat<Real>>& g) const {
    Vec<Real> out = Vec<Real>::Zero(m_);
    for (std::size_t k = 0; k < slices_.size(); ++k)
      for (const auto& s : slices_[k]) out(s.constraint) += inner(s.entries, g[k]);
    return out;
  }

  std::vector<Mat<Real>> apply_at(const Vec<Real>& y) const {
    std::vector<Mat<Real>> out(dims_.size());
    for (std::size_t k = 0; k < dims_.size(); ++k) {
      out[k] = Mat<Real>::Zero(dims_[k], dims_[k]);
      for (const auto& s : slices_[k]) scatter(s.entries, y(s.constraint), out[k]);
    }
    return out;
  }

  std::vector<Mat<Real>> dual_residual(const Vec<Real>& y, const std::vector<Mat<Real>>& z) const {
    std::vector<Mat<Real>> rd = apply_at(y);
    for (std::size_t k = 0; k < rd.size(); ++k) rd[k] = c_[k] - z[k] - rd[k];
    return rd;
  }

  static Real inner_blocks(const std::vector<Mat<Real>>& a, const std::vector<Mat<Real>>& b) {
    Real s = 0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k].cwiseProduct(b[k]).sum();
    return s;
  }

  Real step_length(const std::vector<Mat<Real>>& x, const std::vector<Mat<Real>>& dx) const {
    Real alpha = std::numeric_limits<Real>::infinity();
    for (std::size_t k = 0; k < x.size(); ++k) alpha = std::min(alpha, max_step(x[k], dx[k]));
    return std::min(Real(1), Real(opt_.step_fraction) * alpha);
  }

  /// M_ij = <A_i, X A_j Z^{-1}>, assembled block by block from the sparse
  /// constraint slices.  With X = Z = I this is the Gram matrix of the A_i.
  Mat<Real> assemble(const std::vector<Mat<Real>>& x, const std::vector<Mat<Real>>& zinv) const {
    Mat<Real> m = Mat<Real>::Zero(m_, m_);
    for (std::size_t k = 0; k < slices_.size(); ++k) {
      const auto& sl = slices_[k];
      const int d = dims_[k];
      Mat<Real> g(d, d);
      for (std::size_t a = 0; a < sl.size(); ++a) {
        g.setZero();
        for (const auto& e : sl[a].entries) {
          g.noalias() += e.value * x[k].col(e.row) * zinv[k].row(e.col);
          if (e.row != e.col) g.noalias() += e.value * x[k].col(e.col) * zinv[k].row(e.row);
        }
        const int i = sl[a].constraint;
        for (std::size_t c = a; c < sl.size(); ++c) m(i, sl[c].constraint) += inner(sl[c].entries, g);
      }
    }
    m.template triangularView<Eigen::StrictlyLower>() = m.transpose();
    return m;
  }

  bool factor_schur(const std::vector<Mat<Real>>& x, const std::vector<Mat<Real>>& zinv) {
    return schur_.factor(assemble(x, zinv));
  }

  /// The Gram matrix is used to restore primal feasibility of dX.
  bool factor_gram() {
    std::vector<Mat<Real>> ident(dims_.size());
    for (std::size_t k = 0; k < dims_.size(); ++k) ident[k] = Mat<Real>::Identity(dims_[k], dims_[k]);
    return gram_.factor(assemble(ident, ident));
  }

  /// Solves the HKM Newton system for
  ///   dX + sym(X dZ Z^{-1}) = target - X,  A(dX) = rp,  A^T dy + dZ = Rd.
  Direction direction(const std::vector<Mat<Real>>& x, const std::vector<Mat<Real>>& zinv,
                      const Vec<Real>& rp, const std::vector<Mat<Real>>& rd,
                      const std::vector<Mat<Real>>& target, const Vec<Real>& a_xrz,
                      const std::vector<Mat<Real>>* metric = nullptr) const {
    const std::size_t nb = dims_.size();
    const Vec<Real> rhs = b_ - apply_a(target) + a_xrz;
    Direction d;
    d.dy = schur_.solve_refined(rhs);
    std::vector<Mat<Real>> at_dy = apply_at(d.dy);
    d.dz.resize(nb);
    d.dx.resize(nb);
    for (std::size_t k = 0; k < nb; ++k) {
      d.dz[k] = rd[k] - at_dy[k];
      Mat<Real> dx = target[k] - x[k] - x[k] * d.dz[k] * zinv[k];
      d.dx[k] = Real(0.5) * (dx + dx.transpose());
    }
    // Rounding in the ill-conditioned Schur solve leaks into A(dX); project
    // the error back out with the well-conditioned Gram matrix.
    const Vec<Real> miss = rp - apply_a(d.dx);
    if (!project_) return d;
    if (metric) {
      // This system is badly conditioned, so iterate on the exact miss.
      const auto& xm = *metric;
      Vec<Real> r = miss;
      Real prev = std::numeric_limits<Real>::infinity();
      for (int pass = 0; pass < 4; ++pass) {
        const Real norm = r.cwiseAbs().maxCoeff();
        if (!(norm < prev) || norm == 0) break;
        prev = norm;
        const auto fix = apply_at(scaled_.solve_refined(r));
        for (std::size_t k = 0; k < nb; ++k) {
          const Mat<Real> f = xm[k] * fix[k] * xm[k];
          d.dx[k] += Real(0.5) * (f + f.transpose());
        }
        r = rp - apply_a(d.dx);
      }
      return d;
    }
    const auto fix = apply_at(gram_.solve_refined(miss));
    for (std::size_t k = 0; k < nb; ++k) d.dx[k] += fix[k];
    return d;
  }

  void finish(SdpSolution& sol, SdpStatus status, const std::vector<Mat<Real>>& x, const std::vector<Mat<Real>>& z,
              const Vec<Real>& y, int iter) const {
    const Vec<Real> rp = b_ - apply_a(x);
    const auto rd = dual_residual(y, z);
    Real resid = m_ ? rp.cwiseAbs().maxCoeff() : Real(0);
    for (const auto& r : rd) resid = std::max(resid, r.cwiseAbs().maxCoeff());
    const Real pobj = inner_blocks(c_, x);
    const Real dobj = b_.dot(y);
    sol.status = status;
    sol.objective_value = static_cast<double>(pobj);
    sol.dual_objective = static_cast<double>(dobj);
    using std::abs;
    const Real comp = inner_blocks(x, z);
    sol.duality_gap = static_cast<double>(std::max(abs(pobj - dobj), comp));
    sol.complementarity = static_cast<double>(comp);
    sol.primal_objective_extended = static_cast<wide_real>(pobj);
    sol.dual_objective_extended = static_cast<wide_real>(dobj);
    sol.max_residual = static_cast<double>(resid);
    sol.iterations = iter;
    sol.x_blocks.clear();
    sol.z_blocks.clear();
    for (const auto& m : x) sol.x_blocks.push_back(m.template cast<double>());
    for (const auto& m : z) sol.z_blocks.push_back(m.template cast<double>());
    // y back in the caller's constraint order.
    sol.y.resize(m_);
    for (int k = 0; k < m_; ++k) sol.y(order_[static_cast<std::size_t>(k)]) = static_cast<double>(y(k));
  }

  SdpOptions opt_;
  std::vector<int> dims_;
  int m_ = 0;
  std::vector<Mat<Real>> c_;
  Vec<Real> b_;
  std::vector<std::vector<Slice<Real>>> slices_;
  std::vector<int> order_;  // internal index -> caller's constraint index

  ArrowCholesky<Real> schur_, gram_, scaled_;
  bool project_ = true;
  double last_ap_ = 0.0, last_ad_ = 0.0;
};

}  // namespace detail

/// Deterministic: identical problems and options give bit-identical results.
inline SdpSolution solve(const SdpProblem& problem, const SdpOptions& options = {}) {
  if (options.precision == Precision::Extended) return detail::InteriorPoint<long double>(problem, options).run();
  if (options.precision == Precision::Quad)
    return detail::InteriorPoint<cdeph::detail::quad>(problem, options).run();
  return detail::InteriorPoint<double>(problem, options).run();
}

// --- debugging dump format -------------------------------------------------
//
//   sdp-text 1
//   blocks <K>
//   <name> <dim>                      (K lines)
//   objective <count>
//   <block> <row> <col> <value>       (count lines)
//   constraints <m>
//   constraint <rhs> <group> <count>
//   <block> <row> <col> <value>       (count lines, per constraint)

inline void dump(const SdpProblem& p, std::ostream& os) {
  char buf[128];
  os << "sdp-text 1\nblocks " << p.blocks().size() << '\n';
  for (const auto& b : p.blocks()) os << b.name << ' ' << b.dim << '\n';
  auto write_terms = [&](const std::vector<BlockMatrix>& terms) {
    for (const auto& bm : terms)
      for (const auto& e : bm.entries) {
        std::snprintf(buf, sizeof buf, "%d %d %d %.17g\n", bm.block, e.row, e.col, e.value);
        os << buf;
      }
  };
  auto count = [](const std::vector<BlockMatrix>& terms) {
    std::size_t n = 0;
    for (const auto& bm : terms) n += bm.entries.size();
    return n;
  };
  os << "objective " << count(p.objective()) << '\n';
  write_terms(p.objective());
  os << "constraints " << p.constraints().size() << '\n';
  for (const auto& c : p.constraints()) {
    std::snprintf(buf, sizeof buf, "constraint %.17g %d %zu\n", c.rhs, c.group, count(c.terms));
    os << buf;
    write_terms(c.terms);
  }
}

inline SdpProblem load(std::istream& is) {
  auto fail = [](const std::string& what) -> void { raise(ErrorCode::ConfigError, "sdp-text: " + what); };
  std::string word;
  int version = 0;
  if (!(is >> word >> version) || word != "sdp-text" || version != 1) fail("bad header");
  std::size_t nb = 0;
  if (!(is >> word >> nb) || word != "blocks") fail("expected blocks");
  SdpProblem p;
  for (std::size_t k = 0; k < nb; ++k) {
    std::string name;
    int dim = 0;
    if (!(is >> name >> dim)) fail("truncated block list");
    p.add_block(name, dim);
  }
  auto read_terms = [&](std::size_t n) {
    std::map<int, std::vector<MatrixEntry>> by_block;
    for (std::size_t k = 0; k < n; ++k) {
      int b = 0;
      MatrixEntry e;
      if (!(is >> b >> e.row >> e.col >> e.value)) fail("truncated entry list");
      by_block[b].push_back(e);
    }
    std::vector<BlockMatrix> terms;
    for (auto& [b, entries] : by_block) terms.push_back({b, std::move(entries)});
    return terms;
  };
  std::size_t n = 0;
  if (!(is >> word >> n) || word != "objective") fail("expected objective");
  for (auto& bm : read_terms(n)) p.add_objective(bm.block, bm.entries);
  std::size_t m = 0;
  if (!(is >> word >> m) || word != "constraints") fail("expected constraints");
  for (std::size_t i = 0; i < m; ++i) {
    double rhs = 0.0;
    int group = 0;
    if (!(is >> word >> rhs >> group >> n) || word != "constraint") fail("expected constraint");
    p.add_constraint(read_terms(n), rhs, group);
  }
  p.validate();
  return p;
}

}  // namespace cdeph::sdp
