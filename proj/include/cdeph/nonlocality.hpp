#pragma once

// Ardehali Bell operator, expectation values, setting transport and the
// genuine-nonlocality threshold tests.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "cdeph/errors.hpp"
#include "cdeph/linalg.hpp"

namespace cdeph {

/// Single-qubit observables.  A and B are the rotated settings (X +- Y)/sqrt2.
enum class Observable { X, Y, A, B, I };

inline char to_char(Observable o) {
  switch (o) {
    case Observable::X: return 'X';
    case Observable::Y: return 'Y';
    case Observable::A: return 'A';
    case Observable::B: return 'B';
    case Observable::I: return 'I';
  }
  return '?';
}

inline Observable observable_from_char(char c) {
  switch (c) {
    case 'X': return Observable::X;
    case 'Y': return Observable::Y;
    case 'A': return Observable::A;
    case 'B': return Observable::B;
    case 'I': return Observable::I;
    default: raise(ErrorCode::InvalidArgument, std::string("unknown observable label '") + c + "'");
  }
}

inline ComplexMatrix observable_matrix(Observable o) {
  const double r = 1.0 / std::sqrt(2.0);
  switch (o) {
    case Observable::X: return pauli::x();
    case Observable::Y: return pauli::y();
    case Observable::A: return r * (pauli::x() + pauli::y());
    case Observable::B: return r * (pauli::x() - pauli::y());
    case Observable::I: return pauli::identity();
  }
  return pauli::identity();
}

struct BellTerm {
  double coefficient = 0.0;
  std::vector<Observable> factors;

  std::string label() const {
    std::string s;
    for (auto f : factors) s += to_char(f);
    return s;
  }
};

class BellOperator {
 public:
  explicit BellOperator(int n_qubits) : n_(n_qubits) {
    if (n_qubits < 1 || n_qubits > kMaxQubits) raise(ErrorCode::Unsupported, "qubit count out of range");
  }

  void add_term(double coefficient, std::vector<Observable> factors) {
    if (static_cast<int>(factors.size()) != n_)
      raise(ErrorCode::DimensionMismatch, "term needs one factor per qubit");
    terms_.push_back({coefficient, std::move(factors)});
  }

  /// Label form, e.g. add_term(-1, "AXYY").
  void add_term(double coefficient, const std::string& labels) {
    std::vector<Observable> f;
    for (char c : labels) f.push_back(observable_from_char(c));
    add_term(coefficient, std::move(f));
  }

  int n_qubits() const { return n_; }
  const std::vector<BellTerm>& terms() const { return terms_; }

  ComplexMatrix materialize() const {
    const Eigen::Index d = Eigen::Index{1} << n_;
    ComplexMatrix out = ComplexMatrix::Zero(d, d);
    for (const auto& t : terms_) {
      std::vector<ComplexMatrix> f;
      f.reserve(t.factors.size());
      for (auto o : t.factors) f.push_back(observable_matrix(o));
      out += t.coefficient * kron_all(f);
    }
    return out;
  }

 private:
  int n_;
  std::vector<BellTerm> terms_;
};

namespace detail {
/// Adds `sign * first + perm` for every distinct arrangement of `rest`.
inline void add_permutations(BellOperator& op, double sign, char first, std::string rest) {
  std::sort(rest.begin(), rest.end());
  do {
    op.add_term(sign, std::string(1, first) + rest);
  } while (std::next_permutation(rest.begin(), rest.end()));
}
}  // namespace detail

/// Four-qubit Ardehali operator; classical bound 4, quantum maximum 8 sqrt2
/// on (|0000> + |1111>)/sqrt2.  Sixteen terms.
inline BellOperator ardehali_operator() {
  BellOperator op(4);
  op.add_term(1.0, "AXXX");
  op.add_term(1.0, "BXXX");
  detail::add_permutations(op, -1.0, 'A', "XYY");
  detail::add_permutations(op, -1.0, 'B', "XYY");
  detail::add_permutations(op, -1.0, 'A', "XXY");
  detail::add_permutations(op, 1.0, 'B', "XXY");
  op.add_term(1.0, "AYYY");
  op.add_term(-1.0, "BYYY");
  return op;
}

/// (U_1 x ... x U_n) B (U_1 x ... x U_n)^dagger.  Measuring the result on
/// U rho U^dagger reproduces the statistics of B on rho.
inline ComplexMatrix transport_settings(const ComplexMatrix& op_matrix, const std::vector<ComplexMatrix>& unitaries) {
  for (const auto& u : unitaries) {
    if (u.rows() != 2 || u.cols() != 2) raise(ErrorCode::DimensionMismatch, "local unitaries must be 2x2");
    if (!is_unitary(u, 1e-10)) raise(ErrorCode::NotUnitary, "local setting transform is not unitary");
  }
  const ComplexMatrix u = kron_all(unitaries);
  if (u.rows() != op_matrix.rows()) raise(ErrorCode::DimensionMismatch, "one unitary per qubit required");
  return u * op_matrix * u.adjoint();
}

inline ComplexMatrix transport_settings(const BellOperator& op, const std::vector<ComplexMatrix>& unitaries) {
  if (static_cast<int>(unitaries.size()) != op.n_qubits())
    raise(ErrorCode::DimensionMismatch, "one unitary per qubit required");
  return transport_settings(op.materialize(), unitaries);
}

/// I x X x I x X: carries |0000> + |1111> to |0101> + |1010>.
inline std::vector<ComplexMatrix> ghz6_transport() {
  return {pauli::identity(), pauli::x(), pauli::identity(), pauli::x()};
}

/// The operator evaluated along the four-qubit sweeps.
inline ComplexMatrix transported_ardehali() { return transport_settings(ardehali_operator(), ghz6_transport()); }

/// Tr(rho B).  B must be Hermitian, so any imaginary part is rounding.
inline double bell_expectation(const ComplexMatrix& rho, const ComplexMatrix& op) {
  if (rho.rows() != op.rows() || rho.cols() != op.cols())
    raise(ErrorCode::DimensionMismatch, "state and operator dimensions differ");
  const Complex v = (rho.cwiseProduct(op.transpose())).sum();
  if (std::abs(v.imag()) > 1e-10) raise(ErrorCode::NotHermitian, "expectation has an imaginary part");
  return v.real();
}

inline double bell_expectation(const DensityMatrix& rho, const ComplexMatrix& op) {
  return bell_expectation(rho.matrix(), op);
}

/// |<B>| > 2^(n-1), strictly.
inline bool genuine_nonlocality_test(double value, int n_qubits) {
  return std::abs(value) > std::ldexp(1.0, n_qubits - 1);
}

/// beta above which rho_{alpha,beta} starts out genuinely nonlocal.
inline double nonlocality_threshold_beta(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) raise(ErrorCode::ParamOutOfRange, "alpha must lie in [0, 1]");
  return (4.0 * std::sqrt(2.0) + alpha) / (8.0 + alpha);
}

/// Closed-form <B_A>(t) for rho_{alpha,beta}(t) as published.
inline double closed_form_bell_expectation(double alpha, double beta, double t) {
  return (16.0 * beta - alpha * (1.0 - beta) * (9.0 - 7.0 * std::exp(-2.0 * t))) / std::sqrt(2.0);
}

struct SuddenDeath {
  enum class Kind { Never, Immediate, At };
  Kind kind = Kind::Never;
  double time = 0.0;  // only meaningful for At
};

inline std::string to_string(SuddenDeath::Kind k) {
  switch (k) {
    case SuddenDeath::Kind::Never: return "Never";
    case SuddenDeath::Kind::Immediate: return "Immediate";
    case SuddenDeath::Kind::At: return "At";
  }
  return "?";
}

/// First time the closed-form expectation reaches the four-qubit threshold 8.
/// Bisection on [0, 50]; the asymptote decides the cases without a root.
inline SuddenDeath sudden_death_time(double alpha, double beta, double t_tol = 1e-6) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) raise(ErrorCode::ParamOutOfRange, "alpha must lie in [0, 1]");
  if (!(beta >= 0.0 && beta <= 1.0)) raise(ErrorCode::ParamOutOfRange, "beta must lie in [0, 1]");
  const double threshold = 8.0;
  auto f = [&](double t) { return closed_form_bell_expectation(alpha, beta, t) - threshold; };
  if (!(f(0.0) > 0.0)) return {SuddenDeath::Kind::Immediate, 0.0};
  const double asymptote = (16.0 * beta - 9.0 * alpha * (1.0 - beta)) / std::sqrt(2.0) - threshold;
  double hi = 50.0;
  if (asymptote >= 0.0 || f(hi) > 0.0) return {SuddenDeath::Kind::Never, 0.0};
  double lo = 0.0;
  while (hi - lo > t_tol) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0.0 ? lo : hi) = mid;
  }
  return {SuddenDeath::Kind::At, 0.5 * (lo + hi)};
}

}  // namespace cdeph
