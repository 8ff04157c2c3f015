#pragma once

// Dense complex kernel shared by every other module: Kronecker products,
// Hermitian spectra, partial transposition and qubit bipartitions.
//
// Basis ordering is big-endian throughout: qubit 1 is the most significant
// bit of a computational-basis index, so |x1 x2 ... xN> has index
// x1*2^(N-1) + ... + xN.

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include "cdeph/errors.hpp"

namespace cdeph {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

/// Numerical tolerances used by invariant checks across the library.
struct Tolerances {
  double hermiticity = 1e-12;  // relative to max |entry|
  double psd_slack = 1e-9;     // smallest admissible eigenvalue is -psd_slack
  double trace = 1e-10;
  double unit_vector = 1e-12;
  double unitarity = 1e-12;
};
inline constexpr Tolerances kTol{};

inline constexpr int kMaxQubits = 6;

namespace pauli {
inline ComplexMatrix identity() { return ComplexMatrix::Identity(2, 2); }
inline ComplexMatrix x() {
  ComplexMatrix m(2, 2);
  m << 0.0, 1.0, 1.0, 0.0;
  return m;
}
inline ComplexMatrix y() {
  ComplexMatrix m(2, 2);
  m << 0.0, Complex(0.0, -1.0), Complex(0.0, 1.0), 0.0;
  return m;
}
inline ComplexMatrix z() {
  ComplexMatrix m(2, 2);
  m << 1.0, 0.0, 0.0, -1.0;
  return m;
}
}  // namespace pauli

inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  return Eigen::kroneckerProduct(a, b).eval();
}

inline ComplexMatrix kron_all(const std::vector<ComplexMatrix>& factors) {
  ComplexMatrix out = ComplexMatrix::Identity(1, 1);
  for (const auto& f : factors) out = kron(out, f);
  return out;
}

inline double max_abs(const ComplexMatrix& a) {
  return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

inline bool is_hermitian(const ComplexMatrix& a, double rel_tol = kTol.hermiticity) {
  if (a.rows() != a.cols()) return false;
  const double scale = max_abs(a);
  if (scale == 0.0) return true;
  return max_abs(a - a.adjoint()) <= rel_tol * scale;
}

inline void require_hermitian(const ComplexMatrix& a, const char* what) {
  if (!is_hermitian(a)) raise(ErrorCode::NotHermitian, std::string(what) + " is not Hermitian");
}

/// Real eigenvalues in ascending order.
inline RealVector hermitian_eigenvalues(const ComplexMatrix& h) {
  require_hermitian(h, "eigenvalue input");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

struct HermitianEigensystem {
  RealVector values;     // ascending
  ComplexMatrix vectors; // columns are eigenvectors
};

inline HermitianEigensystem hermitian_eigensystem(const ComplexMatrix& h) {
  require_hermitian(h, "eigensystem input");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h);
  return {es.eigenvalues(), es.eigenvectors()};
}

inline int qubit_count_for_dimension(Eigen::Index dim) {
  if (dim < 2 || !std::has_single_bit(static_cast<std::uint64_t>(dim)))
    raise(ErrorCode::DimensionMismatch, "dimension " + std::to_string(dim) + " is not a power of two");
  return std::countr_zero(static_cast<std::uint64_t>(dim));
}

/// A bipartition M|M̄ of N qubits.  Stored canonically so that M always
/// contains qubit 1; `bits` uses the basis-index bit layout (qubit q is bit
/// N-q).
class BipartitionMask {
 public:
  BipartitionMask(int n_qubits, std::uint32_t member_bits) : n_(n_qubits) {
    if (n_qubits < 2 || n_qubits > kMaxQubits)
      raise(ErrorCode::InvalidArgument, "bipartitions need 2.." + std::to_string(kMaxQubits) + " qubits");
    const std::uint32_t full = (1u << n_qubits) - 1u;
    member_bits &= full;
    if (member_bits == 0 || member_bits == full)
      raise(ErrorCode::InvalidArgument, "bipartition mask must be a proper nonempty subset");
    const std::uint32_t first = 1u << (n_qubits - 1);
    bits_ = (member_bits & first) ? member_bits : (full & ~member_bits);
  }

  /// Builds a mask from 1-based qubit numbers.
  static BipartitionMask from_qubits(int n_qubits, const std::vector<int>& qubits) {
    std::uint32_t bits = 0;
    for (int q : qubits) {
      if (q < 1 || q > n_qubits) raise(ErrorCode::InvalidArgument, "qubit index out of range");
      bits |= 1u << (n_qubits - q);
    }
    return BipartitionMask(n_qubits, bits);
  }

  int n_qubits() const { return n_; }
  std::uint32_t bits() const { return bits_; }

  bool contains(int qubit) const { return (bits_ >> (n_ - qubit)) & 1u; }

  /// "A|BC" style label: the side holding fewer qubits is written first, ties
  /// put qubit 1's side first.
  std::string label() const {
    std::string in, out;
    for (int q = 1; q <= n_; ++q) (contains(q) ? in : out) += static_cast<char>('A' + q - 1);
    if (out.size() < in.size()) std::swap(in, out);
    return in + "|" + out;
  }

  friend bool operator==(const BipartitionMask&, const BipartitionMask&) = default;

 private:
  int n_;
  std::uint32_t bits_;
};

/// The 2^(N-1) - 1 canonical bipartitions in ascending bit order.
inline std::vector<BipartitionMask> all_bipartitions(int n_qubits) {
  if (n_qubits < 2 || n_qubits > kMaxQubits) raise(ErrorCode::InvalidArgument, "need 2..6 qubits");
  std::vector<BipartitionMask> out;
  const std::uint32_t first = 1u << (n_qubits - 1);
  const std::uint32_t full = (1u << n_qubits) - 1u;
  for (std::uint32_t m = first; m < full; ++m) out.emplace_back(n_qubits, m);
  return out;
}

/// Transposes the tensor factors of the qubits in `mask`.  Pure index
/// permutation, so applying it twice returns the input exactly.
inline ComplexMatrix partial_transpose(const ComplexMatrix& m, const BipartitionMask& mask) {
  const Eigen::Index dim = m.rows();
  if (m.cols() != dim || dim != (Eigen::Index{1} << mask.n_qubits()))
    raise(ErrorCode::MaskMismatch, "matrix dimension does not match the mask's qubit count");
  const auto sel = static_cast<Eigen::Index>(mask.bits());
  ComplexMatrix out(dim, dim);
  for (Eigen::Index c = 0; c < dim; ++c) {
    for (Eigen::Index r = 0; r < dim; ++r) {
      const Eigen::Index r2 = (r & ~sel) | (c & sel);
      const Eigen::Index c2 = (c & ~sel) | (r & sel);
      out(r2, c2) = m(r, c);
    }
  }
  return out;
}

/// Hermitian, unit-trace, positive semidefinite 2^N x 2^N matrix.
class DensityMatrix {
 public:
  /// Validates every invariant; throws InvalidState / NotHermitian otherwise.
  explicit DensityMatrix(ComplexMatrix m) : matrix_(std::move(m)) {
    if (matrix_.rows() != matrix_.cols()) raise(ErrorCode::DimensionMismatch, "density matrix must be square");
    n_ = qubit_count_for_dimension(matrix_.rows());
    if (n_ > kMaxQubits) raise(ErrorCode::Unsupported, "more than 6 qubits");
    if (!is_hermitian(matrix_)) raise(ErrorCode::NotHermitian, "density matrix is not Hermitian");
    const Complex tr = matrix_.trace();
    if (std::abs(tr - 1.0) > kTol.trace)
      raise(ErrorCode::InvalidState, "trace deviates from 1 by " + std::to_string(std::abs(tr - 1.0)));
    const ComplexMatrix herm = 0.5 * (matrix_ + matrix_.adjoint());
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(herm, Eigen::EigenvaluesOnly);
    if (es.eigenvalues()(0) < -kTol.psd_slack)
      raise(ErrorCode::InvalidState, "negative eigenvalue " + std::to_string(es.eigenvalues()(0)));
  }

  static DensityMatrix from_pure(const ComplexVector& ket) {
    const double norm = ket.norm();
    if (norm == 0.0) raise(ErrorCode::InvalidState, "zero ket");
    const ComplexVector v = ket / norm;
    return DensityMatrix(v * v.adjoint());
  }

  static DensityMatrix maximally_mixed(int n_qubits) {
    const Eigen::Index d = Eigen::Index{1} << n_qubits;
    return DensityMatrix(ComplexMatrix::Identity(d, d) / static_cast<double>(d));
  }

  int n_qubits() const { return n_; }
  Eigen::Index dim() const { return matrix_.rows(); }
  const ComplexMatrix& matrix() const { return matrix_; }
  Complex operator()(Eigen::Index r, Eigen::Index c) const { return matrix_(r, c); }

  double purity() const { return (matrix_ * matrix_).trace().real(); }

 private:
  ComplexMatrix matrix_;
  int n_ = 0;
};

inline ComplexMatrix partial_transpose(const DensityMatrix& rho, const BipartitionMask& mask) {
  if (rho.n_qubits() != mask.n_qubits()) raise(ErrorCode::MaskMismatch, "qubit counts differ");
  return partial_transpose(rho.matrix(), mask);
}

/// Frobenius distance, the state-change norm used by the sweeps.
inline double frobenius_distance(const ComplexMatrix& a, const ComplexMatrix& b) { return (a - b).norm(); }

inline bool is_unitary(const ComplexMatrix& u, double tol = kTol.unitarity) {
  if (u.rows() != u.cols()) return false;
  return max_abs(u.adjoint() * u - ComplexMatrix::Identity(u.rows(), u.cols())) <= tol;
}

}  // namespace cdeph
