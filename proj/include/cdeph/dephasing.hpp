#pragma once

// Collective dephasing of N qubits coupled to one fluctuating field of fixed
// orientation n:
//
//   rho(t) = sum_{j,k=0..N} M_jk(t) Theta_j rho(0) Theta_k,   M_jk(t) = phi((j-k) t)
//
// where Theta_j projects onto the sector with j qubits in the (1 - n.sigma)/2
// eigenspace and phi is the characteristic function of the field-strength
// distribution.  Time is the dimensionless product Gamma*t everywhere.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "cdeph/errors.hpp"
#include "cdeph/linalg.hpp"

namespace cdeph {

class FieldOrientation {
 public:
  /// Throws NotUnitVector unless |n| = 1 within 1e-12.
  FieldOrientation(double nx, double ny, double nz) : n_{nx, ny, nz} {
    const double norm = std::sqrt(nx * nx + ny * ny + nz * nz);
    if (!std::isfinite(norm) || std::abs(norm - 1.0) > kTol.unit_vector)
      raise(ErrorCode::NotUnitVector, "field orientation has norm " + std::to_string(norm));
  }

  /// Rescales an arbitrary nonzero direction to unit length.
  static FieldOrientation normalized(double nx, double ny, double nz) {
    const double norm = std::sqrt(nx * nx + ny * ny + nz * nz);
    if (!(norm > 0.0) || !std::isfinite(norm)) raise(ErrorCode::NotUnitVector, "zero or non-finite direction");
    return {nx / norm, ny / norm, nz / norm};
  }

  static FieldOrientation z_axis() { return {0.0, 0.0, 1.0}; }

  double x() const { return n_[0]; }
  double y() const { return n_[1]; }
  double z() const { return n_[2]; }

  bool is_z_axis() const { return n_[0] == 0.0 && n_[1] == 0.0 && n_[2] == 1.0; }

  /// n.sigma
  ComplexMatrix dot_sigma() const { return n_[0] * pauli::x() + n_[1] * pauli::y() + n_[2] * pauli::z(); }

 private:
  double n_[3];
};

/// Field fluctuation law, represented through its characteristic function.
class SpectralDistribution {
 public:
  struct StandardCauchy {};
  struct Cauchy {
    double center = 0.0;  // x0
    double scale = 1.0;   // half width at half maximum
  };
  /// Samples of phi on an ascending grid starting at t = 0; negative times use
  /// phi(-t) = conj(phi(t)).
  struct Tabulated {
    std::vector<double> times;
    std::vector<Complex> values;
  };
  using Kind = std::variant<StandardCauchy, Cauchy, Tabulated>;

  SpectralDistribution() : kind_(StandardCauchy{}) {}

  static SpectralDistribution standard_cauchy() { return SpectralDistribution(StandardCauchy{}); }

  static SpectralDistribution cauchy(double center, double scale) {
    if (!(scale > 0.0) || !std::isfinite(scale) || !std::isfinite(center))
      raise(ErrorCode::InvalidSpectrum, "Cauchy scale must be positive and finite");
    return SpectralDistribution(Cauchy{center, scale});
  }

  static SpectralDistribution tabulated(std::vector<double> times, std::vector<Complex> values) {
    if (times.size() != values.size() || times.size() < 2)
      raise(ErrorCode::InvalidSpectrum, "tabulated characteristic function needs >= 2 matching samples");
    if (times.front() != 0.0) raise(ErrorCode::InvalidSpectrum, "tabulated grid must start at t = 0");
    if (values.front() != Complex(1.0, 0.0)) raise(ErrorCode::InvalidSpectrum, "phi(0) must equal 1");
    for (std::size_t i = 1; i < times.size(); ++i)
      if (!(times[i] > times[i - 1])) raise(ErrorCode::InvalidSpectrum, "tabulated grid must be strictly ascending");
    for (const auto& v : values)
      if (!(std::abs(v) <= 1.0)) raise(ErrorCode::InvalidSpectrum, "|phi(t)| must not exceed 1");
    return SpectralDistribution(Tabulated{std::move(times), std::move(values)});
  }

  const Kind& kind() const { return kind_; }
  bool is_standard_cauchy() const { return std::holds_alternative<StandardCauchy>(kind_); }

  std::string describe() const {
    if (std::holds_alternative<StandardCauchy>(kind_)) return "cauchy";
    if (const auto* c = std::get_if<Cauchy>(&kind_)) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "cauchy:%.17g,%.17g", c->center, c->scale);
      return buf;
    }
    return "tabulated:" + std::to_string(std::get<Tabulated>(kind_).times.size());
  }

 private:
  explicit SpectralDistribution(Kind k) : kind_(std::move(k)) {}
  Kind kind_;
};

/// phi(t) = E[exp(i w t)].  Standard Cauchy gives exp(-|t|) exactly.
inline Complex characteristic_function(const SpectralDistribution& spectrum, double t) {
  struct Visitor {
    double t;
    Complex operator()(const SpectralDistribution::StandardCauchy&) const { return {std::exp(-std::abs(t)), 0.0}; }
    Complex operator()(const SpectralDistribution::Cauchy& c) const {
      return std::exp(Complex(-c.scale * std::abs(t), c.center * t));
    }
    Complex operator()(const SpectralDistribution::Tabulated& tab) const {
      const double at = std::abs(t);
      if (at > tab.times.back())
        raise(ErrorCode::OutOfGrid, "t = " + std::to_string(t) + " lies outside the tabulated range");
      const auto it = std::lower_bound(tab.times.begin(), tab.times.end(), at);
      const auto hi = static_cast<std::size_t>(it - tab.times.begin());
      Complex v;
      if (tab.times[hi] == at) {
        v = tab.values[hi];
      } else {
        const std::size_t lo = hi - 1;
        const double w = (at - tab.times[lo]) / (tab.times[hi] - tab.times[lo]);
        v = (1.0 - w) * tab.values[lo] + w * tab.values[hi];
      }
      return t < 0.0 ? std::conj(v) : v;
    }
  };
  return std::visit(Visitor{t}, spectrum.kind());
}

/// (N+1)x(N+1) Toeplitz weights M_jk = phi((j-k) t).
struct ToeplitzCoefficients {
  int n_qubits = 0;
  double t = 0.0;
  ComplexMatrix entries;
};

/// Throws InvalidSpectrum when M(t) fails the positive-semidefinite check,
/// which signals an invalid characteristic function.
inline ToeplitzCoefficients toeplitz_matrix(const SpectralDistribution& spectrum, int n_qubits, double t) {
  if (!(t >= 0.0)) raise(ErrorCode::InvalidArgument, "time must be non-negative");
  if (n_qubits < 1 || n_qubits > kMaxQubits) raise(ErrorCode::InvalidArgument, "need 1..6 qubits");
  const int size = n_qubits + 1;
  std::vector<Complex> diag(static_cast<std::size_t>(size));
  for (int d = 0; d < size; ++d) diag[static_cast<std::size_t>(d)] = characteristic_function(spectrum, d * t);
  ComplexMatrix m(size, size);
  for (int j = 0; j < size; ++j) {
    for (int k = 0; k < size; ++k) {
      const Complex v = diag[static_cast<std::size_t>(std::abs(j - k))];
      m(j, k) = j >= k ? v : std::conj(v);
    }
  }
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(m, Eigen::EigenvaluesOnly);
  if (es.eigenvalues()(0) < -1e-10)
    raise(ErrorCode::InvalidSpectrum, "Toeplitz dephasing matrix is not positive semidefinite at t = " +
                                          std::to_string(t));
  return {n_qubits, t, std::move(m)};
}

/// Lambda_+ and Lambda_-, the eigenprojectors of n.sigma.
inline std::pair<ComplexMatrix, ComplexMatrix> projectors(const FieldOrientation& n) {
  const ComplexMatrix id = ComplexMatrix::Identity(2, 2);
  const ComplexMatrix ns = n.dot_sigma();
  return {0.5 * (id + ns), 0.5 * (id - ns)};
}

/// Theta_j for j = 0..N: sum over the binomial(N, j) distinct placements of j
/// factors Lambda_- and N-j factors Lambda_+.
inline std::vector<ComplexMatrix> theta_operators(int n_qubits, const FieldOrientation& n) {
  if (n_qubits < 1 || n_qubits > kMaxQubits) raise(ErrorCode::InvalidArgument, "need 1..6 qubits");
  const auto [plus, minus] = projectors(n);
  const Eigen::Index dim = Eigen::Index{1} << n_qubits;
  std::vector<ComplexMatrix> theta(static_cast<std::size_t>(n_qubits + 1), ComplexMatrix::Zero(dim, dim));
  for (std::uint32_t pattern = 0; pattern < (1u << n_qubits); ++pattern) {
    ComplexMatrix term = ComplexMatrix::Identity(1, 1);
    for (int q = 1; q <= n_qubits; ++q) {
      const bool lower = (pattern >> (n_qubits - q)) & 1u;
      term = kron(term, lower ? minus : plus);
    }
    theta[static_cast<std::size_t>(std::popcount(pattern))] += term;
  }
  return theta;
}

/// Immutable once built; safe to share across threads.
class DephasingChannel {
 public:
  DephasingChannel(int n_qubits, FieldOrientation orientation,
                   SpectralDistribution spectrum = SpectralDistribution::standard_cauchy())
      : n_(n_qubits),
        orientation_(orientation),
        spectrum_(std::move(spectrum)),
        theta_(theta_operators(n_qubits, orientation_)) {}

  static DephasingChannel z_axis(int n_qubits) { return {n_qubits, FieldOrientation::z_axis()}; }

  int n_qubits() const { return n_; }
  const FieldOrientation& orientation() const { return orientation_; }
  const SpectralDistribution& spectrum() const { return spectrum_; }
  const std::vector<ComplexMatrix>& theta() const { return theta_; }

 private:
  int n_;
  FieldOrientation orientation_;
  SpectralDistribution spectrum_;
  std::vector<ComplexMatrix> theta_;
};

/// Full Theta-sum evolution, valid for any orientation and spectrum.
inline DensityMatrix evolve(const DephasingChannel& channel, const DensityMatrix& rho0, double t) {
  if (rho0.n_qubits() != channel.n_qubits())
    raise(ErrorCode::DimensionMismatch, "state and channel qubit counts differ");
  const auto m = toeplitz_matrix(channel.spectrum(), channel.n_qubits(), t);
  const auto& theta = channel.theta();
  const Eigen::Index dim = rho0.dim();
  ComplexMatrix out = ComplexMatrix::Zero(dim, dim);
  ComplexMatrix right(dim, dim);
  for (std::size_t j = 0; j < theta.size(); ++j) {
    right.setZero();
    for (std::size_t k = 0; k < theta.size(); ++k)
      right += m.entries(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) * theta[k];
    out.noalias() += theta[j] * rho0.matrix() * right;
  }
  return DensityMatrix(std::move(out));
}

/// z-axis shortcut: element (x, y) is scaled by phi((w(x) - w(y)) t) where w
/// is the Hamming weight.
inline DensityMatrix evolve_z_fastpath(const DensityMatrix& rho0, double t,
                                       const SpectralDistribution& spectrum = SpectralDistribution::standard_cauchy()) {
  const auto m = toeplitz_matrix(spectrum, rho0.n_qubits(), t);
  const Eigen::Index dim = rho0.dim();
  ComplexMatrix out(dim, dim);
  for (Eigen::Index c = 0; c < dim; ++c) {
    const int wc = std::popcount(static_cast<std::uint64_t>(c));
    for (Eigen::Index r = 0; r < dim; ++r) {
      const int wr = std::popcount(static_cast<std::uint64_t>(r));
      out(r, c) = m.entries(wr, wc) * rho0(r, c);
    }
  }
  return DensityMatrix(std::move(out));
}

/// True iff rho(t) stays within 1e-9 (Frobenius) of rho(0) at every sample.
inline bool is_dfs_state(const DephasingChannel& channel, const DensityMatrix& rho0,
                         const std::vector<double>& sample_times) {
  if (sample_times.empty()) raise(ErrorCode::InvalidArgument, "need at least one sample time");
  return std::all_of(sample_times.begin(), sample_times.end(), [&](double t) {
    return frobenius_distance(evolve(channel, rho0, t).matrix(), rho0.matrix()) <= 1e-9;
  });
}

}  // namespace cdeph
