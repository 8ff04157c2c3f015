#pragma once

// Counter-based seeding plus the few random objects the scans and property
// tests need.  Every stream derives from one 64-bit seed, so work items can
// be evaluated in any order and still reproduce.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "cdeph/linalg.hpp"

namespace cdeph::rnd {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed for work item `counter` of stream `stream` under a master seed.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter, std::uint64_t stream = 0) {
  return mix64(mix64(master ^ mix64(stream)) + counter);
}

using Engine = std::mt19937_64;

inline double uniform(Engine& g, double lo = 0.0, double hi = 1.0) {
  // Hand-rolled so values do not depend on the standard library's
  // distribution implementation.
  const double u = static_cast<double>(g() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

/// Box-Muller; deterministic across standard libraries.
inline double normal(Engine& g) {
  double u1 = 0.0;
  while (u1 == 0.0) u1 = uniform(g);
  const double u2 = uniform(g);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

inline ComplexVector haar_ket(Engine& g, Eigen::Index dim) {
  ComplexVector v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v(i) = Complex(normal(g), normal(g));
  return v / v.norm();
}

/// Haar-random unitary via QR of a Ginibre matrix with the phase fix.
inline ComplexMatrix haar_unitary(Engine& g, Eigen::Index dim) {
  ComplexMatrix z(dim, dim);
  for (Eigen::Index c = 0; c < dim; ++c)
    for (Eigen::Index r = 0; r < dim; ++r) z(r, c) = Complex(normal(g), normal(g)) / std::sqrt(2.0);
  Eigen::HouseholderQR<ComplexMatrix> qr(z);
  ComplexMatrix q = qr.householderQ();
  const ComplexMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < dim; ++i) {
    const Complex d = r(i, i);
    q.col(i) *= std::abs(d) > 0.0 ? d / std::abs(d) : Complex(1.0);
  }
  return q;
}

/// Flat Dirichlet weights.
inline std::vector<double> dirichlet(Engine& g, std::size_t k) {
  std::vector<double> w(k);
  double sum = 0.0;
  for (auto& x : w) {
    double u = 0.0;
    while (u == 0.0) u = uniform(g);
    x = -std::log(u);
    sum += x;
  }
  for (auto& x : w) x /= sum;
  return w;
}

/// Random mixed state: Hilbert-Schmidt measure via a square Ginibre factor.
inline ComplexMatrix random_density(Engine& g, int n_qubits) {
  const Eigen::Index d = Eigen::Index{1} << n_qubits;
  ComplexMatrix a(d, d);
  for (Eigen::Index c = 0; c < d; ++c)
    for (Eigen::Index r = 0; r < d; ++r) a(r, c) = Complex(normal(g), normal(g));
  ComplexMatrix rho = a * a.adjoint();
  rho /= rho.trace().real();
  return 0.5 * (rho + rho.adjoint());
}

}  // namespace cdeph::rnd
