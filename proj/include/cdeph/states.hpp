#pragma once

// State families used throughout the library, with closed-form z-axis
// evolutions and spectra that serve as oracles for the numeric channel.

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "cdeph/dephasing.hpp"
#include "cdeph/errors.hpp"
#include "cdeph/linalg.hpp"

namespace cdeph {

enum class BellKind { PhiPlus, PhiMinus, PsiPlus, PsiMinus };

inline ComplexVector basis_ket(int n_qubits, std::uint32_t index) {
  ComplexVector v = ComplexVector::Zero(Eigen::Index{1} << n_qubits);
  v(static_cast<Eigen::Index>(index)) = 1.0;
  return v;
}

inline ComplexVector bell_ket(BellKind kind) {
  const double s = 1.0 / std::sqrt(2.0);
  ComplexVector v = ComplexVector::Zero(4);
  switch (kind) {
    case BellKind::PhiPlus: v(0) = s; v(3) = s; break;
    case BellKind::PhiMinus: v(0) = s; v(3) = -s; break;
    case BellKind::PsiPlus: v(1) = s; v(2) = s; break;
    case BellKind::PsiMinus: v(1) = s; v(2) = -s; break;
  }
  return v;
}

inline DensityMatrix bell_state(BellKind kind) { return DensityMatrix::from_pure(bell_ket(kind)); }

/// (|x> +- |x̄>)/sqrt2.  Canonical form keeps the leading bit of x at 0; the
/// complement flip only changes a global sign, so the density matrix is
/// unaffected.
struct GhzSpec {
  int n_qubits = 0;
  std::uint32_t pattern = 0;  // x1 is the most significant bit
  bool plus = true;

  GhzSpec(int n, std::uint32_t x, bool plus_sign = true) : n_qubits(n), plus(plus_sign) {
    if (n < 2 || n > kMaxQubits) raise(ErrorCode::InvalidArgument, "GHZ states need 2..6 qubits");
    const std::uint32_t full = (1u << n) - 1u;
    if (x > full) raise(ErrorCode::InvalidArgument, "GHZ pattern has more bits than qubits");
    pattern = (x >> (n - 1)) & 1u ? (full & ~x) : x;
  }

  std::uint32_t complement() const { return ((1u << n_qubits) - 1u) & ~pattern; }
};

inline ComplexVector ghz_ket(const GhzSpec& spec) {
  const double s = 1.0 / std::sqrt(2.0);
  ComplexVector v = ComplexVector::Zero(Eigen::Index{1} << spec.n_qubits);
  v(static_cast<Eigen::Index>(spec.pattern)) = s;
  v(static_cast<Eigen::Index>(spec.complement())) = spec.plus ? s : -s;
  return v;
}

inline DensityMatrix ghz_state(const GhzSpec& spec) { return DensityMatrix::from_pure(ghz_ket(spec)); }

/// All 2^N GHZ-basis states ordered by canonical pattern, then sign (+ first).
inline std::vector<GhzSpec> ghz_enumeration(int n_qubits) {
  std::vector<GhzSpec> out;
  for (std::uint32_t x = 0; x < (1u << (n_qubits - 1)); ++x) {
    out.emplace_back(n_qubits, x, true);
    out.emplace_back(n_qubits, x, false);
  }
  return out;
}

/// GHZ_i with the 1-based labelling used for the four-qubit families:
/// GHZ_i = (|i-1> + |complement>)/sqrt2, e.g. GHZ_2 = |0001>+|1110>,
/// GHZ_6 = |0101>+|1010>.
inline GhzSpec ghz_labelled(int n_qubits, int label) {
  if (label < 1 || label > (1 << (n_qubits - 1))) raise(ErrorCode::InvalidArgument, "GHZ label out of range");
  return {n_qubits, static_cast<std::uint32_t>(label - 1), true};
}

inline ComplexVector w_ket(int n_qubits) {
  if (n_qubits != 3) raise(ErrorCode::Unsupported, "W state is provided for three qubits only");
  ComplexVector v = ComplexVector::Zero(8);
  const double s = 1.0 / std::sqrt(3.0);
  v(1) = s;  // |001>
  v(2) = s;  // |010>
  v(4) = s;  // |100>
  return v;
}

inline DensityMatrix w_state(int n_qubits) { return DensityMatrix::from_pure(w_ket(n_qubits)); }

// --- parametrised families -------------------------------------------------

struct RhoA { double a; };
struct RhoAB { double a; double b; BellKind bell = BellKind::PsiPlus; };
struct RhoEta { double eta; };
struct RhoAlpha { double alpha; };
struct RhoAlphaBeta { double alpha; double beta; };

using FamilyParams = std::variant<RhoA, RhoAB, RhoEta, RhoAlpha, RhoAlphaBeta>;

namespace detail {
inline void check_unit_interval(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) raise(ErrorCode::ParamOutOfRange, std::string(name) + " must lie in [0, 1]");
}

inline ComplexMatrix projector(const ComplexVector& v) { return v * v.adjoint(); }

/// z-axis dephased projector onto (|x> +- |x̄>)/sqrt2: the coherence picks up
/// exp(-|w(x) - w(x̄)| t).
inline ComplexMatrix dephased_ghz(const GhzSpec& spec, double t) {
  ComplexMatrix m = projector(ghz_ket(spec));
  const int wx = std::popcount(spec.pattern);
  const int wc = std::popcount(spec.complement());
  const double damp = std::exp(-std::abs(wx - wc) * t);
  const auto x = static_cast<Eigen::Index>(spec.pattern);
  const auto c = static_cast<Eigen::Index>(spec.complement());
  m(x, c) *= damp;
  m(c, x) *= damp;
  return m;
}

inline ComplexMatrix identity_over_dim(int n_qubits) {
  const Eigen::Index d = Eigen::Index{1} << n_qubits;
  return ComplexMatrix::Identity(d, d) / static_cast<double>(d);
}
}  // namespace detail

inline void validate(const FamilyParams& params) {
  std::visit(
      [](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, RhoA>) detail::check_unit_interval(p.a, "a");
        if constexpr (std::is_same_v<P, RhoAB>) {
          detail::check_unit_interval(p.a, "a");
          detail::check_unit_interval(p.b, "b");
          if (p.bell != BellKind::PsiPlus && p.bell != BellKind::PsiMinus)
            raise(ErrorCode::ParamOutOfRange, "rho_ab mixes in Psi+ or Psi- only");
        }
        if constexpr (std::is_same_v<P, RhoEta>) detail::check_unit_interval(p.eta, "eta");
        if constexpr (std::is_same_v<P, RhoAlpha>) detail::check_unit_interval(p.alpha, "alpha");
        if constexpr (std::is_same_v<P, RhoAlphaBeta>) {
          detail::check_unit_interval(p.alpha, "alpha");
          detail::check_unit_interval(p.beta, "beta");
        }
      },
      params);
}

inline int family_qubits(const FamilyParams& params) {
  return std::visit(
      [](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, RhoA> || std::is_same_v<P, RhoAB>) return 2;
        else if constexpr (std::is_same_v<P, RhoEta>) return 3;
        else return 4;
      },
      params);
}

inline std::string family_name(const FamilyParams& params) {
  return std::visit(
      [](const auto& p) -> std::string {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, RhoA>) return "rho_a";
        else if constexpr (std::is_same_v<P, RhoAB>) return "rho_ab";
        else if constexpr (std::is_same_v<P, RhoEta>) return "rho_eta";
        else if constexpr (std::is_same_v<P, RhoAlpha>) return "rho_alpha";
        else return "rho_alpha_beta";
      },
      params);
}

/// Closed-form z-axis evolution under the standard Cauchy spectrum.  t = 0
/// gives the initial family member.
inline DensityMatrix evolved_family(const FamilyParams& params, double t,
                                    const FieldOrientation& orientation = FieldOrientation::z_axis()) {
  validate(params);
  if (!orientation.is_z_axis())
    raise(ErrorCode::Unsupported, "closed-form family evolution exists for the z-axis field only");
  if (!(t >= 0.0)) raise(ErrorCode::InvalidArgument, "time must be non-negative");
  using detail::dephased_ghz;
  using detail::identity_over_dim;
  using detail::projector;
  const GhzSpec phi_plus(2, 0b00, true);
  const GhzSpec ghz3(3, 0b000, true);
  const GhzSpec ghz2 = ghz_labelled(4, 2);
  const GhzSpec ghz6 = ghz_labelled(4, 6);

  auto rho_a = [&](double a) -> ComplexMatrix { return a * dephased_ghz(phi_plus, t) + (1.0 - a) * identity_over_dim(2); };
  auto rho_alpha = [&](double al) -> ComplexMatrix { return al * dephased_ghz(ghz2, t) + (1.0 - al) * identity_over_dim(4); };

  ComplexMatrix m = std::visit(
      [&](const auto& p) -> ComplexMatrix {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, RhoA>) {
          return rho_a(p.a);
        } else if constexpr (std::is_same_v<P, RhoAB>) {
          return p.b * projector(bell_ket(p.bell)) + (1.0 - p.b) * rho_a(p.a);
        } else if constexpr (std::is_same_v<P, RhoEta>) {
          return (1.0 - p.eta) * dephased_ghz(ghz3, t) + p.eta * projector(w_ket(3));
        } else if constexpr (std::is_same_v<P, RhoAlpha>) {
          return rho_alpha(p.alpha);
        } else {
          return p.beta * projector(ghz_ket(ghz6)) + (1.0 - p.beta) * rho_alpha(p.alpha);
        }
      },
      params);
  return DensityMatrix(std::move(m));
}

inline DensityMatrix build_family(const FamilyParams& params) { return evolved_family(params, 0.0); }

/// Eigenvalues of the partial transpose of rho_ab(t), in the order
/// [negative candidate, 1+a+b-ab, two time-dependent values].
inline std::array<double, 4> closed_pt_spectrum_rho_ab(double a, double b, double t) {
  validate(RhoAB{a, b});
  const double e = std::exp(-2.0 * t);
  return {(1.0 + a - (3.0 + a) * b) / 4.0, (1.0 + a + b - a * b) / 4.0,
          (1.0 + b - a * (1.0 - b) * (1.0 - 2.0 * e)) / 4.0, (1.0 + b - a * (1.0 - b) * (1.0 + 2.0 * e)) / 4.0};
}

/// Spectrum of rho_{alpha,beta}(t): thirteen-fold (1-a)(1-b)/16, the DFS
/// eigenvalue and the two time-dependent ones, in that order.
inline std::array<double, 16> closed_spectrum_rho_alpha_beta(double alpha, double beta, double t) {
  validate(RhoAlphaBeta{alpha, beta});
  const double e = std::exp(-2.0 * t);
  std::array<double, 16> out{};
  for (int i = 0; i < 13; ++i) out[static_cast<std::size_t>(i)] = (1.0 - alpha) * (1.0 - beta) / 16.0;
  out[13] = (1.0 - alpha + 15.0 * beta + alpha * beta) / 16.0;
  out[14] = (1.0 + 7.0 * alpha - 8.0 * alpha * e) * (1.0 - beta) / 16.0;
  out[15] = (1.0 + 7.0 * alpha + 8.0 * alpha * e) * (1.0 - beta) / 16.0;
  return out;
}

}  // namespace cdeph
