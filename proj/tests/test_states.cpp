#include <algorithm>

#include <catch2/catch_amalgamated.hpp>

#include "cdeph/dephasing.hpp"
#include "cdeph/random.hpp"
#include "cdeph/states.hpp"

using namespace cdeph;
using Catch::Matchers::WithinAbs;

namespace {

std::vector<double> sorted(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v;
}

std::vector<double> eigen_list(const ComplexMatrix& m) {
  const RealVector ev = hermitian_eigenvalues(m);
  return {ev.data(), ev.data() + ev.size()};
}

}  // namespace

TEST_CASE("bell states", "[states]") {
  const double s = 1.0 / std::sqrt(2.0);
  const ComplexVector phi = bell_ket(BellKind::PhiPlus);
  CHECK((phi - Eigen::Vector4cd(s, 0, 0, s)).norm() < 1e-15);
  const ComplexVector psi = bell_ket(BellKind::PsiMinus);
  CHECK((psi - Eigen::Vector4cd(0, s, -s, 0)).norm() < 1e-15);
  for (auto k : {BellKind::PhiPlus, BellKind::PhiMinus, BellKind::PsiPlus, BellKind::PsiMinus})
    CHECK_THAT(bell_state(k).purity(), WithinAbs(1.0, 1e-14));
}

TEST_CASE("GHZ states", "[states]") {
  const double s = 1.0 / std::sqrt(2.0);
  const ComplexVector g2 = ghz_ket(ghz_labelled(4, 2));
  CHECK(std::abs(g2(0b0001) - s) < 1e-15);
  CHECK(std::abs(g2(0b1110) - s) < 1e-15);
  CHECK_THAT(g2.norm(), WithinAbs(1.0, 1e-15));

  const ComplexVector g6 = ghz_ket(ghz_labelled(4, 6));
  CHECK(std::abs(g6(0b0101) - s) < 1e-15);
  CHECK(std::abs(g6(0b1010) - s) < 1e-15);

  const ComplexVector g1 = ghz_ket(ghz_labelled(4, 1));
  CHECK(std::abs(g1(0) - s) < 1e-15);
  CHECK(std::abs(g1(15) - s) < 1e-15);

  // A pattern and its complement give the same canonical spec.
  const GhzSpec a(4, 0b1010), b(4, 0b0101);
  CHECK(a.pattern == b.pattern);
  CHECK(a.pattern == 0b0101);
  CHECK(ghz_enumeration(3).size() == 8);

  CHECK_THROWS_AS(ghz_labelled(4, 0), Error);
  CHECK_THROWS_AS(ghz_labelled(4, 9), Error);
  CHECK_THROWS_AS(GhzSpec(7, 0), Error);
  CHECK_THROWS_AS(GhzSpec(3, 0b1000), Error);
}

TEST_CASE("W state", "[states]") {
  const ComplexVector w = w_ket(3);
  const double s = 1.0 / std::sqrt(3.0);
  for (int i = 0; i < 8; ++i) {
    const bool one_hot = i == 1 || i == 2 || i == 4;
    CHECK(std::abs(w(i) - (one_hot ? s : 0.0)) < 1e-15);
  }
  const auto rho = w_state(3);
  CHECK_THAT(rho.matrix().trace().real(), WithinAbs(1.0, 1e-15));
  CHECK_THAT(rho.purity(), WithinAbs(1.0, 1e-14));
  CHECK(frobenius_distance(evolve(DephasingChannel::z_axis(3), rho, 2.0).matrix(), rho.matrix()) < 1e-14);
  CHECK_THROWS_AS(w_ket(4), Error);
}

TEST_CASE("family endpoints", "[states]") {
  CHECK(frobenius_distance(build_family(RhoA{1.0}).matrix(), bell_state(BellKind::PhiPlus).matrix()) < 1e-15);
  CHECK(frobenius_distance(build_family(RhoAlpha{0.0}).matrix(), DensityMatrix::maximally_mixed(4).matrix()) < 1e-15);
  CHECK(frobenius_distance(build_family(RhoEta{1.0}).matrix(), w_state(3).matrix()) < 1e-15);
  CHECK(frobenius_distance(build_family(RhoAlphaBeta{0.3, 1.0}).matrix(),
                           ghz_state(ghz_labelled(4, 6)).matrix()) < 1e-15);
  CHECK(family_qubits(RhoAB{0.5, 0.5}) == 2);
  CHECK(family_qubits(RhoEta{0.5}) == 3);
  CHECK(family_qubits(RhoAlphaBeta{0.5, 0.5}) == 4);
  CHECK(family_name(RhoEta{0.5}) == "rho_eta");
}

TEST_CASE("family validation", "[states]") {
  CHECK_THROWS_AS(validate(RhoA{1.1}), Error);
  CHECK_THROWS_AS(validate(RhoAB{0.5, -0.1}), Error);
  CHECK_THROWS_AS(validate(RhoAB{0.5, 0.5, BellKind::PhiPlus}), Error);
  CHECK_THROWS_AS(validate(RhoEta{std::nan("")}), Error);
  CHECK_THROWS_AS(validate(RhoAlphaBeta{0.5, 2.0}), Error);
  CHECK_THROWS_AS(evolved_family(RhoA{0.5}, -1.0), Error);
  CHECK_THROWS_AS(evolved_family(RhoA{0.5}, 1.0, FieldOrientation(1.0, 0.0, 0.0)), Error);
}

TEST_CASE("evolved families follow the weight rule", "[states]") {
  const double t = 0.65;
  // rho_ab: Phi+ coherence scaled by exp(-2t), Psi block intact.
  const RhoAB ab{0.6, 0.3};
  const auto e_ab = evolved_family(ab, t);
  const auto i_ab = build_family(ab);
  CHECK_THAT(e_ab(0, 3).real(), WithinAbs(i_ab(0, 3).real() * std::exp(-2 * t), 1e-15));
  CHECK(std::abs(e_ab(1, 2) - i_ab(1, 2)) < 1e-15);

  // rho_eta: GHZ coherence carries |0 - 3| = 3, the W block weight 0.
  const RhoEta eta{0.4};
  const auto e_eta = evolved_family(eta, t);
  CHECK_THAT(e_eta(0, 7).real(), WithinAbs(0.6 * 0.5 * std::exp(-3 * t), 1e-15));
  CHECK(std::abs(e_eta(1, 2) - 0.4 / 3.0) < 1e-15);

  // rho_{alpha,beta}: GHZ_2 coherence exp(-2t), GHZ_6 block intact.
  const RhoAlphaBeta abt{0.9, 0.85};
  const auto e_abt = evolved_family(abt, t);
  CHECK_THAT(e_abt(0b0001, 0b1110).real(), WithinAbs(0.15 * 0.9 * 0.5 * std::exp(-2 * t), 1e-15));
  CHECK_THAT(e_abt(0b0101, 0b1010).real(), WithinAbs(0.85 * 0.5, 1e-15));

  // Closed forms agree with the generic channel.
  for (const FamilyParams p : {FamilyParams(ab), FamilyParams(eta), FamilyParams(abt), FamilyParams(RhoA{0.7})}) {
    const auto rho0 = build_family(p);
    const auto numeric = evolve(DephasingChannel::z_axis(rho0.n_qubits()), rho0, t);
    CHECK(frobenius_distance(numeric.matrix(), evolved_family(p, t).matrix()) < 1e-14);
  }
}

TEST_CASE("closed PT spectrum of rho_ab", "[states]") {
  const auto inf = closed_pt_spectrum_rho_ab(1.0, 0.75, 50.0);
  CHECK_THAT(inf[0], WithinAbs(-0.25, 1e-15));

  const auto at0 = closed_pt_spectrum_rho_ab(1.0, 0.75, 0.0);
  const auto mask = BipartitionMask::from_qubits(2, {1});
  const auto numeric = eigen_list(partial_transpose(build_family(RhoAB{1.0, 0.75}), mask));
  const auto closed = sorted({at0.begin(), at0.end()});
  for (std::size_t i = 0; i < 4; ++i) CHECK_THAT(numeric[i], WithinAbs(closed[i], 1e-12));

  rnd::Engine g(9);
  for (int trial = 0; trial < 20; ++trial) {
    const double a = rnd::uniform(g), b = rnd::uniform(g), t = rnd::uniform(g, 0.0, 5.0);
    const auto v = closed_pt_spectrum_rho_ab(a, b, t);
    CHECK_THAT(v[0] + v[1] + v[2] + v[3], WithinAbs(1.0, 1e-14));
    const auto num = eigen_list(partial_transpose(evolved_family(RhoAB{a, b}, t), mask));
    const auto cl = sorted({v.begin(), v.end()});
    for (std::size_t i = 0; i < 4; ++i) CHECK_THAT(num[i], WithinAbs(cl[i], 1e-10));
  }
}

TEST_CASE("closed spectrum of rho_alpha_beta", "[states]") {
  const auto s = closed_spectrum_rho_alpha_beta(0.9, 0.85, 0.0);
  CHECK_THAT(*std::max_element(s.begin(), s.end()), WithinAbs(0.8509375, 1e-15));

  const auto pure = closed_spectrum_rho_alpha_beta(1.0, 0.0, 0.0);
  CHECK_THAT(pure[14], WithinAbs(0.0, 1e-15));
  CHECK_THAT(pure[15], WithinAbs(1.0, 1e-15));

  const auto numeric = eigen_list(build_family(RhoAlphaBeta{0.9, 0.85}).matrix());
  const auto closed = sorted({s.begin(), s.end()});
  for (std::size_t i = 0; i < 16; ++i) CHECK_THAT(numeric[i], WithinAbs(closed[i], 1e-12));

  rnd::Engine g(10);
  for (int trial = 0; trial < 20; ++trial) {
    const double al = rnd::uniform(g), be = rnd::uniform(g), t = rnd::uniform(g, 0.0, 5.0);
    const auto v = closed_spectrum_rho_alpha_beta(al, be, t);
    const auto num = eigen_list(evolved_family(RhoAlphaBeta{al, be}, t).matrix());
    const auto cl = sorted({v.begin(), v.end()});
    for (std::size_t i = 0; i < 16; ++i) CHECK_THAT(num[i], WithinAbs(cl[i], 1e-10));
  }
}
