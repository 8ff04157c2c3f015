#include <catch2/catch_amalgamated.hpp>

#include "cdeph/entanglement.hpp"
#include "cdeph/random.hpp"
#include "cdeph/states.hpp"

using namespace cdeph;
using Catch::Matchers::WithinAbs;

namespace {

// Twice the magnitude of the one possible negative eigenvalue, X-state form:
// for two qubits the PT spectrum is known in closed form.
double x_state_negativity(double a, double b) { return std::max(0.0, ((3.0 + a) * b - 1.0 - a) / 2.0); }

DensityMatrix product_state(int n) {
  // |0>|+>|0>...
  ComplexVector zero(2), plus(2);
  zero << 1.0, 0.0;
  plus << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  ComplexMatrix ket = ComplexMatrix::Ones(1, 1);
  for (int q = 0; q < n; ++q) ket = kron(ket, q % 2 ? plus : zero);
  return DensityMatrix::from_pure(ket.col(0));
}

}  // namespace

TEST_CASE("negativity examples", "[entanglement]") {
  const auto m = BipartitionMask::from_qubits(2, {1});
  for (double t : {0.0, 1.0, 4.0}) {
    CHECK_THAT(negativity(evolved_family(RhoAB{1.0, 0.75}, t), m), WithinAbs(0.5, 1e-12));
    CHECK_THAT(negativity(evolved_family(RhoAB{1.0, 0.7}, t), m), WithinAbs(0.4, 1e-12));
  }
  CHECK_THAT(negativity(DensityMatrix::maximally_mixed(2), m), WithinAbs(0.0, 1e-15));
  CHECK_THAT(negativity(bell_state(BellKind::PhiPlus), m), WithinAbs(1.0, 1e-14));
  CHECK_THROWS_AS(negativity(bell_state(BellKind::PhiPlus), BipartitionMask::from_qubits(3, {1})), Error);
}

TEST_CASE("two-qubit genuine negativity is half the negativity", "[entanglement]") {
  const auto m = BipartitionMask::from_qubits(2, {1});
  rnd::Engine g(12);
  for (int trial = 0; trial < 8; ++trial) {
    const double a = rnd::uniform(g), b = rnd::uniform(g), t = rnd::uniform(g, 0.0, 3.0);
    const auto rho = evolved_family(RhoAB{a, b, trial % 2 ? BellKind::PsiMinus : BellKind::PsiPlus}, t);
    const auto r = genuine_negativity(rho);
    CHECK_THAT(2.0 * r.value, WithinAbs(negativity(rho, m), 1e-6));
    CHECK_THAT(negativity(rho, m), WithinAbs(x_state_negativity(a, b), 1e-10));
  }
  // Complex states take the doubled embedding.
  const DensityMatrix rnd_state(rnd::random_density(g, 2));
  const auto r = genuine_negativity(rnd_state);
  CHECK_FALSE(r.real_reduced);
  CHECK_THAT(2.0 * r.value, WithinAbs(negativity(rnd_state, m), 1e-6));
}

TEST_CASE("genuine negativity anchors", "[entanglement]") {
  const auto ghz4 = ghz_state(GhzSpec(4, 0));
  const auto r = genuine_negativity(ghz4);
  CHECK_THAT(r.value, WithinAbs(0.5, 1e-7));
  CHECK(r.status == sdp::SdpStatus::Optimal);
  CHECK(r.decomposition.size() == 7);
  CHECK(verify_witness(r, ghz4).all_passed());

  CHECK_THAT(genuine_negativity(ghz_state(GhzSpec(3, 0))).value, WithinAbs(0.5, 1e-7));
  CHECK_THAT(genuine_negativity(product_state(3)).value, WithinAbs(0.0, 1e-7));
  CHECK_THAT(genuine_negativity(DensityMatrix::maximally_mixed(4)).value, WithinAbs(0.0, 1e-7));

  // A two-qubit Bell pair next to a third qubit is biseparable.
  const DensityMatrix pair_plus_one(kron(bell_state(BellKind::PhiPlus).matrix(), product_state(1).matrix()));
  CHECK_THAT(genuine_negativity(pair_plus_one).value, WithinAbs(0.0, 1e-7));

  CHECK_THROWS_AS(genuine_negativity(DensityMatrix::maximally_mixed(5)), Error);
}

TEST_CASE("solver failure surfaces as an error", "[entanglement]") {
  GenuineNegativityOptions opt;
  opt.sdp.max_iterations = 3;
  try {
    (void)genuine_negativity(ghz_state(GhzSpec(3, 0)), opt);
    FAIL("capped solve reported success");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SolverFailed);
    CHECK_FALSE(e.is_config_error());
  }
}

TEST_CASE("witness certificates", "[entanglement]") {
  const auto rho = w_state(3);
  const auto r = genuine_negativity(rho);
  const auto rep = verify_witness(r, rho);
  CHECK(rep.all_passed());
  CHECK(rep.entanglement_detected);
  CHECK(rep.max_decomposition_residual() <= 1e-7);
  CHECK_THAT(rep.expectation, WithinAbs(-r.value, 1e-7));

  // Corrupting one Q_M breaks its decomposition check and nothing else.
  auto bad = r;
  bad.decomposition[1].q(0, 0) += 0.01;
  const auto broken = verify_witness(bad, rho);
  CHECK_FALSE(broken.all_passed());
  for (const auto& c : broken.checks)
    if (c.name == "decomposition " + bad.decomposition[1].mask.label()) CHECK_FALSE(c.passed);
  CHECK(broken.max_decomposition_residual() > 1e-3);

  // W = I = P_M + 0 for every cut: valid, but detects nothing.
  GenuineNegativityResult id;
  id.witness = ComplexMatrix::Identity(8, 8);
  id.value = 0.0;
  for (const auto& m : all_bipartitions(3)) id.decomposition.push_back({m, id.witness, ComplexMatrix::Zero(8, 8)});
  const auto trivial = verify_witness(id, rho);
  CHECK_THAT(trivial.expectation, WithinAbs(1.0, 1e-14));
  CHECK_FALSE(trivial.entanglement_detected);
  CHECK(trivial.all_passed());

  GenuineNegativityResult wrong_dim;
  wrong_dim.witness = ComplexMatrix::Identity(4, 4);
  CHECK_THROWS_AS(verify_witness(wrong_dim, rho), Error);
}

TEST_CASE("random states respect the monotone bounds", "[entanglement]") {
  rnd::Engine g(77);
  for (int trial = 0; trial < 6; ++trial) {
    const int n = 2 + trial % 2;
    const DensityMatrix rho(rnd::random_density(g, n));
    const auto r = genuine_negativity(rho);
    CHECK(r.value >= 0.0);
    CHECK(r.value <= 0.5 + 1e-7);
    CHECK(verify_witness(r, rho).all_passed());
  }
  for (int trial = 0; trial < 4; ++trial) {
    const auto rho = DensityMatrix::from_pure(rnd::haar_ket(g, 8));
    const auto r = genuine_negativity(rho);
    CHECK(r.value <= 0.5 + 1e-7);
    CHECK(verify_witness(r, rho).all_passed());
  }
}

TEST_CASE("extended precision agrees with double", "[entanglement]") {
  const auto rho = evolved_family(RhoEta{0.9}, 0.5);
  const auto d = genuine_negativity(rho);
  const auto e = genuine_negativity(rho, GenuineNegativityOptions::for_precision(sdp::Precision::Extended));
  CHECK_THAT(e.value, WithinAbs(d.value, 1e-7));
  CHECK(verify_witness(e, rho).all_passed());
}

TEST_CASE("time invariance detection", "[entanglement]") {
  const auto grid = linear_grid(0.0, 5.0, 6);
  const auto inv = detect_time_invariance(RhoAlphaBeta{0.9, 0.85}, grid);
  CHECK(inv.invariant());
  CHECK(inv.max_deviation <= 1e-5);
  CHECK(inv.max_state_change >= 1e-3);

  const auto decay = detect_time_invariance(RhoAlphaBeta{0.9, 0.1}, grid);
  CHECK_FALSE(decay.invariant());
  CHECK(decay.values.front() > decay.values.back());

  const auto eta = detect_time_invariance(RhoEta{0.9}, grid);
  CHECK_FALSE(eta.invariant());

  // W sits in the decoherence-free subspace: invariant, but the state never moves.
  const auto w = detect_time_invariance(w_state(3), DephasingChannel::z_axis(3), grid);
  CHECK(w.invariant());
  CHECK(w.max_state_change < 1e-12);

  CHECK_THROWS_AS(detect_time_invariance(RhoEta{0.9}, {}), Error);
  CHECK_THROWS_AS(detect_time_invariance(RhoEta{0.9}, {1.0, 0.5}), Error);
  CHECK_THROWS_AS(detect_time_invariance(RhoEta{0.9}, {-1.0, 0.5}), Error);
}

TEST_CASE("linear grids", "[entanglement]") {
  const auto g = linear_grid(0.0, 5.0, 26);
  CHECK(g.size() == 26);
  CHECK(g.front() == 0.0);
  CHECK(g.back() == 5.0);
  CHECK_THAT(g[1], WithinAbs(0.2, 1e-15));
  CHECK_THROWS_AS(linear_grid(0.0, 5.0, 1), Error);
  CHECK_THROWS_AS(linear_grid(2.0, 1.0, 5), Error);
}

TEST_CASE("random invariance scan", "[entanglement]") {
  ScanOptions opt;
  opt.n_samples = 4;
  opt.seed = 7;
  opt.grid = linear_grid(0.0, 5.0, 4);
  const auto a = random_invariance_scan(opt);
  REQUIRE(a.samples.size() == 4);
  CHECK(a.nontrivial_hits() == 0);
  for (const auto& s : a.samples) {
    CHECK(s.e0 <= 0.5 + 1e-7);
    CHECK(s.max_state_change > 0.0);
    double total = 0.0;
    for (const auto& c : s.components) total += c.weight;
    CHECK_THAT(total, WithinAbs(1.0, 1e-12));
  }

  // Same seed, same report, regardless of the worker count.
  opt.jobs = 3;
  const auto b = random_invariance_scan(opt);
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    CHECK(a.samples[i].seed == b.samples[i].seed);
    CHECK(a.samples[i].max_delta_e == b.samples[i].max_delta_e);
  }

  opt.n_samples = 0;
  CHECK_THROWS_AS(random_invariance_scan(opt), Error);
  opt.n_samples = 2;
  opt.n_qubits = 4;
  CHECK_THROWS_AS(random_invariance_scan(opt), Error);
}

TEST_CASE("DFS-biased four-qubit scan finds invariant mixtures", "[entanglement]") {
  ScanOptions opt;
  opt.n_qubits = 4;
  opt.dfs_biased = true;
  opt.n_samples = 3;
  opt.seed = 1;
  opt.grid = linear_grid(0.0, 5.0, 4);
  const auto rep = random_invariance_scan(opt);
  CHECK(rep.nontrivial_hits() >= 1);
}
