#include <doctest.h>

#include <cmath>
#include <random>

#include "lmgheom/errors.hpp"
#include "lmgheom/lindblad.hpp"
#include "lmgheom/unitary.hpp"
#include "oracles.hpp"

using namespace lmgheom;

namespace {

double max_abs(const CMatrix& a) { return a.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("jump operators at the origin") {
  const SpinSystem s(10);
  const Spectrum spec = eigendecompose(build_hamiltonian(s, {0, 0}));
  const double tol = default_bin_tolerance(spec);

  const JumpDecomposition diag = jump_operators(spec, s.jz(), tol);
  REQUIRE(diag.size() == 1);
  CHECK(diag.gaps[0] == 0.0);
  CHECK(max_abs(diag.jump_operator(0) - s.jz()) < 1e-12);

  const JumpDecomposition ladder = jump_operators(spec, s.jx(), tol);
  REQUIRE(ladder.size() == 2);
  for (std::size_t b = 0; b < 2; ++b) {
    CHECK(std::abs(std::abs(ladder.gaps[b]) - 1.0) < 1e-12);
    const CMatrix op = ladder.jump_operator(b);
    if (ladder.gaps[b] > 0) {
      CHECK(max_abs(op - 0.5 * s.j_minus()) < 1e-12);
    } else {
      CHECK(max_abs(op - 0.5 * s.j_plus()) < 1e-12);
    }
  }
}

TEST_CASE("jump operators reconstruct the coupling") {
  const SpinSystem s(10);
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> lam(0.0, 2.0), chi(0.0, 1.2), th(0.0, kPi);
  for (int i = 0; i < 10; ++i) {
    const Spectrum spec = eigendecompose(build_hamiltonian(s, {lam(rng), chi(rng)}));
    const CMatrix q = build_coupling_operator(s, th(rng));
    const JumpDecomposition jd = jump_operators(spec, q, default_bin_tolerance(spec));
    CMatrix sum = CMatrix::Zero(11, 11);
    for (std::size_t b = 0; b < jd.size(); ++b) sum += jd.jump_operator(b);
    CHECK(max_abs(sum - q) < 1e-10);
    // each S(eps) raises the energy by -eps: [H, S] = -eps S
    const CMatrix h = spec.states * spec.energies.asDiagonal() * spec.states.adjoint();
    for (std::size_t b = 0; b < jd.size(); ++b) {
      const CMatrix op = jd.jump_operator(b);
      CHECK(max_abs(commutator(h, op) + jd.gaps[b] * op) < 1e-8);
    }
  }
}

TEST_CASE("rates") {
  const BathModel bath{1.0, 10.0, 1.0, 5};
  CHECK(rate(bath, 0.0) == doctest::Approx(0.4));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> eps(0.01, 8.0);
  for (int i = 0; i < 10; ++i) {
    const double e = eps(rng);
    CHECK(std::abs(rate(bath, -e) / rate(bath, e) - std::exp(-e / bath.temperature)) < 1e-10);
  }
  const BathModel off{0.0, 10.0, 1.0, 5};
  CHECK(rate(off, 1.0) == 0.0);
  CHECK(rate(off, 0.0) == 0.0);
}

TEST_CASE("Lamb shift") {
  const BathModel bath{0.3, 10.0, 0.5, 18};
  CHECK(lamb_shift_coefficient(bath, 0.0) == 0.0);
  CHECK(lamb_shift_coefficient(bath, 1.3) == doctest::Approx(-lamb_shift_coefficient(bath, -1.3)));

  const SpinSystem s(10);
  const Spectrum spec = eigendecompose(build_hamiltonian(s, {0.2, 0.9}));
  JumpDecomposition jd = jump_operators(spec, build_coupling_operator(s, 0.4), default_bin_tolerance(spec));
  const CMatrix hl = lamb_shift(bath, jd, 10);
  CHECK(hermitian_defect(hl) < 1e-12);
  const CMatrix h = build_hamiltonian(s, {0.2, 0.9});
  CHECK(max_abs(commutator(hl, h)) < 1e-10);
  CHECK(max_abs(lamb_shift(BathModel{0.0, 10.0, 0.5, 18}, jd, 10)) == 0.0);
  CHECK(lamb_shift_tail_bound(bath, 5.0) >= 0.0);
}

TEST_CASE("zero coupling is unitary") {
  const SpinSystem sys(6);
  const DrivePath path = DrivePath::first_order();
  const DriveSchedule schedule = build_schedule(sys, path, Protocol::B, 5.0);
  const CMatrix rho0 = thermal_state(eigendecompose(build_hamiltonian(sys, path.start)), 1.0);
  LindbladConfig cfg;
  cfg.rel_tol = 1e-11;
  cfg.abs_tol = 1e-13;
  cfg.max_step = 0.05;
  cfg.output_grid = uniform_grid(5.0, 6);
  const Trajectory l = lindblad_evolve(rho0, sys, schedule, BathModel{0.0, 10.0, 1.0, 5}, kPi / 2, false, cfg);
  const Trajectory u = evolve_unitary(rho0, drive_hamiltonian(sys, schedule, CMatrix::Zero(7, 7)),
                                      cfg.output_grid, 0.002);
  for (std::size_t i = 0; i < u.states.size(); ++i) CHECK(trace_distance(l.states[i], u.states[i]) < 1e-8);
}

TEST_CASE("Gibbs state is the static fixed point") {
  const SpinSystem sys(10);
  const CMatrix h = build_hamiltonian(sys, {0.25, 1.2});
  const Spectrum spec = eigendecompose(h);
  for (double theta : {kPi / 2, 0.7}) {
    for (double q : {0.1, 1.0}) {
      const BathModel bath{q, 10.0, 0.6, 18};
      const CMatrix qop = build_coupling_operator(sys, theta);
      const CMatrix gibbs = thermal_state(spec, 1.0 / 0.6);
      CHECK(max_abs(lindblad_rhs(h, qop, 10, bath, gibbs)) < 1e-12);
      const CMatrix fixed = oracle::stationary_state(
          [&](const CMatrix& r) { return lindblad_rhs(h, qop, 10, bath, r); }, 11);
      CHECK(trace_distance(fixed, gibbs) < 1e-8);
    }
  }

  // long static evolution from the maximally mixed state
  const BathModel bath{1.0, 10.0, 0.6, 18};
  LindbladConfig cfg;
  cfg.rel_tol = 1e-10;
  cfg.abs_tol = 1e-12;
  const CMatrix q = build_coupling_operator(sys, kPi / 2);
  const Trajectory traj = lindblad_evolve(CMatrix::Identity(11, 11) / 11.0, static_hamiltonian(h, 3000.0),
                                          q, 10, bath, cfg);
  CHECK(trace_distance(traj.final_state(), thermal_state(spec, 1.0 / 0.6)) < 1e-6);
}

TEST_CASE("Lindblad config checks") {
  LindbladConfig cfg;
  cfg.integrator = Integrator::exponential;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg.integrator = Integrator::rk4;
  CHECK_NOTHROW(cfg.validate());
  cfg.max_step = 0.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
}
