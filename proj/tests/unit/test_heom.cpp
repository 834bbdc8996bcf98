#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>

#include "lmgheom/errors.hpp"
#include "lmgheom/heom.hpp"
#include "lmgheom/hierarchy.hpp"
#include "lmgheom/observables.hpp"
#include "lmgheom/unitary.hpp"
#include "oracles.hpp"

using namespace lmgheom;

namespace {

CMatrix random_hermitian(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  CMatrix a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = cplx(g(rng), g(rng));
  return 0.5 * (a + a.adjoint());
}

void check_contracts(const Trajectory& traj) {
  for (const auto& rho : traj.states) {
    CHECK(std::abs(rho.trace() - 1.0) < 1e-8);
    CHECK(hermitian_defect(rho) < 1e-10);
    CHECK(min_eigenvalue(rho) > -1e-8);
  }
}

}  // namespace

TEST_CASE("hierarchy layout") {
  CHECK(HierarchyLayout::count(3, 6) == 84);
  CHECK(HierarchyLayout::count(1, 1) == 2);
  const HierarchyLayout lay(3, 6, 11);
  CHECK(lay.size() == 84);
  const HierarchyLayout tiny(1, 1, 2);
  CHECK(tiny.size() == 2);
  for (int k = 0; k < 6; ++k) {
    REQUIRE(lay.up(0, k) != HierarchyLayout::npos);
    CHECK(lay.down(lay.up(0, k), k) == 0);
    CHECK(lay.down(0, k) == HierarchyLayout::npos);
  }
  for (std::size_t a = 1; a < lay.size(); ++a) {
    CHECK(lay.level(a) >= lay.level(a - 1));
    CHECK(lay.find(lay.counts(a)) == a);
    int total = 0;
    for (int n : lay.counts(a)) total += n;
    CHECK(total == lay.level(a));
    for (int k = 0; k < 6; ++k)
      if (lay.level(a) == 3) CHECK(lay.up(a, k) == HierarchyLayout::npos);
  }
  CHECK_THROWS_AS(HierarchyLayout(10, 19, 11, 1000), ResourceError);
  CHECK_THROWS_AS(HierarchyLayout(0, 3, 11), InvalidArgument);
  CHECK(HierarchyLayout::count(200, 200) == HierarchyLayout::npos);

  const HierarchyState st = build_hierarchy(3, 5, 11);
  CHECK(st.layout->size() == 84);
  CHECK(st.data.rows() == 11);
  CHECK(st.data.cols() == 11 * 84);
}

TEST_CASE("fast and general right-hand sides agree") {
  std::mt19937_64 rng(7);
  const int d = 5;
  const BathModel bath{0.3, 10.0, 0.7, 3};
  auto layout = std::make_shared<const HierarchyLayout>(3, 4, d);
  const HeomGenerator gen(layout, matsubara_expansion(bath), terminator_residual(bath));
  const CMatrix h = random_hermitian(d, rng), q = random_hermitian(d, rng);
  CMatrix x(d, d * layout->size());
  for (std::size_t a = 0; a < layout->size(); ++a) x.middleCols(a * d, d) = random_hermitian(d, rng);

  CMatrix fast, general;
  gen.apply(h, q, x, fast, true);
  gen.apply_general(h, q, x, general);
  CHECK((fast - general).cwiseAbs().maxCoeff() < 1e-11 * general.cwiseAbs().maxCoeff());
  for (std::size_t a = 0; a < layout->size(); ++a)
    CHECK(hermitian_defect(general.middleCols(a * d, d)) < 1e-11);
}

TEST_CASE("zero coupling reduces to the commutator") {
  std::mt19937_64 rng(11);
  const SpinSystem sys(4);
  const DriveSchedule schedule = build_schedule(sys, DrivePath::first_order(), Protocol::A, 3.0);
  const BathModel bath{0.0, 10.0, 1.0, 2};
  HierarchyState st = build_hierarchy(2, 2, 5);
  for (std::size_t a = 0; a < st.layout->size(); ++a) st.ado(a) = random_hermitian(5, rng);
  const CMatrix qs = build_coupling_operator(sys, kPi / 2) / 2.0;
  const HierarchyState d = heom_rhs(st, 1.2, sys, schedule, bath, qs, false);
  const CMatrix h = build_hamiltonian(sys, schedule.lambda_at(1.2));
  const cplx mi(0.0, -1.0);
  HeomGenerator gen(st.layout, matsubara_expansion(bath), 0.0);
  for (std::size_t a = 0; a < st.layout->size(); ++a) {
    const CMatrix expect = mi * commutator(h, st.ado(a)) - gen.decay_rates()[a] * st.ado(a);
    CHECK((d.ado(a) - expect).cwiseAbs().maxCoeff() < 1e-12);
  }
  CMatrix undamped;
  gen.apply(h, qs, st.data, undamped, false);
  for (std::size_t a = 0; a < st.layout->size(); ++a)
    CHECK((undamped.middleCols(a * 5, 5) - mi * commutator(h, st.ado(a))).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("closed-system limit against a dense Liouville solver") {
  const SpinSystem sys(4);
  const DrivePath path = DrivePath::first_order();
  const CMatrix rho0 = thermal_state(eigendecompose(build_hamiltonian(sys, path.start)), 2.0);
  for (Protocol protocol : {Protocol::A, Protocol::B}) {
    const DriveSchedule schedule = build_schedule(sys, path, protocol, 6.0);
    const auto grid = uniform_grid(6.0, 7);
    const auto ham = drive_hamiltonian(sys, schedule, CMatrix::Zero(5, 5));
    const auto ref = oracle::liouville_rk4(
        rho0, [&](double t) { return build_hamiltonian(sys, schedule.lambda_at(t)); },
        schedule.breakpoints(), grid, 2e-3);
    for (Integrator integ : {Integrator::adaptive, Integrator::rk4, Integrator::exponential}) {
      SolverConfig cfg;
      cfg.integrator = integ;
      cfg.max_step = integ == Integrator::adaptive ? 0.05 : 0.01;
      cfg.output_grid = grid;
      const Trajectory traj = evolve(rho0, sys, schedule, BathModel{0.0, 10.0, 0.5, 2}, cfg, kPi / 2, false);
      REQUIRE(traj.states.size() == ref.size());
      for (std::size_t i = 0; i < ref.size(); ++i) CHECK(trace_distance(traj.states[i], ref[i]) < 1e-6);
      check_contracts(traj);
    }
    const Trajectory u = evolve_unitary(rho0, ham, grid);
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK(trace_distance(u.states[i], ref[i]) < 1e-7);
  }
}

TEST_CASE("two-level relaxation follows the golden rule") {
  const double gap = 1.0, temp = 1.0, q = 0.05, gamma = 10.0;
  CMatrix h = CMatrix::Zero(2, 2);
  h(0, 0) = 0.5 * gap;
  h(1, 1) = -0.5 * gap;
  CMatrix sx = CMatrix::Zero(2, 2);
  sx(0, 1) = sx(1, 0) = 1.0;
  CMatrix rho0 = CMatrix::Zero(2, 2);
  rho0(0, 0) = 1.0;

  SolverConfig cfg;
  cfg.integrator = Integrator::exponential;
  cfg.max_step = 0.05;
  cfg.output_grid = {0.0, 5.0, 25.0, 45.0};
  const Trajectory traj = evolve_heom(rho0, static_hamiltonian(h, 45.0), sx,
                                      BathModel{q, gamma, temp, 5}, cfg);
  auto z = [&](int i) { return (traj.states[i](0, 0) - traj.states[i](1, 1)).real(); };
  const double k_heom = std::log((z(2) - z(1)) / (z(3) - z(2))) / 20.0;

  const double j = 2.0 * q * gamma * gap / (gamma * gamma + gap * gap);
  const double k_golden = 2.0 * j / std::tanh(0.5 * gap / temp);
  CHECK(k_heom == doctest::Approx(k_golden).epsilon(0.1));
  check_contracts(traj);
}

TEST_CASE("static drive thermalises to the Gibbs state") {
  const SpinSystem sys(4);
  const CMatrix h = build_hamiltonian(sys, {0.5, 0.3});
  const CMatrix qs = build_coupling_operator(sys, kPi / 2) / 2.0;
  SolverConfig cfg;
  cfg.integrator = Integrator::exponential;
  cfg.max_step = 0.1;
  const Trajectory traj = evolve_heom(CMatrix::Identity(5, 5) / 5.0, static_hamiltonian(h, 600.0),
                                      qs, BathModel{0.1, 10.0, 1.0, 5}, cfg);
  const CMatrix gibbs = thermal_state(eigendecompose(h), 1.0);
  CHECK(trace_distance(traj.final_state(), gibbs) < 0.05);
}

TEST_CASE("exponential integrator converges at fourth order") {
  const SpinSystem sys(4);
  const DrivePath path = DrivePath::first_order();
  const DriveSchedule schedule = build_schedule(sys, path, Protocol::A, 8.0);
  const CMatrix rho0 = thermal_state(eigendecompose(build_hamiltonian(sys, path.start)), 1.0);
  const BathModel bath{0.3, 10.0, 1.0, 3};
  auto run = [&](Integrator integ, double step) {
    SolverConfig cfg;
    cfg.integrator = integ;
    cfg.max_step = step;
    cfg.rel_tol = 1e-11;
    cfg.abs_tol = 1e-13;
    return evolve(rho0, sys, schedule, bath, cfg, kPi / 2, true).final_state();
  };
  const CMatrix ref = run(Integrator::adaptive, 0.02);
  const double e1 = (run(Integrator::exponential, 0.4) - ref).cwiseAbs().maxCoeff();
  const double e2 = (run(Integrator::exponential, 0.2) - ref).cwiseAbs().maxCoeff();
  CHECK(e1 / e2 > 8.0);
  CHECK((run(Integrator::exponential, 0.05) - ref).cwiseAbs().maxCoeff() < 1e-6);
  CHECK((run(Integrator::rk4, 0.01) - ref).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("parity is conserved for a diagonal coupling") {
  const SpinSystem sys(6);
  const DrivePath path = DrivePath::second_order();
  const DriveSchedule schedule = build_schedule(sys, path, Protocol::A, 10.0);
  const CMatrix rho0 = thermal_state(eigendecompose(build_hamiltonian(sys, path.start)), 1.0 / 0.5);
  SolverConfig cfg;
  cfg.output_grid = uniform_grid(10.0, 21);
  const Trajectory traj = evolve(rho0, sys, schedule, BathModel{1.0, 10.0, 0.5, 18}, cfg, 0.0, true);
  const double p0 = parity_expectation(rho0, sys);
  for (const auto& rho : traj.states) CHECK(std::abs(parity_expectation(rho, sys) - p0) < 1e-6);
  check_contracts(traj);
}

TEST_CASE("argument validation") {
  const CMatrix rho = CMatrix::Identity(3, 3) / 3.0;
  const auto ham = static_hamiltonian(CMatrix::Identity(3, 3), 1.0);
  SolverConfig cfg;
  CHECK_THROWS_AS(evolve_heom(rho, ham, CMatrix::Identity(2, 2), BathModel{}, cfg), InvalidArgument);
  cfg.depth = 0;
  CHECK_THROWS_AS(evolve_heom(rho, ham, CMatrix::Identity(3, 3), BathModel{}, cfg), InvalidArgument);
  cfg.depth = 12;
  cfg.ado_cap = 1000;
  CHECK_THROWS_AS(evolve_heom(rho, ham, CMatrix::Identity(3, 3), BathModel{0.1, 10, 0.1, 18}, cfg),
                  ResourceError);
}
