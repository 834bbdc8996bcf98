#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lmgheom/errors.hpp"
#include "lmgheom/experiments.hpp"

using namespace lmgheom;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::path(LMGHEOM_TEST_DATA) / "scratch" / name;
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("config parsing") {
  const SweepConfig c = parse_sweep_config(R"(
path: second_order
protocol: B
solver: lindblad
N: [6, 8]
log10_T_grid: [-0.8, 0.0, 1.4]
tF_grid: 10
q: [0, 0.1]
theta: [0, pi/2, 0.25*pi]
r: [0, 1]
M: 7
L: 2
integrator: rk4
)");
  CHECK(c.path == PathKind::second_order);
  CHECK(c.protocol == Protocol::B);
  CHECK(c.solver == SolverKind::lindblad);
  CHECK(c.n_qubits == std::vector<int>{6, 8});
  REQUIRE(c.temperatures.size() == 3);
  CHECK(c.temperatures[0] == doctest::Approx(std::pow(10.0, -0.8)));
  CHECK(c.drive_times == std::vector<double>{10.0});
  CHECK(c.thetas[1] == doctest::Approx(kPi / 2));
  CHECK(c.thetas[2] == doctest::Approx(kPi / 4));
  CHECK(c.matsubara.for_temperature(0.1) == 7);
  CHECK(c.depth == 2);
  CHECK(c.integrator == Integrator::rk4);

  const SweepConfig d = parse_sweep_config("path: first_order\n");
  CHECK(d.temperatures.size() == 12);
  CHECK(d.temperatures.front() == doctest::Approx(std::pow(10.0, -0.8)));
  CHECK(d.temperatures.back() == doctest::Approx(std::pow(10.0, 1.4)));
  CHECK(d.drive_times.back() == doctest::Approx(std::pow(10.0, 3.6)));
  CHECK(d.matsubara.for_temperature(0.5) == 18);
  CHECK(d.matsubara.for_temperature(1.0) == 5);

  CHECK_THROWS_AS(parse_sweep_config("bogus: 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_sweep_config("N: 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_sweep_config("q: -1\n"), ConfigError);
  CHECK_THROWS_AS(parse_sweep_config("theta: 2*pa\n"), ConfigError);
  CHECK_THROWS_AS(parse_sweep_config("[1, 2]\n"), ConfigError);
  CHECK_THROWS_AS(parse_sweep_config("q: 0\nr: 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_sweep_config("path: : :\n"), ConfigError);
}

TEST_CASE("grid enumeration and routing") {
  SweepConfig c = parse_sweep_config("N: 4\nT_grid: [0.5, 2]\ntF_grid: [1, 2]\nq: [0, 0.2]\ntheta: [0, pi/2]\nr: [0, 1]\n");
  int rejected = 0;
  const auto pts = enumerate_points(c, &rejected);
  // (q, theta, r): 8 combos, minus r=1 with q=0 (2) and r=1 with theta=0 (1 more)
  CHECK(rejected == 2 * 3);
  CHECK(pts.size() == 2 * 5 * 2);
  for (const auto& p : pts) {
    if (p.q == 0.0) {
      CHECK(p.solver == SolverKind::unitary);
      CHECK(p.m_cut == 0);
      CHECK(p.depth == 0);
    } else {
      CHECK(p.solver == SolverKind::heom);
      CHECK(p.m_cut == (p.temperature < 1.0 ? 18 : 5));
      CHECK(p.depth == 3);
    }
  }
  for (std::size_t i = 1; i < pts.size(); ++i) CHECK(coordinate_less(pts[i - 1], pts[i]));
  c.force_heom = true;
  for (const auto& p : enumerate_points(c)) CHECK(p.solver == SolverKind::heom);
}

TEST_CASE("coordinate keys") {
  SweepPoint a;
  a.temperature = 0.1;
  SweepPoint b = a;
  CHECK(a.key() == b.key());
  CHECK(a.hash() == b.hash());
  b.temperature = std::nextafter(0.1, 1.0);
  CHECK(a.key() != b.key());
  CHECK(a.hash() != b.hash());
}

TEST_CASE("sweep CSV round trip") {
  SweepRecord r;
  r.point.q = 0.1;
  r.point.theta = kPi / 3;
  r.point.temperature = std::pow(10.0, -0.8);
  r.fidelity = std::numeric_limits<double>::quiet_NaN();
  r.trace_drift = 1e-13;
  std::stringstream ss;
  write_sweep_csv(ss, {r});
  const auto back = read_sweep_csv(ss);
  REQUIRE(back.size() == 1);
  CHECK(back[0].point.key() == r.point.key());
  CHECK(std::isnan(back[0].fidelity));
  std::istringstream bad("path,protocol\n");
  CHECK_THROWS_AS(read_sweep_csv(bad), ConfigError);
}

TEST_CASE("sweeps are idempotent") {
  const fs::path dir = scratch("idempotent");
  SweepConfig c = parse_sweep_config("N: 4\nlog10_T_grid: [-0.8, 0, 1.4]\ntF_grid: [2, 4]\nq: 0\n");
  c.output_dir = dir.string();
  int calls = 0;
  const SweepResult first = run_sweep(c, [&](const SweepRecord&) { ++calls; });
  CHECK(first.computed == 6);
  CHECK(calls == 6);
  for (const auto& r : first.records) {
    CHECK(r.fidelity >= 0.0);
    CHECK(r.fidelity <= 1.0 + 1e-9);
    CHECK(r.error.empty());
  }
  const std::string csv = slurp(dir / "sweep.csv");
  const std::string meta = slurp(dir / "sweep.json");
  const auto stamp = fs::last_write_time(dir / "sweep.csv");
  const SweepResult second = run_sweep(c);
  CHECK(second.computed == 0);
  CHECK(slurp(dir / "sweep.csv") == csv);
  CHECK(slurp(dir / "sweep.json") == meta);
  CHECK(fs::last_write_time(dir / "sweep.csv") == stamp);
  REQUIRE(second.records.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) CHECK(second.records[i].fidelity == first.records[i].fidelity);

  // extending the grid only computes the new points
  c.drive_times.push_back(8.0);
  CHECK(run_sweep(c).computed == 3);
}

TEST_CASE("failed points are recorded") {
  SweepConfig c = parse_sweep_config("N: 4\nT_grid: 0.5\ntF_grid: 2\nq: 0.1\nL: 2\nM: 2\n");
  SweepPoint p = enumerate_points(c).front();
  p.t_final = -1.0;
  const SweepRecord rec = evaluate_point(p, c);
  CHECK(std::isnan(rec.fidelity));
  CHECK(!rec.error.empty());
}

TEST_CASE("optimal temperature") {
  std::vector<double> ts, fs;
  for (int i = 0; i < 9; ++i) {
    const double x = -0.8 + 0.25 * i;
    ts.push_back(std::pow(10.0, x));
    fs.push_back(0.7 - 2.0 * (x - 0.13) * (x - 0.13));
  }
  const OptimalTemperature o = find_optimal_temperature(ts, fs);
  CHECK(o.interior);
  CHECK(std::abs(std::log10(o.t_opt) - 0.13) < 1e-10);
  CHECK(std::abs(o.max_fidelity - 0.7) < 1e-10);

  std::vector<double> lin_t, lin_f;
  for (int i = 0; i < 6; ++i) {
    lin_t.push_back(0.3 * (i + 1));
    lin_f.push_back(1.0 - (lin_t.back() - 1.1) * (lin_t.back() - 1.1));
  }
  const OptimalTemperature ol = find_optimal_temperature(lin_t, lin_f, TemperatureAxis::linear);
  CHECK(std::abs(ol.t_opt - 1.1) < 1e-10);

  std::vector<double> mono;
  for (double t : ts) mono.push_back(1.0 / (1.0 + t));
  const OptimalTemperature m = find_optimal_temperature(ts, mono);
  CHECK_FALSE(m.interior);
  CHECK(m.argmax == 0);
  CHECK_THROWS_AS(find_optimal_temperature({1, 2, 3, 4}, {1, 2, 3, 4}), InvalidArgument);
}

TEST_CASE("scaling fits") {
  const std::vector<double> n{6, 8, 10, 12, 14};
  std::vector<double> lin, pw, qi;
  for (double x : n) {
    lin.push_back(0.7 * x);
    pw.push_back(2.5 * std::pow(x, -0.9));
    qi.push_back(3.0 / x - 4.0 / (x * x));
  }
  const FitResult a = fit_scaling(n, lin, FitModel::linear);
  CHECK(std::abs(a.coefficients[0] - 0.7) < 1e-12);
  CHECK(a.r_squared == doctest::Approx(1.0));
  const FitResult b = fit_scaling(n, pw, FitModel::power);
  CHECK(b.coefficients[0] == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(b.coefficients[1] == doctest::Approx(0.9).epsilon(1e-12));
  const FitResult c = fit_scaling(n, qi, FitModel::quadratic_inverse);
  CHECK(c.coefficients[0] == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(c.coefficients[1] == doctest::Approx(4.0).epsilon(1e-10));

  // residuals grow with the size of a quadratic perturbation
  double prev = 0.0;
  for (double eps : {0.0, 0.01, 0.05, 0.2}) {
    std::vector<double> y;
    for (double x : n) y.push_back(0.7 * x + eps * (x - 10.0) * (x - 10.0));
    const FitResult f = fit_scaling(n, y, FitModel::linear);
    double norm = 0.0;
    for (double r : f.residuals) norm += r * r;
    CHECK(norm >= prev);
    prev = norm;
  }
  CHECK_THROWS_AS(fit_scaling({5, 5, 5}, {1, 2, 3}, FitModel::quadratic_inverse), FitError);
  CHECK_THROWS_AS(fit_scaling({5, 6}, {1, 2}, FitModel::linear), InvalidArgument);
  CHECK(parse_fit_model("power") == FitModel::power);
}

TEST_CASE("solver comparison without coupling") {
  SweepConfig c = parse_sweep_config("N: 4\nlog10_T_grid: [-0.5, 0.5]\ntF_grid: 3\nq: 0\nforce_heom: true\n");
  const auto rows = compare_solvers(c);
  REQUIRE(rows.size() == 2);
  for (const auto& r : rows) CHECK(r.discrepancy < 1e-6);
  CHECK(rows[0].low_temperature);
  CHECK_FALSE(rows[1].low_temperature);
  std::ostringstream os;
  write_comparison_csv(os, rows);
  CHECK(os.str().rfind("T,F_heom,F_lindblad,discrepancy,low_T\n", 0) == 0);
}
