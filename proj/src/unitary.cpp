#include "lmgheom/unitary.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "lmgheom/errors.hpp"
#include "lmgheom/ode.hpp"

namespace lmgheom {

CMatrix unitary_exponential(const CMatrix& a, double h) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (a + a.adjoint()));
  const CVector phases = (es.eigenvalues() * -h).unaryExpr([](double x) {
    return cplx(std::cos(x), std::sin(x));
  });
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

std::vector<CMatrix> propagate_unitary(const TimeDependentHamiltonian& h,
                                       const std::vector<double>& times, double max_step) {
  if (!(max_step > 0.0)) throw InvalidArgument("unitary propagation needs a positive max_step");
  const std::vector<double> outputs = resolve_output_grid(times, h.t_final);
  std::vector<double> points = h.breakpoints;
  points.insert(points.end(), outputs.begin(), outputs.end());
  const std::vector<double> stops = merge_stops(0.0, h.t_final, points);

  static const double s3 = std::sqrt(3.0);
  const double c1 = 0.5 - s3 / 6.0, c2 = 0.5 + s3 / 6.0;
  const double a1 = (3.0 - 2.0 * s3) / 12.0, a2 = (3.0 + 2.0 * s3) / 12.0;

  const Eigen::Index d = h.at(0.0).rows();
  CMatrix u = CMatrix::Identity(d, d);
  std::vector<CMatrix> result;
  result.reserve(outputs.size());
  std::size_t next = 0;
  double t = 0.0;
  auto report = [&] {
    const double tol = 1e-13 * std::max(1.0, h.t_final);
    while (next < outputs.size() && outputs[next] <= t + tol) {
      result.push_back(u);
      ++next;
    }
  };
  report();
  for (double target : stops) {
    if (target <= t) continue;
    const double span = target - t;
    const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(span / max_step - 1e-9)));
    const double dt = span / static_cast<double>(n);
    const double start = t;
    for (std::size_t i = 0; i < n; ++i) {
      const double ti = start + i * dt;
      const CMatrix h1 = h.at(ti + c1 * dt);
      const CMatrix h2 = h.at(ti + c2 * dt);
      const CMatrix first = unitary_exponential(a2 * h1 + a1 * h2, dt);
      const CMatrix second = unitary_exponential(a1 * h1 + a2 * h2, dt);
      u = (second * (first * u)).eval();
    }
    t = target;
    report();
  }
  return result;
}

Trajectory evolve_unitary(const CMatrix& rho0, const TimeDependentHamiltonian& h,
                          const std::vector<double>& output_grid, double max_step) {
  validate_density_matrix(rho0);
  const std::vector<double> outputs = resolve_output_grid(output_grid, h.t_final);
  const std::vector<CMatrix> us = propagate_unitary(h, outputs, max_step);
  Trajectory traj;
  traj.solver = "unitary";
  for (std::size_t k = 0; k < outputs.size(); ++k)
    record_sample(traj, outputs[k], us[k] * rho0 * us[k].adjoint());
  return traj;
}

}  // namespace lmgheom
