#include "lmgheom/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lmgheom/errors.hpp"
#include "lmgheom/ode.hpp"

namespace lmgheom {

std::vector<double> merge_stops(double t0, double t1, std::vector<double> points) {
  points.push_back(t1);
  std::sort(points.begin(), points.end());
  std::vector<double> out;
  const double tol = 1e-13 * std::max(1.0, std::abs(t1));
  for (double p : points) {
    if (p <= t0 + tol || p > t1 + tol) continue;
    p = std::min(p, t1);
    if (!out.empty() && p - out.back() <= tol) {
      out.back() = std::max(out.back(), p);
      continue;
    }
    out.push_back(p);
  }
  if (out.empty() || out.back() != t1) {
    if (!out.empty() && t1 - out.back() <= tol) out.back() = t1;
    else out.push_back(t1);
  }
  return out;
}

TimeDependentHamiltonian drive_hamiltonian(const SpinSystem& sys, const DriveSchedule& schedule,
                                           const CMatrix& extra) {
  TimeDependentHamiltonian h;
  h.t_final = schedule.t_final();
  h.breakpoints = schedule.breakpoints();
  const CMatrix base = sys.h_zeeman() + extra;
  h.at = [base, hl = sys.h_lambda(), hc = sys.h_chi(), hc2 = sys.h_chi2(),
          schedule](double t) -> CMatrix {
    const ControlPoint p = schedule.lambda_at(t);
    return base + p.lambda * hl + p.chi * hc + (p.chi * p.chi) * hc2;
  };
  return h;
}

TimeDependentHamiltonian static_hamiltonian(const CMatrix& h, double t_final) {
  return {[h](double) { return h; }, t_final, {}};
}

std::string to_string(Integrator integrator) {
  switch (integrator) {
    case Integrator::adaptive: return "adaptive";
    case Integrator::rk4: return "rk4";
    case Integrator::exponential: return "exponential";
  }
  return "adaptive";
}

Integrator parse_integrator(const std::string& text) {
  if (text == "adaptive" || text == "dp5") return Integrator::adaptive;
  if (text == "rk4") return Integrator::rk4;
  if (text == "exponential" || text == "etd") return Integrator::exponential;
  throw InvalidArgument("unknown integrator '" + text + "'");
}

void validate_density_matrix(const CMatrix& rho, double tol) {
  if (rho.rows() != rho.cols() || rho.rows() == 0)
    throw InvalidArgument("density matrix must be square and nonempty");
  if (hermitian_defect(rho) > tol) throw InvalidArgument("density matrix is not Hermitian");
  if (std::abs(rho.trace() - 1.0) > tol) throw InvalidArgument("density matrix trace is not 1");
  if (min_eigenvalue(rho) < -tol) throw InvalidArgument("density matrix is not positive");
}

std::vector<double> resolve_output_grid(const std::vector<double>& requested, double t_final) {
  if (requested.empty()) return {0.0, t_final};
  const double slack = 1e-12 * std::max(1.0, t_final);
  std::vector<double> out;
  out.reserve(requested.size());
  for (double t : requested) {
    if (!(t >= -slack && t <= t_final + slack))
      throw RangeError("output time " + std::to_string(t) + " outside [0, t_F]");
    const double c = std::clamp(t, 0.0, t_final);
    if (!out.empty() && c < out.back()) throw InvalidArgument("output grid must be sorted");
    out.push_back(c);
  }
  return out;
}

void record_sample(Trajectory& traj, double t, const CMatrix& rho) {
  traj.max_hermitian_defect = std::max(traj.max_hermitian_defect, hermitian_defect(rho));
  CMatrix sym = 0.5 * (rho + rho.adjoint());
  const double drift = std::abs(sym.trace().real() - 1.0);
  traj.max_trace_drift = std::max(traj.max_trace_drift, drift);
  if (!(drift <= 1e-4))
    throw AccuracyError("trace drift " + std::to_string(drift) + " at t = " + std::to_string(t));
  traj.times.push_back(t);
  traj.states.push_back(std::move(sym));
}

std::vector<double> uniform_grid(double t_final, int count) {
  if (count < 2) throw InvalidArgument("output grid needs at least 2 samples");
  std::vector<double> g(count);
  for (int i = 0; i < count; ++i) g[i] = t_final * i / (count - 1);
  g.back() = t_final;
  return g;
}

}  // namespace lmgheom
