#include "lmgheom/observables.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <vector>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_min.h>

#include "lmgheom/errors.hpp"

namespace lmgheom {

namespace {

double expectation(const CMatrix& rho, const CVector& v) { return (v.adjoint() * rho * v)(0, 0).real(); }

}  // namespace

FidelityResult fidelity_f1(const CMatrix& rho, const Spectrum& spec, ControlPoint target) {
  return {expectation(rho, spec.states.col(0)), FidelityKind::F1, target};
}

FidelityResult fidelity_f2(const CMatrix& rho, const Spectrum& spec, ControlPoint target) {
  if (spec.size() < 2) throw InvalidArgument("F2 needs at least two levels");
  const double v = expectation(rho, spec.states.col(0)) + expectation(rho, spec.states.col(1));
  return {v, FidelityKind::F2, target};
}

FidelityResult path_fidelity(const CMatrix& rho, const SpinSystem& sys, const DrivePath& path) {
  const Spectrum spec = eigendecompose(build_hamiltonian(sys, path.end));
  if (path.kind == PathKind::second_order) return fidelity_f2(rho, spec, path.end);
  return fidelity_f1(rho, spec, path.end);
}

RVector occupations(const CMatrix& rho, const Spectrum& spec) {
  const CMatrix r = spec.states.adjoint() * rho * spec.states;
  return r.diagonal().real();
}

double parity_expectation(const CMatrix& rho, const SpinSystem& sys) {
  double sum = 0.0;
  for (int i = 0; i < sys.dim(); ++i) sum += (i % 2 == 0 ? 1.0 : -1.0) * rho(i, i).real();
  return sum;
}

const Spectrum& InstantaneousSpectra::at_s(double s) {
  auto it = cache_.find(s);
  if (it != cache_.end()) return it->second;
  return cache_.emplace(s, eigendecompose(build_hamiltonian(sys_, path_.at(s)))).first->second;
}

double critical_crossing(const DrivePath& path) {
  auto f = [&](double s) {
    const ControlPoint p = path.at(s);
    return p.lambda - critical_lambda(p.chi);
  };
  const int scan = 2000;
  double prev = f(0.0);
  for (int i = 1; i <= scan; ++i) {
    const double s = static_cast<double>(i) / scan;
    const double cur = f(s);
    if (prev == 0.0) return static_cast<double>(i - 1) / scan;
    if ((prev < 0.0) != (cur < 0.0)) {
      double lo = static_cast<double>(i - 1) / scan, hi = s, flo = prev;
      for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if ((fm < 0.0) == (flo < 0.0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      return 0.5 * (lo + hi);
    }
    prev = cur;
  }
  throw RangeError("path does not cross the critical line");
}

AdiabaticEstimate adiabatic_timescale(const SpinSystem& sys, const DrivePath& path, int grid) {
  if (grid < 5) throw InvalidArgument("adiabatic estimate needs at least 5 grid points");
  struct Ctx {
    const SpinSystem* sys;
    const DrivePath* path;
  } ctx{&sys, &path};
  auto gap_at = [](double s, void* p) {
    const auto* c = static_cast<Ctx*>(p);
    return eigendecompose(build_hamiltonian(*c->sys, c->path->at(s))).gap();
  };
  std::vector<double> gaps(grid);
  int imin = 0;
  for (int i = 0; i < grid; ++i) {
    gaps[i] = gap_at(static_cast<double>(i) / (grid - 1), &ctx);
    if (gaps[i] < gaps[imin]) imin = i;
  }
  const auto [lo, hi] = std::minmax_element(gaps.begin(), gaps.end());
  if (*hi - *lo <= 1e-12 * std::max(1.0, *hi))
    throw DomainError("gap is constant along the path; the two-level estimate is undefined");
  if (imin == 0 || imin == grid - 1)
    throw RangeError("gap minimum sits at the end of the scanned path");

  const double h = 1.0 / (grid - 1);
  gsl_function f{gap_at, &ctx};
  gsl_min_fminimizer* m = gsl_min_fminimizer_alloc(gsl_min_fminimizer_brent);
  double s0 = static_cast<double>(imin) * h;
  const double a0 = s0 - h, b0 = s0 + h;
  if (gaps[imin] < gaps[imin - 1] && gaps[imin] < gaps[imin + 1] &&
      gsl_min_fminimizer_set_with_values(m, &f, s0, gaps[imin], a0, gaps[imin - 1], b0,
                                         gaps[imin + 1]) == GSL_SUCCESS) {
    for (int it = 0; it < 200; ++it) {
      if (gsl_min_fminimizer_iterate(m) != GSL_SUCCESS) break;
      const double a = gsl_min_fminimizer_x_lower(m), b = gsl_min_fminimizer_x_upper(m);
      if (gsl_min_test_interval(a, b, 1e-13, 0.0) == GSL_SUCCESS) break;
    }
    s0 = gsl_min_fminimizer_x_minimum(m);
  }
  gsl_min_fminimizer_free(m);

  AdiabaticEstimate out;
  out.s = out.s_min_gap = s0;
  out.gap = out.min_gap = gap_at(s0, &ctx);
  // hyperbola gap(s)^2 = gap^2 + (slope (s - s0))^2 near the avoided crossing
  const double width = std::min({h, s0, 1.0 - s0});
  const double d = 1e-2 * std::min(width, out.gap);
  const double curvature = (gap_at(s0 + d, &ctx) - 2.0 * out.gap + gap_at(s0 - d, &ctx)) / (d * d);
  if (!(curvature > 0.0))
    throw DomainError("gap has no curvature at its minimum; the two-level estimate diverges");
  out.slope = std::sqrt(curvature * out.gap);
  out.timescale = 2.0 * out.slope / (kPi * out.gap * out.gap);
  return out;
}

void write_trajectory_csv(std::ostream& out, const SpinSystem& sys, const DriveSchedule& schedule,
                          const Trajectory& traj) {
  InstantaneousSpectra spectra(sys, schedule.path());
  out << "solver,t,s,lambda,chi,trace,purity";
  for (int i = 0; i < sys.dim(); ++i) out << ",P_" << i;
  out << '\n' << std::setprecision(12);
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    const double t = traj.times[k];
    const double s = schedule.s_at(t);
    const ControlPoint p = schedule.path().at(s);
    const CMatrix& rho = traj.states[k];
    out << traj.solver << ',' << t << ',' << s << ',' << p.lambda << ',' << p.chi << ','
        << rho.trace().real() << ',' << purity(rho);
    const RVector occ = occupations(rho, spectra.at_s(s));
    for (int i = 0; i < occ.size(); ++i) out << ',' << occ(i);
    out << '\n';
  }
}

}  // namespace lmgheom
