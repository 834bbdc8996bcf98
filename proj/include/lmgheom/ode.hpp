#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "lmgheom/errors.hpp"
#include "lmgheom/linalg.hpp"

namespace lmgheom {

struct AdaptiveOptions {
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double max_step = kInfinity;
  double initial_step = 0.0;  // 0 picks a step from the initial derivative
  std::size_t max_steps = 50'000'000;
};

struct IntegrationStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t rhs_calls = 0;
};

/// Sorted, de-duplicated union of `points` clipped to (t0, t1], always ending at t1.
std::vector<double> merge_stops(double t0, double t1, std::vector<double> points);

namespace detail {

template <class M>
double error_ratio(const M& err, const M& y0, const M& y1, double atol, double rtol) {
  double worst = 0.0;
  const auto* e = err.data();
  const auto* a = y0.data();
  const auto* b = y1.data();
  const Eigen::Index n = err.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double scale = atol + rtol * std::max(std::abs(a[i]), std::abs(b[i]));
    worst = std::max(worst, std::abs(e[i]) / scale);
  }
  return worst;
}

}  // namespace detail

/// Dormand-Prince 5(4) with max-norm error control. Steps never cross the
/// entries of `stops`; the observer sees cubic Hermite interpolants at `outputs`.
/// rhs(t, y, dy) writes dy; observer(t, y) receives each output time once.
template <class M, class Rhs, class Observer>
IntegrationStats integrate_dp5(Rhs&& rhs, M& y, double t0, const std::vector<double>& stops,
                               const std::vector<double>& outputs, const AdaptiveOptions& opt,
                               Observer&& observer) {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                          b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  IntegrationStats stats;
  std::size_t next_out = 0;
  while (next_out < outputs.size() && outputs[next_out] <= t0) observer(outputs[next_out++], y);
  if (stops.empty()) return stats;

  M k1(y.rows(), y.cols()), k2 = k1, k3 = k1, k4 = k1, k5 = k1, k6 = k1, k7 = k1;
  M tmp = k1, y1 = k1, err = k1, dense = k1;
  double t = t0;
  rhs(t, y, k1);
  ++stats.rhs_calls;

  double h = opt.initial_step;
  if (!(h > 0.0)) {
    const double ynorm = y.cwiseAbs().maxCoeff();
    const double fnorm = k1.cwiseAbs().maxCoeff();
    const double scale = opt.abs_tol + opt.rel_tol * ynorm;
    h = fnorm > 0.0 ? 0.01 * std::max(scale, ynorm) / fnorm : 1e-3;
    h = std::max(h, 1e-10);
  }
  h = std::min(h, opt.max_step);

  for (double target : stops) {
    if (target <= t) continue;
    while (t < target) {
      const double remaining = target - t;
      bool last = false;
      double step = std::min(h, opt.max_step);
      if (step >= remaining * (1.0 - 1e-12)) {
        step = remaining;
        last = true;
      }
      const double floor = 1e-12 * std::max(1.0, std::abs(t));
      if (step < floor)
        throw StiffnessError("step size collapsed at t = " + std::to_string(t), t);
      if (stats.accepted + stats.rejected >= opt.max_steps)
        throw StiffnessError("step budget exhausted at t = " + std::to_string(t), t);

      tmp = y + (step * a21) * k1;
      rhs(t + c2 * step, tmp, k2);
      tmp = y + step * (a31 * k1 + a32 * k2);
      rhs(t + c3 * step, tmp, k3);
      tmp = y + step * (a41 * k1 + a42 * k2 + a43 * k3);
      rhs(t + c4 * step, tmp, k4);
      tmp = y + step * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
      rhs(t + c5 * step, tmp, k5);
      tmp = y + step * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
      rhs(t + step, tmp, k6);
      y1 = y + step * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      const double t1 = last ? target : t + step;
      rhs(t1, y1, k7);
      stats.rhs_calls += 6;
      err = step * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
      const double ratio = detail::error_ratio(err, y, y1, opt.abs_tol, opt.rel_tol);

      if (ratio <= 1.0) {
        while (next_out < outputs.size() && outputs[next_out] <= t1) {
          const double to = outputs[next_out++];
          const double th = (to - t) / (t1 - t);
          const double h00 = (1.0 + 2.0 * th) * (1.0 - th) * (1.0 - th);
          const double h10 = th * (1.0 - th) * (1.0 - th);
          const double h01 = th * th * (3.0 - 2.0 * th);
          const double h11 = th * th * (th - 1.0);
          const double dt = t1 - t;
          dense = h00 * y + (h10 * dt) * k1 + h01 * y1 + (h11 * dt) * k7;
          observer(to, dense);
        }
        t = t1;
        y.swap(y1);
        k1.swap(k7);
        ++stats.accepted;
        const double fac = ratio > 0.0 ? 0.9 * std::pow(ratio, -0.2) : 5.0;
        h = step * std::clamp(fac, 0.2, 5.0);
        if (last) h = std::max(h, step);
      } else {
        ++stats.rejected;
        h = step * std::clamp(0.9 * std::pow(ratio, -0.2), 0.1, 0.9);
      }
    }
  }
  return stats;
}

/// Classical RK4 with steps no longer than max_step, aligned to `stops`.
/// Output times must be members of `stops` (or t0) and are reported exactly.
template <class M, class Rhs, class Observer>
IntegrationStats integrate_rk4(Rhs&& rhs, M& y, double t0, const std::vector<double>& stops,
                               const std::vector<double>& outputs, double max_step,
                               Observer&& observer) {
  if (!(max_step > 0.0)) throw InvalidArgument("RK4 needs a positive max_step");
  IntegrationStats stats;
  std::size_t next_out = 0;
  auto report = [&](double t) {
    while (next_out < outputs.size() && outputs[next_out] <= t * (1.0 + 1e-14) + 1e-300)
      observer(outputs[next_out++], y);
  };
  report(t0);
  M k1(y.rows(), y.cols()), k2 = k1, k3 = k1, k4 = k1, tmp = k1;
  double t = t0;
  for (double target : stops) {
    if (target <= t) continue;
    const double span = target - t;
    const auto n = static_cast<std::size_t>(std::ceil(span / max_step - 1e-9));
    const double h = span / static_cast<double>(std::max<std::size_t>(n, 1));
    const double start = t;
    for (std::size_t i = 0; i < std::max<std::size_t>(n, 1); ++i) {
      const double ti = start + i * h;
      rhs(ti, y, k1);
      tmp = y + (0.5 * h) * k1;
      rhs(ti + 0.5 * h, tmp, k2);
      tmp = y + (0.5 * h) * k2;
      rhs(ti + 0.5 * h, tmp, k3);
      tmp = y + h * k3;
      rhs(ti + h, tmp, k4);
      y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      stats.rhs_calls += 4;
      ++stats.accepted;
    }
    t = target;
    report(t);
  }
  return stats;
}

}  // namespace lmgheom
