#pragma once

// Reference computations that only rely on Eigen and the operator builders.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "lmgheom/driving.hpp"
#include "lmgheom/lindblad.hpp"
#include "lmgheom/spin_model.hpp"

namespace oracle {

using lmgheom::CMatrix;
using lmgheom::ControlPoint;
using lmgheom::cplx;

inline Eigen::VectorXcd ground_state(const lmgheom::SpinSystem& sys, ControlPoint p) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(lmgheom::build_hamiltonian(sys, p));
  return es.eigenvectors().col(0);
}

// 1 - |<0(x)|0(x + h d)>|^2 ~ g(d, d) h^2, with a central estimate for the mixed term.
inline lmgheom::MetricTensor finite_difference_metric(const lmgheom::SpinSystem& sys,
                                                      ControlPoint p, double h) {
  auto infid = [&](ControlPoint d) {
    const auto a = ground_state(sys, p - 0.5 * h * d);
    const auto b = ground_state(sys, p + 0.5 * h * d);
    return (1.0 - std::norm(a.dot(b))) / (h * h);
  };
  lmgheom::MetricTensor g;
  g.ll = infid({1, 0});
  g.cc = infid({0, 1});
  g.lc = 0.25 * (infid({1, 1}) - infid({1, -1}));
  return g;
}

// Length of the path from summed Fubini-Study distances between neighbouring ground states.
inline double overlap_length(const lmgheom::SpinSystem& sys, const lmgheom::DrivePath& path,
                             int steps) {
  double total = 0.0;
  auto prev = ground_state(sys, path.at(0.0));
  for (int i = 1; i <= steps; ++i) {
    const auto cur = ground_state(sys, path.at(static_cast<double>(i) / steps));
    total += std::sqrt(std::max(0.0, 1.0 - std::norm(prev.dot(cur))));
    prev = cur;
  }
  return total;
}

// Classical RK4 on -i[H(t), rho], stepping exactly onto every time in `knots`.
template <class HamFn>
std::vector<CMatrix> liouville_rk4(const CMatrix& rho0, HamFn&& ham, std::vector<double> knots,
                                   const std::vector<double>& outputs, double h_max) {
  for (double t : outputs) knots.push_back(t);
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
  const cplx mi(0.0, -1.0);
  auto f = [&](double t, const CMatrix& r) -> CMatrix {
    const CMatrix h = ham(t);
    return mi * (h * r - r * h);
  };
  std::vector<CMatrix> out;
  CMatrix rho = rho0;
  double t = 0.0;
  std::size_t next = 0;
  while (next < outputs.size() && outputs[next] <= 0.0) {
    out.push_back(rho);
    ++next;
  }
  for (double stop : knots) {
    if (stop <= t) continue;
    const int n = std::max(1, static_cast<int>(std::ceil((stop - t) / h_max)));
    const double h = (stop - t) / n;
    for (int i = 0; i < n; ++i) {
      const double t0 = t + i * h;
      const CMatrix k1 = f(t0, rho);
      const CMatrix k2 = f(t0 + 0.5 * h, rho + 0.5 * h * k1);
      const CMatrix k3 = f(t0 + 0.5 * h, rho + 0.5 * h * k2);
      const CMatrix k4 = f(t0 + h, rho + h * k3);
      rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    t = stop;
    while (next < outputs.size() && std::abs(outputs[next] - t) <= 1e-12 * std::max(1.0, t)) {
      out.push_back(rho);
      ++next;
    }
  }
  return out;
}

// Stationary state of a linear map on d x d matrices: null vector of its d^2 x d^2 matrix.
template <class Generator>
CMatrix stationary_state(Generator&& gen, int d) {
  const int n = d * d;
  CMatrix big(n, n);
  for (int k = 0; k < n; ++k) {
    CMatrix e = CMatrix::Zero(d, d);
    e(k % d, k / d) = 1.0;
    const CMatrix col = gen(e);
    big.col(k) = Eigen::Map<const Eigen::VectorXcd>(col.data(), n);
  }
  Eigen::JacobiSVD<CMatrix> svd(big, Eigen::ComputeFullV);
  const Eigen::VectorXcd v = svd.matrixV().col(n - 1);
  CMatrix rho = Eigen::Map<const CMatrix>(v.data(), d, d);
  rho /= rho.trace();
  return 0.5 * (rho + rho.adjoint());
}

}  // namespace oracle
