#include "lmgheom/spin_model.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <string>

#include <Eigen/Eigenvalues>

#include "lmgheom/errors.hpp"

namespace lmgheom {

namespace {

constexpr double kHermitianTol = 1e-10;
constexpr double kDegenerateRel = 1e-10;

void require_hermitian(const CMatrix& h) {
  if (h.rows() != h.cols() || h.rows() == 0)
    throw InvalidArgument("eigendecompose: matrix must be square and nonempty");
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  const double defect = hermitian_defect(h);
  if (defect > kHermitianTol * scale)
    throw InvalidArgument("eigendecompose: matrix is not Hermitian (defect " +
                          std::to_string(defect) + ")");
}

// Largest-magnitude component real and positive; near-ties go to the lowest index.
void fix_phases(CMatrix& states) {
  for (Eigen::Index c = 0; c < states.cols(); ++c) {
    auto col = states.col(c);
    const double peak = col.cwiseAbs().maxCoeff();
    Eigen::Index pick = 0;
    for (Eigen::Index r = 0; r < col.size(); ++r) {
      if (std::abs(col(r)) >= peak * (1.0 - 1e-12)) {
        pick = r;
        break;
      }
    }
    const cplx v = col(pick);
    col *= std::conj(v) / std::abs(v);
  }
}

}  // namespace

double ControlPoint::norm() const { return std::hypot(lambda, chi); }

SpinSystem::SpinSystem(int n_qubits) : n_(n_qubits) {
  if (n_qubits < 2)
    throw InvalidArgument("spin system needs N >= 2, got " + std::to_string(n_qubits));
  const int d = n_ + 1;
  const double jj = 0.5 * n_;
  jz_ = CMatrix::Zero(d, d);
  CMatrix jp = CMatrix::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    const double m = -jj + i;
    jz_(i, i) = m;
    if (i + 1 < d) jp(i + 1, i) = std::sqrt(jj * (jj + 1.0) - m * (m + 1.0));
  }
  const CMatrix jm = jp.adjoint();
  jx_ = 0.5 * (jp + jm);
  jy_ = cplx(0.0, -0.5) * (jp - jm);

  const CMatrix shifted = jz_ + jj * CMatrix::Identity(d, d);
  const double inv_n = 1.0 / n_;
  h_lambda_ = -inv_n * jx_ * jx_;
  h_chi_ = -inv_n * (jx_ * shifted + shifted * jx_);
  h_chi2_ = -inv_n * shifted * shifted;
}

CMatrix SpinSystem::j_plus() const { return jx_ + cplx(0.0, 1.0) * jy_; }
CMatrix SpinSystem::j_minus() const { return jx_ - cplx(0.0, 1.0) * jy_; }

SpinSystem build_spin_operators(int n_qubits) { return SpinSystem(n_qubits); }

CMatrix build_coupling_operator(const SpinSystem& sys, double theta) {
  return std::sin(theta) * sys.jx() + std::cos(theta) * sys.jz();
}

CMatrix counterterm(const SpinSystem& sys, double q, double theta) {
  const CMatrix c = build_coupling_operator(sys, theta);
  return (q / sys.n_qubits()) * c * c;
}

CMatrix build_hamiltonian(const SpinSystem& sys, ControlPoint p, bool renorm, double q,
                          double theta) {
  if (!std::isfinite(p.lambda) || !std::isfinite(p.chi))
    throw InvalidArgument("control point must be finite");
  if (q < 0.0) throw InvalidArgument("coupling q must be nonnegative");
  CMatrix h = sys.h_zeeman() + p.lambda * sys.h_lambda() + p.chi * sys.h_chi() +
              (p.chi * p.chi) * sys.h_chi2();
  if (renorm) h += counterterm(sys, q, theta);
  return h;
}

CMatrix parity_operator(const SpinSystem& sys) {
  CMatrix p = CMatrix::Zero(sys.dim(), sys.dim());
  for (int i = 0; i < sys.dim(); ++i) p(i, i) = (i % 2 == 0) ? 1.0 : -1.0;
  return p;
}

Spectrum eigendecompose(const CMatrix& h) {
  require_hermitian(h);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  if (es.info() != Eigen::Success) throw AccuracyError("eigendecompose: solver did not converge");
  Spectrum out;
  out.energies = es.eigenvalues();
  out.states = es.eigenvectors();
  fix_phases(out.states);
  return out;
}

Spectrum eigendecompose_with_parity(const SpinSystem& sys, const CMatrix& h) {
  require_hermitian(h);
  const int d = sys.dim();
  if (h.rows() != d) throw InvalidArgument("eigendecompose_with_parity: dimension mismatch");
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  for (int r = 0; r < d; ++r)
    for (int c = r % 2 == 0 ? 1 : 0; c < d; c += 2)
      if (std::abs(h(r, c)) > 1e-13 * scale)
        throw InvalidArgument("eigendecompose_with_parity: matrix mixes parity sectors");

  struct Level {
    double e;
    int parity;
    CVector v;
  };
  std::vector<Level> levels;
  levels.reserve(d);
  for (int sector = 0; sector < 2; ++sector) {
    std::vector<int> idx;
    for (int i = sector; i < d; i += 2) idx.push_back(i);
    const int k = static_cast<int>(idx.size());
    CMatrix block(k, k);
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b) block(a, b) = h(idx[a], idx[b]);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(block);
    for (int a = 0; a < k; ++a) {
      CVector v = CVector::Zero(d);
      for (int b = 0; b < k; ++b) v(idx[b]) = es.eigenvectors()(b, a);
      levels.push_back({es.eigenvalues()(a), sector == 0 ? 1 : -1, std::move(v)});
    }
  }
  std::stable_sort(levels.begin(), levels.end(),
                   [](const Level& a, const Level& b) { return a.e < b.e; });

  Spectrum out;
  out.energies.resize(d);
  out.states.resize(d, d);
  std::vector<int> parities(d);
  for (int i = 0; i < d; ++i) {
    out.energies(i) = levels[i].e;
    out.states.col(i) = levels[i].v;
    parities[i] = levels[i].parity;
  }
  fix_phases(out.states);
  out.parities = std::move(parities);
  return out;
}

double beta_from_temperature(double temperature) {
  if (!(temperature >= 0.0)) throw InvalidArgument("temperature must be nonnegative");
  return temperature == 0.0 ? kInfinity : 1.0 / temperature;
}

CMatrix thermal_state(const Spectrum& spec, double beta) {
  if (!(beta >= 0.0)) throw InvalidArgument("inverse temperature must be nonnegative");
  const int d = spec.size();
  const double e0 = spec.energies(0);
  RVector w(d);
  if (std::isinf(beta)) {
    const double tol = kDegenerateRel * std::max(1.0, std::abs(e0));
    for (int i = 0; i < d; ++i) w(i) = (spec.energies(i) - e0 <= tol) ? 1.0 : 0.0;
  } else {
    for (int i = 0; i < d; ++i) w(i) = std::exp(-beta * (spec.energies(i) - e0));
  }
  w /= w.sum();
  CMatrix rho = spec.states * w.asDiagonal() * spec.states.adjoint();
  return 0.5 * (rho + rho.adjoint());
}

double critical_lambda(double chi) {
  if (!(std::abs(chi) < 1.0)) throw DomainError("critical_lambda requires |chi| < 1");
  const double c2 = chi * chi;
  return 1.0 - c2 / (1.0 - c2);
}

std::vector<ScanRow> spectrum_scan(const SpinSystem& sys, ControlPoint from, ControlPoint to,
                                   int grid) {
  if (grid < 2) throw InvalidArgument("spectrum_scan needs at least 2 grid points");
  const bool parity = from.chi == 0.0 && to.chi == 0.0;
  std::vector<ScanRow> rows;
  rows.reserve(grid);
  for (int i = 0; i < grid; ++i) {
    ScanRow row;
    row.s = static_cast<double>(i) / (grid - 1);
    row.point = from + row.s * (to - from);
    const CMatrix h = build_hamiltonian(sys, row.point);
    const Spectrum spec = parity ? eigendecompose_with_parity(sys, h) : eigendecompose(h);
    row.energies = spec.energies;
    row.gap10 = spec.gap();
    if (spec.parities) row.parities = *spec.parities;
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_scan_csv(std::ostream& out, const std::vector<ScanRow>& rows) {
  if (rows.empty()) return;
  const int d = static_cast<int>(rows.front().energies.size());
  const bool parity = !rows.front().parities.empty();
  out << "s,lambda,chi";
  for (int i = 0; i < d; ++i) out << ",E_" << i;
  out << ",gap10";
  if (parity)
    for (int i = 0; i < d; ++i) out << ",parity_" << i;
  out << '\n' << std::setprecision(15);
  for (const auto& r : rows) {
    out << r.s << ',' << r.point.lambda << ',' << r.point.chi;
    for (int i = 0; i < d; ++i) out << ',' << r.energies(i);
    out << ',' << r.gap10;
    for (int p : r.parities) out << ',' << p;
    out << '\n';
  }
}

}  // namespace lmgheom
