#include "lmgheom/lindblad.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "lmgheom/errors.hpp"
#include "lmgheom/ode.hpp"

namespace lmgheom {

namespace {

constexpr cplx kMinusI{0.0, -1.0};

double bracket(const std::vector<ExpansionTerm>& terms, double eps) {
  if (eps == 0.0) return 0.0;
  const double g = terms[0].nu;
  double sum = terms[0].c.real() * eps / (g * g + eps * eps);
  for (std::size_t k = 1; k < terms.size(); ++k)
    sum += terms[k].c.real() * eps / (terms[k].nu * terms[k].nu + eps * eps);
  return sum;
}

// Everything the generator needs at one instant, in the eigenbasis.
struct Instant {
  RVector energies;
  CMatrix basis;
  JumpDecomposition jumps;
  std::vector<double> lamb;  // per bin, already divided by N
};

Instant build_instant(const CMatrix& h, const CMatrix& q, int n_qubits, const BathModel& bath,
                      double bin_tol_rel) {
  Instant in;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  Spectrum spec{es.eigenvalues(), es.eigenvectors(), std::nullopt};
  in.energies = spec.energies;
  in.basis = spec.states;
  const double tol = std::max(1e-12, bin_tol_rel * spec.energies.cwiseAbs().maxCoeff());
  in.jumps = jump_operators(spec, q, tol);
  attach_rates(in.jumps, bath);
  in.lamb.assign(in.jumps.size(), 0.0);
  if (bath.q != 0.0) {
    const auto terms = matsubara_expansion(bath);
    for (std::size_t b = 0; b < in.jumps.size(); ++b)
      in.lamb[b] = bracket(terms, in.jumps.gaps[b]) / n_qubits;
  }
  return in;
}

// Sum over bins of w_b S_b^dagger S_b in the eigenbasis.
CMatrix weighted_sds(const JumpDecomposition& dec, const std::vector<double>& weights, int d) {
  CMatrix out = CMatrix::Zero(d, d);
  for (std::size_t b = 0; b < dec.size(); ++b) {
    if (weights[b] == 0.0) continue;
    const auto& es = dec.entries[b];
    for (const auto& x : es)
      for (const auto& y : es)
        if (x.row == y.row) out(x.col, y.col) += weights[b] * std::conj(x.amplitude) * y.amplitude;
  }
  return out;
}

CMatrix eigenbasis_rhs(const Instant& in, int n_qubits, const CMatrix& rho_e) {
  const int d = static_cast<int>(in.energies.size());
  std::vector<double> gamma(in.jumps.size());
  for (std::size_t b = 0; b < gamma.size(); ++b) gamma[b] = in.jumps.rates[b] / n_qubits;
  const CMatrix k = weighted_sds(in.jumps, gamma, d);
  CMatrix h = weighted_sds(in.jumps, in.lamb, d);
  h.diagonal() += in.energies.cast<cplx>();

  CMatrix out = kMinusI * (h * rho_e - rho_e * h) - 0.5 * (k * rho_e + rho_e * k);
  for (std::size_t b = 0; b < in.jumps.size(); ++b) {
    if (gamma[b] == 0.0) continue;
    for (const auto& x : in.jumps.entries[b])
      for (const auto& y : in.jumps.entries[b])
        out(x.row, y.row) += gamma[b] * x.amplitude * rho_e(x.col, y.col) * std::conj(y.amplitude);
  }
  return out;
}

}  // namespace

CMatrix JumpDecomposition::jump_operator_eigenbasis(std::size_t bin) const {
  const Eigen::Index d = basis.rows();
  CMatrix s = CMatrix::Zero(d, d);
  for (const auto& e : entries.at(bin)) s(e.row, e.col) += e.amplitude;
  return s;
}

CMatrix JumpDecomposition::jump_operator(std::size_t bin) const {
  return basis * jump_operator_eigenbasis(bin) * basis.adjoint();
}

double default_bin_tolerance(const Spectrum& spec) {
  return std::max(1e-12, 1e-9 * spec.energies.cwiseAbs().maxCoeff());
}

JumpDecomposition jump_operators(const Spectrum& spec, const CMatrix& q, double bin_tol) {
  if (!(bin_tol > 0.0)) throw InvalidArgument("bin tolerance must be positive");
  const int d = spec.size();
  if (q.rows() != d || q.cols() != d) throw InvalidArgument("coupling dimension mismatch");
  const CMatrix qe = spec.states.adjoint() * q * spec.states;
  const double floor = 1e-14 * std::max(1.0, qe.cwiseAbs().maxCoeff());

  struct Pair {
    double gap;
    JumpEntry entry;
  };
  std::vector<Pair> pairs;
  for (int n = 0; n < d; ++n)
    for (int m = 0; m < d; ++m)
      if (std::abs(qe(n, m)) > floor)
        pairs.push_back({spec.energies(m) - spec.energies(n), {n, m, qe(n, m)}});
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const Pair& a, const Pair& b) { return a.gap < b.gap; });

  JumpDecomposition dec;
  dec.basis = spec.states;
  std::size_t i = 0;
  while (i < pairs.size()) {
    std::size_t j = i + 1;
    while (j < pairs.size() && pairs[j].gap - pairs[j - 1].gap <= bin_tol) ++j;
    double sum = 0.0;
    std::vector<JumpEntry> bin;
    for (std::size_t k = i; k < j; ++k) {
      sum += pairs[k].gap;
      bin.push_back(pairs[k].entry);
    }
    dec.gaps.push_back(sum / static_cast<double>(j - i));
    dec.entries.push_back(std::move(bin));
    i = j;
  }
  return dec;
}

double rate(const BathModel& bath, double eps) { return bath_spectrum(bath, eps); }

void attach_rates(JumpDecomposition& decomposition, const BathModel& bath) {
  decomposition.rates.resize(decomposition.size());
  for (std::size_t b = 0; b < decomposition.size(); ++b)
    decomposition.rates[b] = rate(bath, decomposition.gaps[b]);
}

double lamb_shift_coefficient(const BathModel& bath, double eps) {
  if (eps == 0.0 || bath.q == 0.0) return 0.0;
  return bracket(matsubara_expansion(bath), eps);
}

CMatrix lamb_shift(const BathModel& bath, const JumpDecomposition& decomposition, int n_qubits) {
  std::vector<double> w(decomposition.size());
  for (std::size_t b = 0; b < w.size(); ++b)
    w[b] = lamb_shift_coefficient(bath, decomposition.gaps[b]) / n_qubits;
  const CMatrix he = weighted_sds(decomposition, w, static_cast<int>(decomposition.basis.rows()));
  CMatrix h = decomposition.basis * he * decomposition.basis.adjoint();
  return 0.5 * (h + h.adjoint());
}

double lamb_shift_tail_bound(const BathModel& bath, double max_gap) {
  bath.validate();
  if (bath.q == 0.0 || max_gap == 0.0) return 0.0;
  const double g = bath.gamma, temp = bath.temperature;
  double sum = 0.0;
  for (long k = bath.m_cut + 1;; ++k) {
    const double nu = 2.0 * kPi * static_cast<double>(k) * temp;
    const double c = std::abs(4.0 * bath.q * g * temp * nu / (nu * nu - g * g));
    const double term = c / (nu * nu);
    sum += term;
    if (nu > g && term < 1e-16 * sum) break;
    if (k > bath.m_cut + 10000000L) break;
  }
  return std::abs(max_gap) * sum;
}

void LindbladConfig::validate() const {
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) throw InvalidArgument("tolerances must be positive");
  if (!(max_step > 0.0)) throw InvalidArgument("max_step must be positive");
  if (!(bin_tol_rel > 0.0)) throw InvalidArgument("bin tolerance must be positive");
  if (integrator == Integrator::exponential)
    throw InvalidArgument("the Lindblad solver supports the adaptive and rk4 integrators");
}

CMatrix lindblad_rhs(const CMatrix& h, const CMatrix& q, int n_qubits, const BathModel& bath,
                     const CMatrix& rho, double bin_tol_rel) {
  const Instant in = build_instant(h, q, n_qubits, bath, bin_tol_rel);
  const CMatrix rho_e = in.basis.adjoint() * rho * in.basis;
  return in.basis * eigenbasis_rhs(in, n_qubits, rho_e) * in.basis.adjoint();
}

Trajectory lindblad_evolve(const CMatrix& rho0, const TimeDependentHamiltonian& h,
                           const CMatrix& q, int n_qubits, const BathModel& bath,
                           const LindbladConfig& config) {
  bath.validate();
  config.validate();
  validate_density_matrix(rho0);
  if (n_qubits < 1) throw InvalidArgument("Lindblad prefactor needs n_qubits >= 1");
  if (!(h.t_final > 0.0)) throw InvalidArgument("evolution horizon must be positive");

  const std::vector<double> outputs = resolve_output_grid(config.output_grid, h.t_final);
  Trajectory traj;
  traj.solver = "lindblad";
  auto observe = [&](double t, const CMatrix& y) { record_sample(traj, t, y); };
  auto rhs = [&](double t, const CMatrix& y, CMatrix& dy) {
    dy = lindblad_rhs(h.at(t), q, n_qubits, bath, y, config.bin_tol_rel);
  };
  CMatrix rho = rho0;
  IntegrationStats stats;
  if (config.integrator == Integrator::adaptive) {
    AdaptiveOptions opt;
    opt.rel_tol = config.rel_tol;
    opt.abs_tol = config.abs_tol;
    opt.max_step = config.max_step;
    stats = integrate_dp5(rhs, rho, 0.0, merge_stops(0.0, h.t_final, h.breakpoints), outputs, opt,
                          observe);
  } else {
    std::vector<double> points = h.breakpoints;
    points.insert(points.end(), outputs.begin(), outputs.end());
    stats = integrate_rk4(rhs, rho, 0.0, merge_stops(0.0, h.t_final, points), outputs,
                          config.max_step, observe);
  }
  traj.steps = stats.accepted;
  traj.rejected = stats.rejected;
  traj.rhs_calls = stats.rhs_calls;
  return traj;
}

Trajectory lindblad_evolve(const CMatrix& rho0, const SpinSystem& sys,
                           const DriveSchedule& schedule, const BathModel& bath, double theta,
                           bool renorm, const LindbladConfig& config) {
  const CMatrix q = build_coupling_operator(sys, theta);
  CMatrix extra = CMatrix::Zero(sys.dim(), sys.dim());
  if (renorm) extra = counterterm(sys, bath.q, theta);
  return lindblad_evolve(rho0, drive_hamiltonian(sys, schedule, extra), q, sys.n_qubits(), bath,
                         config);
}

}  // namespace lmgheom
