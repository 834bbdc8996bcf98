#include "lmgheom/heom.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "lmgheom/errors.hpp"
#include "lmgheom/ode.hpp"

namespace lmgheom {

namespace {

constexpr cplx kMinusI{0.0, -1.0};

struct PhiValues {
  cplx e, p1, p2, p3;
};

PhiValues phi_functions(cplx z) {
  if (std::abs(z) < 1.0) {
    // phi_k(z) = sum_j z^j / (j + k)!
    static const std::array<double, 32> inv_fact = [] {
      std::array<double, 32> f{};
      f[0] = 1.0;
      for (int i = 1; i < 32; ++i) f[i] = f[i - 1] / i;
      return f;
    }();
    PhiValues v{0.0, 0.0, 0.0, 0.0};
    cplx zj = 1.0;
    for (int j = 0; j < 26; ++j) {
      v.e += zj * inv_fact[j];
      v.p1 += zj * inv_fact[j + 1];
      v.p2 += zj * inv_fact[j + 2];
      v.p3 += zj * inv_fact[j + 3];
      zj *= z;
    }
    return v;
  }
  PhiValues v;
  v.e = std::exp(z);
  v.p1 = (v.e - 1.0) / z;
  v.p2 = (v.p1 - 1.0) / z;
  v.p3 = (v.p2 - 0.5) / z;
  return v;
}

// Fourth-order exponential Runge-Kutta (Krogstad) in the eigenbasis of H at the
// step midpoint. Bare energy differences and hierarchy decay are integrated
// exactly; the remaining Hamiltonian drift and the bath couplings are stepped.
class ExponentialStepper {
 public:
  ExponentialStepper(const HeomGenerator& gen, const TimeDependentHamiltonian& ham,
                     const CMatrix& q_site)
      : gen_(gen), ham_(ham), q_site_(q_site), d_(gen.layout().dim()), n_(gen.layout().size()) {
    const auto& rates = gen.decay_rates();
    std::vector<double> sorted(rates);
    std::sort(sorted.begin(), sorted.end());
    for (double r : sorted)
      if (class_rates_.empty() || r - class_rates_.back() > 1e-12 * std::max(1.0, r))
        class_rates_.push_back(r);
    cls_.resize(n_);
    for (std::size_t a = 0; a < n_; ++a) {
      auto it = std::upper_bound(class_rates_.begin(), class_rates_.end(), rates[a]);
      cls_[a] = static_cast<int>(it - class_rates_.begin()) - 1;
    }
    const std::size_t table = class_rates_.size() * d_ * d_;
    for (auto& t : tabs_) t.resize(table);
    v_ = CMatrix::Identity(d_, d_);
    const Eigen::Index cols = static_cast<Eigen::Index>(d_ * n_);
    for (CMatrix* m : {&a_, &b_, &c_, &nu_, &na_, &nb_, &nc_, &tmp_}) m->resize(d_, cols);
  }

  const CMatrix& basis() const { return v_; }

  void step(CMatrix& x, double t, double h) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(ham_.at(t + 0.5 * h));
    const CMatrix& v = es.eigenvectors();
    const RVector& e = es.eigenvalues();

    const CMatrix w = v_.adjoint() * v;
    rotate(x, w);
    v_ = v;
    qe_ = v.adjoint() * q_site_ * v;
    const CMatrix dh0 = drift(t, e);
    const CMatrix dh_mid = drift(t + 0.5 * h, e);
    const CMatrix dh1 = drift(t + h, e);
    prepare(e, h);

    enum { E2, P1H, P2H, E1, P1, P2, F1, F2, F3 };
    gen_.apply(dh0, qe_, x, nu_, false);
    for_each([&](std::size_t o, std::size_t c) {
      a_.data()[o] = tabs_[E2][c] * x.data()[o] + (0.5 * h) * tabs_[P1H][c] * nu_.data()[o];
    });
    gen_.apply(dh_mid, qe_, a_, na_, false);
    for_each([&](std::size_t o, std::size_t c) {
      b_.data()[o] = a_.data()[o] + h * tabs_[P2H][c] * (na_.data()[o] - nu_.data()[o]);
    });
    gen_.apply(dh_mid, qe_, b_, nb_, false);
    for_each([&](std::size_t o, std::size_t c) {
      const cplx nu = nu_.data()[o];
      c_.data()[o] = tabs_[E1][c] * x.data()[o] + h * tabs_[P1][c] * nu +
                     (2.0 * h) * tabs_[P2][c] * (nb_.data()[o] - nu);
    });
    gen_.apply(dh1, qe_, c_, nc_, false);
    for_each([&](std::size_t o, std::size_t c) {
      x.data()[o] = tabs_[E1][c] * x.data()[o] +
                    h * (tabs_[F1][c] * nu_.data()[o] +
                         tabs_[F2][c] * (na_.data()[o] + nb_.data()[o]) +
                         tabs_[F3][c] * nc_.data()[o]);
    });
  }

 private:
  template <class F>
  void for_each(F&& f) const {
    const std::size_t bs = d_ * d_;
    for (std::size_t a = 0; a < n_; ++a) {
      const std::size_t off = a * bs;
      const std::size_t cbase = static_cast<std::size_t>(cls_[a]) * bs;
      for (std::size_t i = 0; i < bs; ++i) f(off + i, cbase + i);
    }
  }

  // X_a -> W^dagger X_a W for Hermitian blocks, as two left products.
  void rotate(CMatrix& x, const CMatrix& w) {
    const CMatrix wa = w.adjoint();
    tmp_.noalias() = wa * x;
    for (std::size_t a = 0; a < n_; ++a)
      a_.middleCols(a * d_, d_) = tmp_.middleCols(a * d_, d_).adjoint();
    x.noalias() = wa * a_;
  }

  CMatrix drift(double t, const RVector& e) const {
    CMatrix dh = v_.adjoint() * ham_.at(t) * v_;
    dh.diagonal() -= e.cast<cplx>();
    return dh;
  }

  void prepare(const RVector& e, double h) {
    for (std::size_t c = 0; c < class_rates_.size(); ++c) {
      const double g = class_rates_[c];
      for (std::size_t j = 0; j < d_; ++j) {
        for (std::size_t i = 0; i <= j; ++i) {
          const cplx lin(-g, -(e(i) - e(j)));
          const PhiValues half = phi_functions(0.5 * h * lin);
          const PhiValues full = phi_functions(h * lin);
          const std::array<cplx, 9> vals{half.e,
                                         half.p1,
                                         half.p2,
                                         full.e,
                                         full.p1,
                                         full.p2,
                                         full.p1 - 3.0 * full.p2 + 4.0 * full.p3,
                                         2.0 * (full.p2 - 2.0 * full.p3),
                                         4.0 * full.p3 - full.p2};
          const std::size_t up = c * d_ * d_ + i + j * d_;
          const std::size_t lo = c * d_ * d_ + j + i * d_;
          for (std::size_t k = 0; k < 9; ++k) {
            tabs_[k][up] = vals[k];
            tabs_[k][lo] = std::conj(vals[k]);
          }
        }
      }
    }
  }

  const HeomGenerator& gen_;
  const TimeDependentHamiltonian& ham_;
  const CMatrix& q_site_;
  std::size_t d_, n_;
  std::vector<double> class_rates_;
  std::vector<int> cls_;
  std::array<std::vector<cplx>, 9> tabs_;
  CMatrix v_, qe_;
  CMatrix a_, b_, c_, nu_, na_, nb_, nc_, tmp_;
};

}  // namespace

void SolverConfig::validate() const {
  if (depth < 1) throw InvalidArgument("hierarchy depth L must be >= 1");
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) throw InvalidArgument("tolerances must be positive");
  if (!(max_step > 0.0)) throw InvalidArgument("max_step must be positive");
}

HeomGenerator::HeomGenerator(std::shared_ptr<const HierarchyLayout> layout,
                             const std::vector<ExpansionTerm>& terms, double terminator)
    : layout_(std::move(layout)), delta_(terminator) {
  if (static_cast<int>(terms.size()) != layout_->modes())
    throw InvalidArgument("expansion length does not match the hierarchy modes");
  for (const auto& term : terms) {
    const double mag = std::abs(term.c);
    weight_.push_back(std::sqrt(mag));
    phase_.push_back(mag > 0.0 ? term.c / mag : cplx(1.0));
    nu_.push_back(term.nu);
  }
  rates_.resize(layout_->size());
  for (std::size_t a = 0; a < layout_->size(); ++a) {
    double r = 0.0;
    auto counts = layout_->counts(a);
    for (int k = 0; k < layout_->modes(); ++k) r += counts[k] * nu_[k];
    rates_[a] = r;
  }
  const Eigen::Index cols = static_cast<Eigen::Index>(layout_->dim() * layout_->size());
  s_.resize(layout_->dim(), cols);
  p_.resize(layout_->dim(), cols);
  g_.resize(layout_->dim(), cols);
}

void HeomGenerator::apply(const CMatrix& h, const CMatrix& q, const CMatrix& x, CMatrix& dx,
                          bool with_decay) const {
  const HierarchyLayout& lay = *layout_;
  const Eigen::Index d = lay.dim();
  const std::size_t n = lay.size();
  const int modes = lay.modes();
  dx.resize(x.rows(), x.cols());

  // S_n = sum_k w_k (sqrt(n_k + 1) X_{n+e_k} + sqrt(n_k) phase_k X_{n-e_k})
  for (std::size_t a = 0; a < n; ++a) {
    auto s = s_.middleCols(a * d, d);
    s.setZero();
    auto counts = lay.counts(a);
    for (int k = 0; k < modes; ++k) {
      if (weight_[k] == 0.0) continue;
      const std::size_t u = lay.up(a, k);
      if (u != HierarchyLayout::npos)
        s += (weight_[k] * std::sqrt(counts[k] + 1.0)) * x.middleCols(u * d, d);
      const std::size_t dn = lay.down(a, k);
      if (dn != HierarchyLayout::npos)
        s += (weight_[k] * std::sqrt(double(counts[k])) * phase_[k]) * x.middleCols(dn * d, d);
    }
  }

  // T_n = -i S_n - Delta (Q X_n - X_n Q), stored over S.
  if (delta_ != 0.0) {
    p_.noalias() = q * x;
    for (std::size_t a = 0; a < n; ++a) {
      auto p = p_.middleCols(a * d, d);
      s_.middleCols(a * d, d) = kMinusI * s_.middleCols(a * d, d) - delta_ * (p - p.adjoint());
    }
  } else {
    s_ *= kMinusI;
  }

  g_.noalias() = q * s_;
  const CMatrix mh = kMinusI * h;
  g_.noalias() += mh * x;

  for (std::size_t a = 0; a < n; ++a) {
    auto g = g_.middleCols(a * d, d);
    auto out = dx.middleCols(a * d, d);
    out = g + g.adjoint();
    if (with_decay && rates_[a] != 0.0) out -= rates_[a] * x.middleCols(a * d, d);
  }
}

void HeomGenerator::apply_general(const CMatrix& h, const CMatrix& q, const CMatrix& x,
                                  CMatrix& dx) const {
  const HierarchyLayout& lay = *layout_;
  const Eigen::Index d = lay.dim();
  dx.resize(x.rows(), x.cols());
  const CMatrix qq = q * q;
  for (std::size_t a = 0; a < lay.size(); ++a) {
    const CMatrix xa = x.middleCols(a * d, d);
    CMatrix out = kMinusI * (h * xa - xa * h) - rates_[a] * xa;
    auto counts = lay.counts(a);
    for (int k = 0; k < lay.modes(); ++k) {
      const std::size_t u = lay.up(a, k);
      if (u != HierarchyLayout::npos) {
        const CMatrix xu = x.middleCols(u * d, d);
        out += (kMinusI * weight_[k] * std::sqrt(counts[k] + 1.0)) * (q * xu - xu * q);
      }
      const std::size_t dn = lay.down(a, k);
      if (dn != HierarchyLayout::npos) {
        const CMatrix xd = x.middleCols(dn * d, d);
        out += (kMinusI * weight_[k] * std::sqrt(double(counts[k]))) *
               (phase_[k] * (q * xd) - std::conj(phase_[k]) * (xd * q));
      }
    }
    out -= delta_ * (qq * xa - 2.0 * (q * xa * q) + xa * qq);
    dx.middleCols(a * d, d) = out;
  }
}

HierarchyState heom_rhs(const HierarchyState& state, double t, const SpinSystem& sys,
                        const DriveSchedule& schedule, const BathModel& bath,
                        const CMatrix& q_scaled, bool renorm) {
  bath.validate();
  const auto& lay = *state.layout;
  if (lay.modes() != bath.m_cut + 1 || lay.dim() != sys.dim())
    throw InvalidArgument("hierarchy layout does not match the bath or system");
  HeomGenerator gen(state.layout, matsubara_expansion(bath), terminator_residual(bath));
  CMatrix h = build_hamiltonian(sys, schedule.lambda_at(t));
  if (renorm) h += bath.q * q_scaled * q_scaled;
  HierarchyState out(state.layout);
  out.time = t;
  gen.apply_general(h, q_scaled, state.data, out.data);
  return out;
}

Trajectory evolve_heom(const CMatrix& rho0, const TimeDependentHamiltonian& ham,
                       const CMatrix& q_scaled, const BathModel& bath, const SolverConfig& config) {
  bath.validate();
  config.validate();
  validate_density_matrix(rho0);
  const int d = static_cast<int>(rho0.rows());
  if (q_scaled.rows() != d || q_scaled.cols() != d)
    throw InvalidArgument("coupling operator dimension does not match the state");
  if (hermitian_defect(q_scaled) > 1e-12) throw InvalidArgument("coupling operator must be Hermitian");
  if (!(ham.t_final > 0.0)) throw InvalidArgument("evolution horizon must be positive");

  auto layout = std::make_shared<const HierarchyLayout>(config.depth, bath.m_cut + 1, d,
                                                        config.ado_cap);
  HeomGenerator gen(layout, matsubara_expansion(bath), terminator_residual(bath));
  CMatrix x = CMatrix::Zero(d, static_cast<Eigen::Index>(d * layout->size()));
  x.leftCols(d) = rho0;

  const std::vector<double> outputs = resolve_output_grid(config.output_grid, ham.t_final);
  Trajectory traj;
  traj.solver = "heom";
  auto observe = [&](double t, const CMatrix& y) { record_sample(traj, t, y.leftCols(d)); };

  IntegrationStats stats;
  switch (config.integrator) {
    case Integrator::adaptive: {
      const std::vector<double> stops = merge_stops(0.0, ham.t_final, ham.breakpoints);
      AdaptiveOptions opt;
      opt.rel_tol = config.rel_tol;
      opt.abs_tol = config.abs_tol;
      opt.max_step = config.max_step;
      auto rhs = [&](double t, const CMatrix& y, CMatrix& dy) {
        gen.apply(ham.at(t), q_scaled, y, dy, true);
      };
      stats = integrate_dp5(rhs, x, 0.0, stops, outputs, opt, observe);
      break;
    }
    case Integrator::rk4: {
      std::vector<double> points = ham.breakpoints;
      points.insert(points.end(), outputs.begin(), outputs.end());
      const std::vector<double> stops = merge_stops(0.0, ham.t_final, points);
      auto rhs = [&](double t, const CMatrix& y, CMatrix& dy) {
        gen.apply(ham.at(t), q_scaled, y, dy, true);
      };
      stats = integrate_rk4(rhs, x, 0.0, stops, outputs, config.max_step, observe);
      break;
    }
    case Integrator::exponential: {
      std::vector<double> points = ham.breakpoints;
      points.insert(points.end(), outputs.begin(), outputs.end());
      const std::vector<double> stops = merge_stops(0.0, ham.t_final, points);
      ExponentialStepper stepper(gen, ham, q_scaled);
      std::size_t next = 0;
      double t = 0.0;
      auto report = [&] {
        const double tol = 1e-13 * std::max(1.0, ham.t_final);
        while (next < outputs.size() && outputs[next] <= t + tol) {
          const CMatrix& v = stepper.basis();
          record_sample(traj, outputs[next++], v * x.leftCols(d) * v.adjoint());
        }
      };
      report();
      for (double target : stops) {
        if (target <= t) continue;
        const double span = target - t;
        const auto steps = static_cast<std::size_t>(
            std::max(1.0, std::ceil(span / config.max_step - 1e-9)));
        const double h = span / static_cast<double>(steps);
        const double start = t;
        for (std::size_t i = 0; i < steps; ++i) {
          stepper.step(x, start + i * h, h);
          ++stats.accepted;
          stats.rhs_calls += 4;
        }
        t = target;
        report();
      }
      break;
    }
  }
  traj.steps = stats.accepted;
  traj.rejected = stats.rejected;
  traj.rhs_calls = stats.rhs_calls;
  return traj;
}

Trajectory evolve(const CMatrix& rho0, const SpinSystem& sys, const DriveSchedule& schedule,
                  const BathModel& bath, const SolverConfig& config, double theta, bool renorm) {
  const CMatrix q_scaled = build_coupling_operator(sys, theta) / std::sqrt(double(sys.n_qubits()));
  CMatrix extra = CMatrix::Zero(sys.dim(), sys.dim());
  if (renorm) extra = bath.q * q_scaled * q_scaled;
  return evolve_heom(rho0, drive_hamiltonian(sys, schedule, extra), q_scaled, bath, config);
}

}  // namespace lmgheom
