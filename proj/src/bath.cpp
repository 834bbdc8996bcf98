#include "lmgheom/bath.hpp"

#include <cmath>
#include <iomanip>
#include <memory>
#include <string>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include "lmgheom/errors.hpp"

namespace lmgheom {

namespace {

struct GslSilencer {
  GslSilencer() { gsl_set_error_handler_off(); }
};
const GslSilencer silence_gsl;

// J(w) coth(beta w / 2) / pi with its finite limit near w = 0.
double real_kernel(double w, void* params) {
  const auto* b = static_cast<const BathModel*>(params);
  const double x = 0.5 * w / b->temperature;
  const double g2 = b->gamma * b->gamma;
  if (std::abs(x) < 1e-4) {
    const double lead = 2.0 * b->q * b->gamma / (g2 + w * w) * 2.0 * b->temperature;
    return lead * (1.0 + x * x / 3.0) / kPi;
  }
  return spectral_density(*b, w) / std::tanh(x) / kPi;
}

double imag_kernel(double w, void* params) {
  return -spectral_density(*static_cast<const BathModel*>(params), w) / kPi;
}

struct Workspaces {
  static constexpr std::size_t kLimit = 2000;
  gsl_integration_workspace* main = gsl_integration_workspace_alloc(kLimit);
  gsl_integration_workspace* cycles = gsl_integration_workspace_alloc(kLimit);
  ~Workspaces() {
    gsl_integration_workspace_free(main);
    gsl_integration_workspace_free(cycles);
  }
};

double oscillatory_integral(double (*fn)(double, void*), const BathModel& bath, double t,
                            bool cosine, const QuadratureOptions& opts) {
  Workspaces ws;
  gsl_function f{fn, const_cast<BathModel*>(&bath)};
  double result = 0.0, err = 0.0;
  int status = GSL_SUCCESS;
  const auto weight = cosine ? GSL_INTEG_COSINE : GSL_INTEG_SINE;

  if (std::isinf(opts.omega_max)) {
    std::unique_ptr<gsl_integration_qawo_table, decltype(&gsl_integration_qawo_table_free)> table(
        gsl_integration_qawo_table_alloc(t, 1.0, weight, 50), gsl_integration_qawo_table_free);
    status = gsl_integration_qawf(&f, 0.0, opts.abs_tol, Workspaces::kLimit, ws.main, ws.cycles,
                                  table.get(), &result, &err);
  } else if (t == 0.0) {
    if (!cosine) return 0.0;
    status = gsl_integration_qag(&f, 0.0, opts.omega_max, opts.abs_tol, opts.rel_tol,
                                 Workspaces::kLimit, GSL_INTEG_GAUSS61, ws.main, &result, &err);
  } else {
    std::unique_ptr<gsl_integration_qawo_table, decltype(&gsl_integration_qawo_table_free)> table(
        gsl_integration_qawo_table_alloc(t, opts.omega_max, weight, 50),
        gsl_integration_qawo_table_free);
    status = gsl_integration_qawo(&f, 0.0, opts.abs_tol, opts.rel_tol, Workspaces::kLimit, ws.main,
                                  table.get(), &result, &err);
  }
  if (status != GSL_SUCCESS)
    throw AccuracyError(std::string("correlation quadrature did not converge: ") +
                        gsl_strerror(status));
  return result;
}

}  // namespace

void BathModel::validate() const {
  if (!(q >= 0.0) || !std::isfinite(q)) throw InvalidArgument("bath coupling q must be >= 0");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidArgument("bath gamma must be > 0");
  if (!(temperature > 0.0) || !std::isfinite(temperature))
    throw InvalidArgument("bath temperature must be > 0");
  if (m_cut < 0) throw InvalidArgument("Matsubara cutoff M must be >= 0");
}

double spectral_density(const BathModel& bath, double omega) {
  return 2.0 * bath.q * bath.gamma * omega / (bath.gamma * bath.gamma + omega * omega);
}

double bath_spectrum(const BathModel& bath, double omega) {
  const double x = omega / bath.temperature;
  const double g2 = bath.gamma * bath.gamma;
  if (std::abs(x) < 1e-5) {
    const double lead = 4.0 * bath.q * bath.gamma * bath.temperature / (g2 + omega * omega);
    return lead * (1.0 + 0.5 * x + x * x / 12.0);
  }
  return 2.0 * spectral_density(bath, omega) / (-std::expm1(-x));
}

cplx correlation_function(const BathModel& bath, double t, const QuadratureOptions& opts) {
  bath.validate();
  if (!(t >= 0.0)) throw InvalidArgument("correlation_function needs t >= 0");
  if (t == 0.0 && std::isinf(opts.omega_max))
    throw AccuracyError("Re C(t) diverges at t = 0 for the Drude-Lorentz density");
  if (bath.q == 0.0) return {0.0, 0.0};
  const double re = oscillatory_integral(real_kernel, bath, t, true, opts);
  const double im = oscillatory_integral(imag_kernel, bath, t, false, opts);
  return {re, im};
}

std::vector<ExpansionTerm> matsubara_expansion(const BathModel& bath) {
  bath.validate();
  const double ratio = bath.gamma / (2.0 * kPi * bath.temperature);
  const double nearest = std::round(ratio);
  if (nearest >= 1.0 && std::abs(ratio - nearest) <= 1e-9 * ratio)
    throw ExpansionError("Matsubara frequency " + std::to_string(static_cast<int>(nearest)) +
                         " coincides with gamma; perturb T or gamma slightly");
  const double q = bath.q, g = bath.gamma, temp = bath.temperature;
  std::vector<ExpansionTerm> terms;
  terms.reserve(bath.m_cut + 1);
  const double cot = 1.0 / std::tan(0.5 * g / temp);
  terms.push_back({cplx(q * g * cot, -q * g), g});
  for (int k = 1; k <= bath.m_cut; ++k) {
    const double nu = 2.0 * kPi * k * temp;
    terms.push_back({cplx(4.0 * q * g * temp * nu / (nu * nu - g * g), 0.0), nu});
  }
  return terms;
}

cplx expansion_value(const std::vector<ExpansionTerm>& terms, double t) {
  cplx sum = 0.0;
  for (const auto& term : terms) sum += term.c * std::exp(-term.nu * t);
  return sum;
}

double expansion_tail_bound(const BathModel& bath, double t) {
  bath.validate();
  if (bath.q == 0.0) return 0.0;
  if (!(t > 0.0)) return kInfinity;
  const double g = bath.gamma, temp = bath.temperature;
  double sum = 0.0;
  for (long k = bath.m_cut + 1;; ++k) {
    const double nu = 2.0 * kPi * static_cast<double>(k) * temp;
    const double term = std::abs(4.0 * bath.q * g * temp * nu / (nu * nu - g * g)) * std::exp(-nu * t);
    sum += term;
    if (nu > g && term < 1e-18 * std::max(sum, 1e-300)) break;
    if (k > bath.m_cut + 10000000L) return kInfinity;
  }
  return sum;
}

double terminator_residual(const BathModel& bath) {
  const auto terms = matsubara_expansion(bath);
  double delta = 2.0 * bath.q * bath.temperature / bath.gamma - terms[0].c.real() / bath.gamma;
  for (std::size_t k = 1; k < terms.size(); ++k) delta -= terms[k].c.real() / terms[k].nu;
  if (delta < -1e-12)
    throw ExpansionError("terminator residual is negative (" + std::to_string(delta) +
                         "); raise M above gamma / (2 pi T)");
  return delta;
}

void write_expansion_csv(std::ostream& out, const std::vector<ExpansionTerm>& terms) {
  out << "k,Re(c),Im(c),nu\n" << std::setprecision(17);
  for (std::size_t k = 0; k < terms.size(); ++k)
    out << k << ',' << terms[k].c.real() << ',' << terms[k].c.imag() << ',' << terms[k].nu << '\n';
}

}  // namespace lmgheom
