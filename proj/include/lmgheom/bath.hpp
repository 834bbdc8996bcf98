#pragma once

#include <ostream>
#include <vector>

#include "lmgheom/linalg.hpp"

namespace lmgheom {

struct BathModel {
  double q = 0.0;
  double gamma = 10.0;
  double temperature = 1.0;
  int m_cut = 5;

  void validate() const;
  double beta() const { return 1.0 / temperature; }
};

struct ExpansionTerm {
  cplx c;
  double nu = 0.0;
};

double spectral_density(const BathModel& bath, double omega);

/// Bose-weighted emission spectrum 2 J(w) (1 + n(w)); finite at w = 0.
double bath_spectrum(const BathModel& bath, double omega);

struct QuadratureOptions {
  /// Upper frequency limit; infinity integrates the full half line.
  double omega_max = kInfinity;
  double abs_tol = 1e-8;
  double rel_tol = 1e-10;
};

/// C(t) = (1/pi) int_0^inf J(w) [coth(beta w / 2) cos(w t) - i sin(w t)] dw by adaptive quadrature.
/// The real part diverges at t = 0 unless a finite cutoff is given.
cplx correlation_function(const BathModel& bath, double t, const QuadratureOptions& opts = {});

std::vector<ExpansionTerm> matsubara_expansion(const BathModel& bath);

/// Sum of c_k exp(-nu_k t) over the given terms.
cplx expansion_value(const std::vector<ExpansionTerm>& terms, double t);

/// Bound on the discarded Matsubara tail sum_{k>M} |c_k| exp(-nu_k t).
double expansion_tail_bound(const BathModel& bath, double t);

double terminator_residual(const BathModel& bath);

/// Columns k, Re(c), Im(c), nu.
void write_expansion_csv(std::ostream& out, const std::vector<ExpansionTerm>& terms);

}  // namespace lmgheom
