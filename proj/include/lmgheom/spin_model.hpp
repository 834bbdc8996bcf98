#pragma once

#include <optional>
#include <ostream>
#include <vector>

#include "lmgheom/linalg.hpp"

namespace lmgheom {

struct ControlPoint {
  double lambda = 0.0;
  double chi = 0.0;

  friend ControlPoint operator+(ControlPoint a, ControlPoint b) {
    return {a.lambda + b.lambda, a.chi + b.chi};
  }
  friend ControlPoint operator-(ControlPoint a, ControlPoint b) {
    return {a.lambda - b.lambda, a.chi - b.chi};
  }
  friend ControlPoint operator*(double s, ControlPoint a) { return {s * a.lambda, s * a.chi}; }
  friend bool operator==(ControlPoint, ControlPoint) = default;

  double norm() const;
};

/// Symmetric (j = N/2) subspace of N qubits in the |j,m> basis, m ascending.
class SpinSystem {
 public:
  explicit SpinSystem(int n_qubits);

  int n_qubits() const { return n_; }
  int dim() const { return n_ + 1; }
  double j() const { return 0.5 * n_; }

  const CMatrix& jx() const { return jx_; }
  const CMatrix& jy() const { return jy_; }
  const CMatrix& jz() const { return jz_; }
  CMatrix j_plus() const;
  CMatrix j_minus() const;

  // Pieces of the Hamiltonian that multiply 1, lambda, chi and chi^2.
  const CMatrix& h_zeeman() const { return jz_; }
  const CMatrix& h_lambda() const { return h_lambda_; }
  const CMatrix& h_chi() const { return h_chi_; }
  const CMatrix& h_chi2() const { return h_chi2_; }

 private:
  int n_;
  CMatrix jx_, jy_, jz_;
  CMatrix h_lambda_, h_chi_, h_chi2_;
};

SpinSystem build_spin_operators(int n_qubits);

CMatrix build_coupling_operator(const SpinSystem& sys, double theta);

/// Bare LMG Hamiltonian plus, when renorm is set, the counterterm (q/N) Q^2.
CMatrix build_hamiltonian(const SpinSystem& sys, ControlPoint point, bool renorm = false,
                          double q = 0.0, double theta = 0.0);

/// Counterterm (q/N) Q^2 on its own.
CMatrix counterterm(const SpinSystem& sys, double q, double theta);

CMatrix parity_operator(const SpinSystem& sys);

struct Spectrum {
  RVector energies;
  CMatrix states;  // columns are eigenvectors
  std::optional<std::vector<int>> parities;

  int size() const { return static_cast<int>(energies.size()); }
  double gap(int upper = 1, int lower = 0) const { return energies(upper) - energies(lower); }
};

Spectrum eigendecompose(const CMatrix& h);

/// Diagonalises inside the even and odd m sectors so every level carries an
/// exact parity label. Requires h to commute with the parity operator.
Spectrum eigendecompose_with_parity(const SpinSystem& sys, const CMatrix& h);

/// Inverse temperature from T; T = 0 maps to infinity.
double beta_from_temperature(double temperature);

CMatrix thermal_state(const Spectrum& spec, double beta);

double critical_lambda(double chi);

struct ScanRow {
  double s = 0.0;
  ControlPoint point;
  RVector energies;
  double gap10 = 0.0;
  std::vector<int> parities;  // empty unless the scan stays on chi = 0
};

/// Straight-line scan from `from` to `to` with `grid` points including both ends.
std::vector<ScanRow> spectrum_scan(const SpinSystem& sys, ControlPoint from, ControlPoint to,
                                   int grid);

void write_scan_csv(std::ostream& out, const std::vector<ScanRow>& rows);

}  // namespace lmgheom
