#pragma once

#include <vector>

#include "lmgheom/bath.hpp"
#include "lmgheom/propagation.hpp"

namespace lmgheom {

struct JumpEntry {
  int row;  // level n
  int col;  // level m, with E_m - E_n inside the bin
  cplx amplitude;
};

/// Coupling operator split by Bohr frequency in the eigenbasis of a Spectrum.
struct JumpDecomposition {
  std::vector<double> gaps;
  std::vector<std::vector<JumpEntry>> entries;
  std::vector<double> rates;  // filled by attach_rates
  CMatrix basis;              // eigenvectors, columns in the site basis

  std::size_t size() const { return gaps.size(); }
  CMatrix jump_operator_eigenbasis(std::size_t bin) const;
  /// S(eps) in the site basis.
  CMatrix jump_operator(std::size_t bin) const;
};

/// Absolute bin tolerance 1e-9 * max|E| (at least 1e-12).
double default_bin_tolerance(const Spectrum& spec);

JumpDecomposition jump_operators(const Spectrum& spec, const CMatrix& q, double bin_tol);

/// Gamma(eps) = 2 J(eps) (1 + n(eps)); Gamma(0) = 4 q T / gamma.
double rate(const BathModel& bath, double eps);

void attach_rates(JumpDecomposition& decomposition, const BathModel& bath);

/// Real part of c_0 eps/(gamma^2+eps^2) + sum_{k=1..M} c_k eps/(nu_k^2+eps^2).
double lamb_shift_coefficient(const BathModel& bath, double eps);

/// H_L in the site basis.
CMatrix lamb_shift(const BathModel& bath, const JumpDecomposition& decomposition, int n_qubits);

/// Bound on the dropped Matsubara tail of the Lamb-shift bracket for |eps| <= max_gap.
double lamb_shift_tail_bound(const BathModel& bath, double max_gap);

struct LindbladConfig {
  Integrator integrator = Integrator::adaptive;
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double max_step = 1.0;
  std::vector<double> output_grid;
  /// Bin tolerance relative to max|E|.
  double bin_tol_rel = 1e-9;

  void validate() const;
};

/// d rho/dt for the instantaneous Hamiltonian h with coupling q and prefactor 1/n_qubits.
CMatrix lindblad_rhs(const CMatrix& h, const CMatrix& q, int n_qubits, const BathModel& bath,
                     const CMatrix& rho, double bin_tol_rel = 1e-9);

Trajectory lindblad_evolve(const CMatrix& rho0, const TimeDependentHamiltonian& h,
                           const CMatrix& q, int n_qubits, const BathModel& bath,
                           const LindbladConfig& config);

Trajectory lindblad_evolve(const CMatrix& rho0, const SpinSystem& sys,
                           const DriveSchedule& schedule, const BathModel& bath, double theta,
                           bool renorm, const LindbladConfig& config);

}  // namespace lmgheom
