#pragma once

#include <vector>

#include "lmgheom/propagation.hpp"

namespace lmgheom {

/// exp(-i h A) for Hermitian A.
CMatrix unitary_exponential(const CMatrix& a, double h);

/// Propagators U(t_k) for the sorted times t_k in [0, t_final], using a
/// fourth-order commutator-free Magnus scheme with steps no longer than max_step
/// that never straddle a breakpoint of H.
std::vector<CMatrix> propagate_unitary(const TimeDependentHamiltonian& h,
                                       const std::vector<double>& times, double max_step);

/// rho(t) = U(t) rho0 U(t)^dagger on the output grid (empty grid: {0, t_F}).
Trajectory evolve_unitary(const CMatrix& rho0, const TimeDependentHamiltonian& h,
                          const std::vector<double>& output_grid, double max_step = 0.01);

}  // namespace lmgheom
