#pragma once

#include <functional>
#include <string>
#include <vector>

#include "lmgheom/driving.hpp"
#include "lmgheom/linalg.hpp"

namespace lmgheom {

/// H(t) on [0, t_final] with the times at which its time derivative may jump.
struct TimeDependentHamiltonian {
  std::function<CMatrix(double)> at;
  double t_final = 0.0;
  std::vector<double> breakpoints;
};

/// H_S(Lambda(t)) + extra, assembled from the cached operator pieces.
TimeDependentHamiltonian drive_hamiltonian(const SpinSystem& sys, const DriveSchedule& schedule,
                                           const CMatrix& extra);

TimeDependentHamiltonian static_hamiltonian(const CMatrix& h, double t_final);

struct Trajectory {
  std::string solver;
  std::vector<double> times;
  std::vector<CMatrix> states;
  double max_trace_drift = 0.0;
  double max_hermitian_defect = 0.0;
  std::size_t steps = 0;
  std::size_t rejected = 0;
  std::size_t rhs_calls = 0;

  const CMatrix& final_state() const { return states.back(); }
};

enum class Integrator { adaptive, rk4, exponential };

std::string to_string(Integrator integrator);
Integrator parse_integrator(const std::string& text);

/// Throws InvalidArgument unless rho is Hermitian, unit trace and PSD within tol.
void validate_density_matrix(const CMatrix& rho, double tol = 1e-10);

/// Sorted output times within [0, t_final]; an empty request gives {0, t_final}.
std::vector<double> resolve_output_grid(const std::vector<double>& requested, double t_final);

/// Appends a sample after the trace and Hermiticity checks shared by all solvers.
/// The stored matrix is the Hermitian part of rho.
void record_sample(Trajectory& traj, double t, const CMatrix& rho);

/// Output grid with `count` uniform samples on [0, t_final].
std::vector<double> uniform_grid(double t_final, int count);

}  // namespace lmgheom
