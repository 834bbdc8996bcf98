#pragma once

#include <map>
#include <ostream>
#include <string>

#include "lmgheom/driving.hpp"
#include "lmgheom/propagation.hpp"

namespace lmgheom {

enum class FidelityKind { F1, F2 };

struct FidelityResult {
  double value = 0.0;
  FidelityKind kind = FidelityKind::F1;
  ControlPoint target;
};

/// <E_0|rho|E_0> with the eigenstates of the target Hamiltonian.
FidelityResult fidelity_f1(const CMatrix& rho, const Spectrum& target_spectrum,
                           ControlPoint target = {});

/// <E_0|rho|E_0> + <E_1|rho|E_1>.
FidelityResult fidelity_f2(const CMatrix& rho, const Spectrum& target_spectrum,
                           ControlPoint target = {});

/// F1 on the first-order path and F2 on the second-order path.
FidelityResult path_fidelity(const CMatrix& rho, const SpinSystem& sys, const DrivePath& path);

RVector occupations(const CMatrix& rho, const Spectrum& spec);

double parity_expectation(const CMatrix& rho, const SpinSystem& sys);

/// Bare-Hamiltonian spectra along a schedule, memoised by path parameter s.
class InstantaneousSpectra {
 public:
  InstantaneousSpectra(const SpinSystem& sys, const DrivePath& path) : sys_(sys), path_(path) {}
  const Spectrum& at_s(double s);

 private:
  const SpinSystem& sys_;
  DrivePath path_;
  std::map<double, Spectrum> cache_;
};

/// Root s* of lambda(s) = lambda_c(chi(s)) on [0, 1].
double critical_crossing(const DrivePath& path);

struct AdiabaticEstimate {
  double s = 0.0;          // where the estimate is evaluated
  double gap = 0.0;        // Delta_10 there
  double slope = 0.0;      // diabatic slope sqrt(gap * d^2 Delta_10 / ds^2)
  double timescale = 0.0;  // 2 |slope| / (pi gap^2)
  double s_min_gap = 0.0;  // finite-N gap minimum along the path
  double min_gap = 0.0;
};

/// Two-level estimate at the finite-N gap minimum, where the gap is locally a hyperbola.
AdiabaticEstimate adiabatic_timescale(const SpinSystem& sys, const DrivePath& path,
                                      int grid = 4001);

/// Columns solver, t, s, lambda, chi, trace, purity, P_0 ... P_N.
void write_trajectory_csv(std::ostream& out, const SpinSystem& sys, const DriveSchedule& schedule,
                          const Trajectory& traj);

}  // namespace lmgheom
