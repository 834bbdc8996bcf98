#pragma once

#include <memory>
#include <vector>

#include "lmgheom/bath.hpp"
#include "lmgheom/hierarchy.hpp"
#include "lmgheom/propagation.hpp"

namespace lmgheom {

struct SolverConfig {
  int depth = 3;
  Integrator integrator = Integrator::adaptive;
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  /// Largest adaptive step, or the fixed step of rk4 and exponential.
  double max_step = 0.05;
  /// Sample times in [0, t_F]; empty means {0, t_F}.
  std::vector<double> output_grid;
  std::size_t ado_cap = kDefaultAdoCap;

  void validate() const;
};

/// Right-hand side of the hierarchy for a given system Hamiltonian and coupling.
/// ADO n is stored rescaled by prod_k (|c_k|^{n_k} n_k!)^{-1/2}, so every
/// inter-tier coupling carries sqrt|c_k| and the ADOs stay Hermitian.
class HeomGenerator {
 public:
  HeomGenerator(std::shared_ptr<const HierarchyLayout> layout,
                const std::vector<ExpansionTerm>& terms, double terminator);

  const HierarchyLayout& layout() const { return *layout_; }
  /// Sum_k n_k nu_k for every ADO.
  const std::vector<double>& decay_rates() const { return rates_; }

  /// Fast form valid when every ADO is Hermitian (the dynamics preserves this).
  /// Without decay the -gamma_n X_n term is left out.
  void apply(const CMatrix& h, const CMatrix& q, const CMatrix& x, CMatrix& dx,
             bool with_decay = true) const;

  /// Direct evaluation of every commutator; no assumption on the ADOs.
  void apply_general(const CMatrix& h, const CMatrix& q, const CMatrix& x, CMatrix& dx) const;

 private:
  std::shared_ptr<const HierarchyLayout> layout_;
  std::vector<double> weight_;  // sqrt|c_k|
  std::vector<cplx> phase_;     // c_k / |c_k|
  std::vector<double> nu_;
  double delta_;
  std::vector<double> rates_;
  mutable CMatrix s_, p_, g_;
};

/// Hierarchy derivative at time t for the driven system. q_scaled is Q / sqrt(N);
/// with renorm the counterterm q * q_scaled^2 is added to the system Hamiltonian.
HierarchyState heom_rhs(const HierarchyState& state, double t, const SpinSystem& sys,
                        const DriveSchedule& schedule, const BathModel& bath,
                        const CMatrix& q_scaled, bool renorm);

/// Propagates rho0 (top ADO; all others start at zero) under H(t) coupled through q_scaled.
Trajectory evolve_heom(const CMatrix& rho0, const TimeDependentHamiltonian& h,
                       const CMatrix& q_scaled, const BathModel& bath, const SolverConfig& config);

Trajectory evolve(const CMatrix& rho0, const SpinSystem& sys, const DriveSchedule& schedule,
                  const BathModel& bath, const SolverConfig& config, double theta, bool renorm);

}  // namespace lmgheom
