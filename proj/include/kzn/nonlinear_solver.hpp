#pragma once

#include <functional>
#include <memory>

#include "kzn/boundary_data.hpp"
#include "kzn/domain.hpp"
#include "kzn/linear_solver.hpp"
#include "kzn/operators.hpp"
#include "kzn/params.hpp"
#include "kzn/trajectory.hpp"

namespace kzn {

enum class NonlinearScheme { SemiImplicit, Newton };

/// Knobs for the quasilinear stepper.  The quadratic right-hand side is
/// expanded via (u^2)_tt = 2 u u_tt + 2 u_t^2 and the velocity term via
/// direct differentiation of rho0 (v . v)_tt, which yields
///   2 rho0^{-1} |grad u|^2 - 2 v . grad u_t;
/// flip_transport_sign switches the transport term to +2 v . grad u_t for
/// sensitivity studies of that sign choice.
struct NonlinearConfig {
  NonlinearScheme scheme = NonlinearScheme::Newton;
  double newton_tol = 1e-10;
  int newton_max_iter = 25;
  double degeneracy_guard = 0.1;  ///< abort when min(1 - 2ku) <= this
  bool disable_nonlinearity = false;
  bool flip_transport_sign = false;
  ForcingFn forcing;
  int store_stride = 1;

  void validate() const;
};

/// Quasilinear Kuznetsov problem with Dirichlet data.
struct KuznetsovProblem {
  PhysicalParams params;
  const Domain* domain = nullptr;
  BoundaryData g;
  Field u0;
  Field u1;
  VectorField v0;  ///< empty means zero
  double dt = 0.0;
  double t_end = 0.0;
  double p = 2.0;
  bool strict = true;
  double compat_tol = -1.0;

  void validate() const;
};

/// Interior residual of the Crank-Nicolson step from state_old to
/// state_new: with w the interior u_t unknown and u_mid the midpoint
/// potential,
///   R = (1 - 2 k u_mid) (w_new - w_old)/dt - avg F - f_mid,
///   F = c^2 Lap u + b Lap w + 2 k w^2 + 2 rho0^{-1} |grad u|^2
///       -/+ 2 v . grad w.
/// A root in w_new makes the pair (u_new, w_new) one accepted step.
/// Throws DegeneracyError when 1 - 2 k u_mid falls at or below the guard.
Eigen::VectorXd quasilinear_residual(const State& state_new, const State& state_old,
                                     const BoundaryData& g,
                                     const PhysicalParams& params,
                                     const Domain& domain, double dt,
                                     const NonlinearConfig& config);

/// Exact Jacobian of quasilinear_residual with respect to the interior
/// entries of state_new.ut, treating u_new and v_new as dependent on them
/// through the midpoint and velocity updates.  The residual is quadratic
/// in the state, so every entry is affine; tests compare this against a
/// finite-difference Jacobian.
SparseMatrix quasilinear_jacobian(const State& state_new, const State& state_old,
                                  const BoundaryData& g, const PhysicalParams& params,
                                  const Domain& domain, double dt,
                                  const NonlinearConfig& config);

/// One-step quasilinear integrator with a reusable sparse workspace.
class KuznetsovStepper {
public:
  KuznetsovStepper(const Domain& domain, const PhysicalParams& params,
                   BoundaryData g, NonlinearConfig config, double dt);
  ~KuznetsovStepper();
  KuznetsovStepper(KuznetsovStepper&&) noexcept;

  /// Advance the state by dt.  Returns the Newton iteration count
  /// (0 for the semi-implicit scheme).  Throws DegeneracyError or
  /// NumericalFailure; the caller decides whether to keep the partial run.
  int step(State& state) const;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Single quasilinear step (fresh workspace; loops should hold a
/// KuznetsovStepper).
State step_kuznetsov(const State& state, const KuznetsovProblem& problem,
                     const NonlinearConfig& config, int* newton_iterations = nullptr);

/// Limit velocity v_inf = v(0) - (1/rho0) int_0^inf grad u dt, truncated
/// at the final stored sample.  The tail is bounded through the fitted
/// decay rate of ||grad u(t)||_{L2}; a nonpositive fit raises
/// NoLimitError since the integral then has no usable limit.  A
/// trajectory whose potential never moves returns v(0) exactly with a
/// zero tail bound.
struct VelocityLimit {
  VectorField v_inf;
  double tail_bound = 0.0;
  double fitted_rate = 0.0;
};

VelocityLimit v_infinity(const Trajectory& trajectory, const PhysicalParams& params,
                         const Domain& domain);

/// March the quasilinear problem to t_end.  A degeneracy or Newton
/// breakdown mid-run terminates the trajectory early and records the
/// cause instead of throwing, so partial results stay usable.
Trajectory run_kuznetsov(const KuznetsovProblem& problem, const NonlinearConfig& config);

}  // namespace kzn
