#pragma once

#include <functional>
#include <memory>

#include "kzn/boundary_data.hpp"
#include "kzn/domain.hpp"
#include "kzn/operators.hpp"
#include "kzn/params.hpp"
#include "kzn/trajectory.hpp"

namespace kzn {

/// Forcing term sampled on the full node set at a given time; an empty
/// function means zero forcing.
using ForcingFn = std::function<Field(double t)>;

/// Strongly damped linear wave problem
///   u_tt - c^2 Lap(u) - b Lap(u_t) = f,   u|_G = g,
///   u(0) = u0, u_t(0) = u1,
/// with optional velocity tracking v_t = -(1/rho0) grad u, v(0) = v0.
struct LinearProblem {
  PhysicalParams params;
  const Domain* domain = nullptr;
  BoundaryData g;
  ForcingFn forcing;
  Field u0;
  Field u1;
  VectorField v0;  ///< empty means zero
  double dt = 0.0;
  double t_end = 0.0;
  double p = 2.0;           ///< norm exponent for diagnostics and validation
  bool strict = true;       ///< reject incompatible data instead of warning
  double compat_tol = -1.0; ///< <= 0 picks a grid-scaled default
  int store_stride = 1;

  void validate() const;
};

/// Crank-Nicolson stepper for the first-order form (u, w = u_t) of the
/// damped wave operator; c2 = 0 degenerates to the heat equation for w
/// driving u as its antiderivative, which is exactly the lifted boundary
/// problem.  One symmetric positive definite solve per step, factorised
/// once.
class DampedWaveStepper {
public:
  DampedWaveStepper(const Domain& domain, double c2, double b, double dt,
                    BoundaryData g, ForcingFn forcing);
  ~DampedWaveStepper();
  DampedWaveStepper(DampedWaveStepper&&) noexcept;

  /// Advance (u, w) from time t to t + dt in place.  Fields live on the
  /// full node set and must satisfy the boundary condition at t.
  void step(Field& u, Field& w, double t) const;

  double dt() const;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// One Crank-Nicolson step of the damped wave problem.  Builds a fresh
/// factorisation; loops should construct a DampedWaveStepper instead.
State step_damped_wave(const State& state, const LinearProblem& problem, double t);

/// March the linear problem to t_end, recording norms and updating the
/// velocity by the trapezoidal law.
Trajectory solve_linear(const LinearProblem& problem);

/// Amplitude and amplitude rate of one spatial eigenmode.
struct ModalValue {
  double amplitude = 0.0;
  double rate = 0.0;
};

/// Exact solution of alpha'' + b*lambda*alpha' + c^2*lambda*alpha = 0 with
/// alpha(0) = a, alpha'(0) = beta, handling the oscillatory, critically
/// damped and overdamped branches of the characteristic roots
///   mu = (-b*lambda +/- sqrt(b^2 lambda^2 - 4 c^2 lambda)) / 2.
ModalValue modal_solution(double lambda, const PhysicalParams& params, double a,
                          double beta, double t);

/// Same for the sine mode sin(m pi (x - x0)/length) on an interval, whose
/// continuous eigenvalue is (m pi / length)^2.
ModalValue modal_solution_1d(int mode, const PhysicalParams& params, double length,
                             double a, double beta, double t);

/// Slow (least negative real part) characteristic decay rate of a mode;
/// the quadratic-root reference for fitted trajectory rates.
double modal_slow_rate(double lambda, const PhysicalParams& params);

enum class HeatScheme { Trapezoidal, BackwardEuler };

/// Dirichlet heat equation v_t - b Lap(v) = f, v|_G given, v(0) = v_init.
/// The trajectory stores v in the u slot and b Lap(v) + f in the ut slot.
Trajectory heat_solve(const PhysicalParams& params, const Domain& domain,
                      const BoundaryData& boundary, const ForcingFn& forcing,
                      const Field& v_init, double dt, double t_end,
                      HeatScheme scheme = HeatScheme::Trapezoidal,
                      int store_stride = 1);

struct LiftResult {
  Trajectory trajectory;   ///< u slot: lift w; ut slot: w_t = v
  double tail_bound = 0.0; ///< bound on the dropped integral tail
};

/// Parabolic lifting of Dirichlet data: solve the heat problem
/// v_t - b Lap(v) = 0, v|_G = g_t, v(0) = 0 and set
///   w(t) = -int_t^inf v(s) ds,
/// truncated at t_max with the tail estimated through the heat decay rate
/// b*lambda0 (the tail integral is bounded by ||v(t_max)|| / (b lambda0),
/// valid because the homogeneous heat semigroup decays at b*lambda0).
/// The lift satisfies w_t = v = b Lap(w) and w|_G = g.
/// Throws TruncationError when the tail bound exceeds tail_tolerance and
/// std::invalid_argument when g(0) != 0.
LiftResult lift_boundary(const BoundaryData& g, const PhysicalParams& params,
                         const Domain& domain, double dt, double t_max,
                         double tail_tolerance = 1e-6, int store_stride = 1);

/// Reference for the lift: step w_tt = b Lap(w_t) directly (the damped
/// wave kernel with c^2 = 0) from w(0) = w0, w_t(0) = 0 with boundary g.
Trajectory solve_lifting_direct(const BoundaryData& g, double b, const Domain& domain,
                                const Field& w0, double dt, double t_end,
                                int store_stride = 1);

}  // namespace kzn
