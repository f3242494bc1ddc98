#pragma once

namespace kzn {

/// Physical coefficients of the damped acoustic model
///
///   u_tt - c^2 Lap(u) - b Lap(u_t) = k (u^2)_tt + rho0 (v . v)_tt,
///   v_t = -(1/rho0) grad(u).
///
/// k = 0 switches the model back to the strongly damped linear wave
/// equation.
struct PhysicalParams {
  double c = 1.0;     ///< speed of sound, > 0
  double b = 1.0;     ///< sound diffusivity, > 0
  double k = 0.0;     ///< quadratic nonlinearity strength, >= 0
  double rho0 = 1.0;  ///< ambient mass density, > 0

  /// Throws std::invalid_argument when a coefficient is out of range.
  void validate() const;
};

/// Sharp linear decay rate min{ b*lambda0/2, c^2/b } where lambda0 is the
/// principal Dirichlet eigenvalue of -Lap on the domain.  The first branch
/// wins for small b (oscillatory slow modes), the second for large b
/// (overdamped slow root approaching c^2/b from below).
double omega0(const PhysicalParams& params, double lambda0);

}  // namespace kzn
