#include "kzn/params.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kzn {

void PhysicalParams::validate() const {
  if (!(c > 0.0) || !std::isfinite(c))
    throw std::invalid_argument("sound speed c must be positive and finite");
  if (!(b > 0.0) || !std::isfinite(b))
    throw std::invalid_argument("sound diffusivity b must be positive and finite");
  if (k < 0.0 || !std::isfinite(k))
    throw std::invalid_argument("nonlinearity k must be nonnegative and finite");
  if (!(rho0 > 0.0) || !std::isfinite(rho0))
    throw std::invalid_argument("density rho0 must be positive and finite");
}

double omega0(const PhysicalParams& params, double lambda0) {
  params.validate();
  if (!(lambda0 > 0.0))
    throw std::invalid_argument("lambda0 must be positive");
  return std::min(params.b * lambda0 / 2.0, params.c * params.c / params.b);
}

}  // namespace kzn
