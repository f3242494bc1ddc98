#pragma once

#include <Eigen/Dense>

#include "kzn/domain.hpp"

namespace kzn {

/// Scalar field sampled at every grid node.
using Field = Eigen::VectorXd;

/// Vector field sampled at every grid node, one column per axis.
using VectorField = Eigen::MatrixXd;

/// Which discrete Sobolev norm to evaluate.  sobolev_order 0 gives the
/// plain L_p norm, 1 adds first differences, 2 additionally sums second
/// differences over interior nodes (pure and, where the diagonal
/// neighbours exist, mixed).
struct NormOrder {
  double p = 2.0;
  int sobolev_order = 0;
};

/// Quadrature-weighted discrete W^{s,p} norm of a nodal field.
/// Throws std::invalid_argument for p <= 1, sobolev_order outside {0,1,2}
/// or a field of the wrong length.
double discrete_norm(const Field& field, const Domain& domain, const NormOrder& order);

/// Same norm for one column of a vector field summed over components.
double discrete_norm(const VectorField& field, const Domain& domain, const NormOrder& order);

}  // namespace kzn
