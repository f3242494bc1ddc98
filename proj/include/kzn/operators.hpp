#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "kzn/domain.hpp"
#include "kzn/norms.hpp"
#include "kzn/params.hpp"

namespace kzn {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Five-point (three-point in 1d) Dirichlet Laplacian split into the
/// block acting on interior unknowns and the block carrying boundary
/// values to the right-hand side:
///
///   (Lap u)_interior = interior * u_interior + boundary * u_boundary.
///
/// interior is symmetric negative definite.
struct DirichletOperator {
  SparseMatrix interior;  ///< n_interior x n_interior
  SparseMatrix boundary;  ///< n_interior x n_boundary
};

DirichletOperator build_dirichlet_laplacian(const Domain& domain);

/// Discrete Laplacian of a field with prescribed boundary values folded
/// in; defined on interior nodes, zero elsewhere.  boundary_values is
/// indexed by boundary rank and overrides the field there.
Field laplacian(const Field& field, const Domain& domain,
                const Eigen::VectorXd& boundary_values);

/// Central-difference gradient; one-sided second-order stencils where a
/// neighbour is missing (falls back to first order when the stencil leg
/// is short, as happens next to the embedded disk boundary).
VectorField gradient(const Field& field, const Domain& domain);

/// Sparse matrix realising one component of `gradient` so that
/// (grad u)_axis = matrix * u for all nodes at once.
SparseMatrix gradient_matrix(const Domain& domain, int axis);

/// Restriction of a field to the boundary nodes, by boundary rank.
Eigen::VectorXd boundary_trace(const Field& field, const Domain& domain);

/// op.interior * interior_values + op.boundary * boundary_values with
/// dimension checks.
Eigen::VectorXd apply_dirichlet(const DirichletOperator& op,
                                const Eigen::VectorXd& interior_values,
                                const Eigen::VectorXd& boundary_values);

/// Gather the interior entries of a full-length field.
Eigen::VectorXd restrict_interior(const Field& field, const Domain& domain);

/// Scatter interior and boundary values back into a full-length field.
Field extend_field(const Eigen::VectorXd& interior_values,
                   const Eigen::VectorXd& boundary_values, const Domain& domain);

/// Principal eigenvalue of -interior by inverse power iteration with a
/// deterministic all-ones start.  Converges when the relative change of
/// the Rayleigh quotient drops strictly below tol; throws
/// NumericalFailure at the iteration cap (carrying the last estimate).
double numeric_lambda0(const DirichletOperator& op, double tol = 1e-10,
                       int max_iter = 500);

/// Trapezoidal update of the acoustic velocity law v_t = -(1/rho0) grad u
/// over one step of size dt.
VectorField integrate_velocity(const VectorField& v_old, const Field& u_old,
                               const Field& u_new, const PhysicalParams& params,
                               const Domain& domain, double dt);

}  // namespace kzn
