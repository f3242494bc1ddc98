#include "kzn/operators.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/SparseCholesky>

#include "kzn/errors.hpp"

namespace kzn {

DirichletOperator build_dirichlet_laplacian(const Domain& domain) {
  const int ni = domain.n_interior();
  const int nb = domain.n_boundary();
  std::vector<Eigen::Triplet<double>> ti, tb;
  ti.reserve(static_cast<std::size_t>(ni) * 5);

  for (int row = 0; row < ni; ++row) {
    int node = domain.interior_nodes()[row];
    const auto& nbs = domain.neighbors(node);
    for (int axis = 0; axis < domain.dim(); ++axis) {
      double w = 1.0 / (domain.grid_spacing(axis) * domain.grid_spacing(axis));
      ti.emplace_back(row, row, -2.0 * w);
      for (int side = 0; side < 2; ++side) {
        int other = nbs[2 * axis + side];
        if (domain.is_boundary(other))
          tb.emplace_back(row, domain.boundary_rank(other), w);
        else
          ti.emplace_back(row, domain.interior_rank(other), w);
      }
    }
  }

  DirichletOperator op;
  op.interior.resize(ni, ni);
  op.interior.setFromTriplets(ti.begin(), ti.end());
  op.boundary.resize(ni, nb);
  op.boundary.setFromTriplets(tb.begin(), tb.end());
  return op;
}

Field laplacian(const Field& field, const Domain& domain,
                const Eigen::VectorXd& boundary_values) {
  if (field.size() != domain.n_nodes())
    throw std::invalid_argument("field length does not match the grid");
  if (boundary_values.size() != domain.n_boundary())
    throw std::invalid_argument("boundary value count does not match the grid");

  auto value = [&](int node) {
    return domain.is_boundary(node) ? boundary_values[domain.boundary_rank(node)]
                                    : field[node];
  };

  Field out = Field::Zero(domain.n_nodes());
  for (int node : domain.interior_nodes()) {
    const auto& nbs = domain.neighbors(node);
    double acc = 0.0;
    for (int axis = 0; axis < domain.dim(); ++axis) {
      double h = domain.grid_spacing(axis);
      acc += (value(nbs[2 * axis]) - 2.0 * field[node] + value(nbs[2 * axis + 1])) /
             (h * h);
    }
    out[node] = acc;
  }
  return out;
}

namespace {

// Stencil for d/dx_axis at one node: central where both neighbours exist,
// otherwise one-sided second order through the next-but-one node, first
// order when that leg is also missing.
void gradient_stencil(const Domain& domain, int node, int axis,
                      std::vector<std::pair<int, double>>& out) {
  out.clear();
  const double h = domain.grid_spacing(axis);
  const auto& nbs = domain.neighbors(node);
  int lo = nbs[2 * axis], hi = nbs[2 * axis + 1];
  if (lo >= 0 && hi >= 0) {
    out.push_back({lo, -0.5 / h});
    out.push_back({hi, 0.5 / h});
    return;
  }
  int di = axis == 0 ? 1 : 0;
  int dj = axis == 0 ? 0 : 1;
  if (hi >= 0) {
    int hi2 = domain.node_at_offset(node, 2 * di, 2 * dj);
    if (hi2 >= 0) {
      out.push_back({node, -1.5 / h});
      out.push_back({hi, 2.0 / h});
      out.push_back({hi2, -0.5 / h});
    } else {
      out.push_back({node, -1.0 / h});
      out.push_back({hi, 1.0 / h});
    }
    return;
  }
  if (lo >= 0) {
    int lo2 = domain.node_at_offset(node, -2 * di, -2 * dj);
    if (lo2 >= 0) {
      out.push_back({node, 1.5 / h});
      out.push_back({lo, -2.0 / h});
      out.push_back({lo2, 0.5 / h});
    } else {
      out.push_back({node, 1.0 / h});
      out.push_back({lo, -1.0 / h});
    }
  }
  // node isolated along this axis: derivative treated as zero
}

}  // namespace

VectorField gradient(const Field& field, const Domain& domain) {
  if (field.size() != domain.n_nodes())
    throw std::invalid_argument("field length does not match the grid");
  VectorField out = VectorField::Zero(domain.n_nodes(), domain.dim());
  std::vector<std::pair<int, double>> stencil;
  for (int node = 0; node < domain.n_nodes(); ++node) {
    for (int axis = 0; axis < domain.dim(); ++axis) {
      gradient_stencil(domain, node, axis, stencil);
      double acc = 0.0;
      for (const auto& [j, w] : stencil) acc += w * field[j];
      out(node, axis) = acc;
    }
  }
  return out;
}

SparseMatrix gradient_matrix(const Domain& domain, int axis) {
  if (axis < 0 || axis >= domain.dim())
    throw std::invalid_argument("gradient axis out of range");
  std::vector<Eigen::Triplet<double>> t;
  std::vector<std::pair<int, double>> stencil;
  for (int node = 0; node < domain.n_nodes(); ++node) {
    gradient_stencil(domain, node, axis, stencil);
    for (const auto& [j, w] : stencil) t.emplace_back(node, j, w);
  }
  SparseMatrix m(domain.n_nodes(), domain.n_nodes());
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

Eigen::VectorXd boundary_trace(const Field& field, const Domain& domain) {
  if (field.size() != domain.n_nodes())
    throw std::invalid_argument("field length does not match the grid");
  Eigen::VectorXd out(domain.n_boundary());
  for (int r = 0; r < domain.n_boundary(); ++r)
    out[r] = field[domain.boundary_nodes()[r]];
  return out;
}

Eigen::VectorXd apply_dirichlet(const DirichletOperator& op,
                                const Eigen::VectorXd& interior_values,
                                const Eigen::VectorXd& boundary_values) {
  if (interior_values.size() != op.interior.cols())
    throw std::invalid_argument("interior vector length mismatch");
  if (boundary_values.size() != op.boundary.cols())
    throw std::invalid_argument("boundary vector length mismatch");
  return op.interior * interior_values + op.boundary * boundary_values;
}

Eigen::VectorXd restrict_interior(const Field& field, const Domain& domain) {
  if (field.size() != domain.n_nodes())
    throw std::invalid_argument("field length does not match the grid");
  Eigen::VectorXd out(domain.n_interior());
  for (int r = 0; r < domain.n_interior(); ++r)
    out[r] = field[domain.interior_nodes()[r]];
  return out;
}

Field extend_field(const Eigen::VectorXd& interior_values,
                   const Eigen::VectorXd& boundary_values, const Domain& domain) {
  if (interior_values.size() != domain.n_interior() ||
      boundary_values.size() != domain.n_boundary())
    throw std::invalid_argument("interior/boundary vector length mismatch");
  Field out(domain.n_nodes());
  for (int r = 0; r < domain.n_interior(); ++r)
    out[domain.interior_nodes()[r]] = interior_values[r];
  for (int r = 0; r < domain.n_boundary(); ++r)
    out[domain.boundary_nodes()[r]] = boundary_values[r];
  return out;
}

double numeric_lambda0(const DirichletOperator& op, double tol, int max_iter) {
  if (tol < 0.0 || !std::isfinite(tol))
    throw std::invalid_argument("tolerance must be nonnegative");
  if (max_iter < 1) throw std::invalid_argument("iteration cap must be positive");

  SparseMatrix neg = -op.interior;
  Eigen::SimplicialLDLT<SparseMatrix> solver;
  solver.compute(neg);
  if (solver.info() != Eigen::Success)
    throw NumericalFailure("factorisation of the Dirichlet Laplacian failed");

  Eigen::VectorXd x = Eigen::VectorXd::Ones(neg.rows());
  x.normalize();
  double lambda = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd y = solver.solve(x);
    double ny = y.norm();
    if (!(ny > 0.0) || !std::isfinite(ny))
      throw NumericalFailure("inverse iteration produced a degenerate vector", lambda);
    x = y / ny;
    double next = x.dot(neg * x);
    double change = std::abs(next - lambda) / std::max(std::abs(next), 1e-300);
    lambda = next;
    if (it > 0 && change < tol) return lambda;
  }
  throw NumericalFailure("inverse power iteration hit the iteration cap", lambda);
}

VectorField integrate_velocity(const VectorField& v_old, const Field& u_old,
                               const Field& u_new, const PhysicalParams& params,
                               const Domain& domain, double dt) {
  if (v_old.rows() != domain.n_nodes() || v_old.cols() != domain.dim())
    throw std::invalid_argument("velocity field shape does not match the grid");
  return v_old -
         (0.5 * dt / params.rho0) * (gradient(u_old, domain) + gradient(u_new, domain));
}

}  // namespace kzn
