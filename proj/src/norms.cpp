#include "kzn/norms.hpp"

#include <cmath>
#include <stdexcept>

#include "kzn/operators.hpp"

namespace kzn {

namespace {

void check_order(const NormOrder& order) {
  if (!(order.p > 1.0) || !std::isfinite(order.p))
    throw std::invalid_argument("norm exponent p must be finite and exceed 1");
  if (order.sobolev_order < 0 || order.sobolev_order > 2)
    throw std::invalid_argument("sobolev_order must be 0, 1 or 2");
}

// |d^2 u/dx_a dx_a| at an interior node; both axis neighbours exist there.
double second_diff(const Field& u, const Domain& domain, int node, int axis) {
  const auto& nb = domain.neighbors(node);
  double h = domain.grid_spacing(axis);
  int lo = nb[2 * axis], hi = nb[2 * axis + 1];
  return (u[lo] - 2.0 * u[node] + u[hi]) / (h * h);
}

double accumulate_field(const Field& field, const Domain& domain,
                        const NormOrder& order) {
  const double p = order.p;
  const Eigen::VectorXd& vol = domain.cell_volumes();
  double acc = 0.0;
  for (int i = 0; i < domain.n_nodes(); ++i)
    acc += std::pow(std::abs(field[i]), p) * vol[i];

  if (order.sobolev_order >= 1) {
    VectorField grad = gradient(field, domain);
    for (int i = 0; i < domain.n_nodes(); ++i)
      for (int d = 0; d < domain.dim(); ++d)
        acc += std::pow(std::abs(grad(i, d)), p) * vol[i];
  }

  if (order.sobolev_order >= 2) {
    for (int node : domain.interior_nodes()) {
      for (int d = 0; d < domain.dim(); ++d)
        acc += std::pow(std::abs(second_diff(field, domain, node, d)), p) * vol[node];
      if (domain.dim() == 2) {
        // Mixed derivative by the four diagonal neighbours; skipped where
        // the diagonal leg leaves the domain (embedded disk boundary).
        int pp = domain.node_at_offset(node, +1, +1);
        int pm = domain.node_at_offset(node, +1, -1);
        int mp = domain.node_at_offset(node, -1, +1);
        int mm = domain.node_at_offset(node, -1, -1);
        if (pp >= 0 && pm >= 0 && mp >= 0 && mm >= 0) {
          double uxy = (field[pp] - field[pm] - field[mp] + field[mm]) /
                       (4.0 * domain.hx() * domain.hy());
          acc += std::pow(std::abs(uxy), p) * vol[node];
        }
      }
    }
  }
  return acc;
}

}  // namespace

double discrete_norm(const Field& field, const Domain& domain, const NormOrder& order) {
  check_order(order);
  if (field.size() != domain.n_nodes())
    throw std::invalid_argument("field length does not match the grid");
  return std::pow(accumulate_field(field, domain, order), 1.0 / order.p);
}

double discrete_norm(const VectorField& field, const Domain& domain,
                     const NormOrder& order) {
  check_order(order);
  if (field.rows() != domain.n_nodes() || field.cols() != domain.dim())
    throw std::invalid_argument("vector field shape does not match the grid");
  double acc = 0.0;
  for (int d = 0; d < domain.dim(); ++d)
    acc += accumulate_field(field.col(d), domain, order);
  return std::pow(acc, 1.0 / order.p);
}

}  // namespace kzn
