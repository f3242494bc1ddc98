#pragma once

#include <array>
#include <functional>
#include <limits>

#include <Eigen/Dense>

#include "kzn/domain.hpp"

namespace kzn {

/// Time-dependent Dirichlet data on the boundary.  `value_fn` is sampled
/// at the boundary evaluation points of the domain; `rate_fn` is its time
/// derivative and may be left empty, in which case a central difference
/// of `value_fn` stands in.  Data with compact support in time can set
/// `support_end`; values and rates are then clamped to exactly zero past
/// that instant.
struct BoundaryData {
  using PointFn = std::function<double(double t, const std::array<double, 2>& x)>;

  PointFn value_fn;
  PointFn rate_fn;
  double support_end = std::numeric_limits<double>::infinity();

  static BoundaryData zero();

  /// Boundary data whose value is this datum's time derivative.
  BoundaryData time_derivative() const;

  /// g(t) over the boundary nodes, by boundary rank.
  Eigen::VectorXd value(const Domain& domain, double t) const;

  /// g_t(t) over the boundary nodes, by boundary rank.
  Eigen::VectorXd rate(const Domain& domain, double t) const;

  bool is_zero() const { return !value_fn; }
};

}  // namespace kzn
