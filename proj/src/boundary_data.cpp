#include "kzn/boundary_data.hpp"

namespace kzn {

namespace {
constexpr double kFdStep = 1e-6;
}

BoundaryData BoundaryData::zero() { return BoundaryData{}; }

BoundaryData BoundaryData::time_derivative() const {
  BoundaryData d;
  d.support_end = support_end;
  if (!value_fn) return d;
  if (rate_fn) {
    d.value_fn = rate_fn;
  } else {
    auto g = value_fn;
    d.value_fn = [g](double t, const std::array<double, 2>& x) {
      return (g(t + kFdStep, x) - g(t - kFdStep, x)) / (2.0 * kFdStep);
    };
  }
  auto r = d.value_fn;
  d.rate_fn = [r](double t, const std::array<double, 2>& x) {
    return (r(t + kFdStep, x) - r(t - kFdStep, x)) / (2.0 * kFdStep);
  };
  return d;
}

Eigen::VectorXd BoundaryData::value(const Domain& domain, double t) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(domain.n_boundary());
  if (!value_fn || t > support_end) return out;
  for (int r = 0; r < domain.n_boundary(); ++r)
    out[r] = value_fn(t, domain.boundary_point(r));
  return out;
}

Eigen::VectorXd BoundaryData::rate(const Domain& domain, double t) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(domain.n_boundary());
  if (!value_fn || t > support_end) return out;
  if (rate_fn) {
    for (int r = 0; r < domain.n_boundary(); ++r)
      out[r] = rate_fn(t, domain.boundary_point(r));
  } else {
    for (int r = 0; r < domain.n_boundary(); ++r)
      out[r] = (value_fn(t + kFdStep, domain.boundary_point(r)) -
                value_fn(t - kFdStep, domain.boundary_point(r))) /
               (2.0 * kFdStep);
  }
  return out;
}

}  // namespace kzn
