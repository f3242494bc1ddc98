#include "kzn/domain.hpp"

#include <cmath>
#include <stdexcept>

namespace kzn {

namespace {

constexpr double kPi = 3.14159265358979323846;

double bessel_j0_first_zero() {
  // J0 changes sign once in [2, 3]; bisect to machine precision.
  double lo = 2.0, hi = 3.0;
  double flo = std::cyl_bessel_j(0.0, lo);
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    double mid = 0.5 * (lo + hi);
    double fm = std::cyl_bessel_j(0.0, mid);
    if ((flo < 0.0) == (fm < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

Geometry Geometry::interval(double x0, double length) {
  if (!(length > 0.0)) throw std::invalid_argument("interval length must be positive");
  Geometry g;
  g.kind = GeometryKind::Interval;
  g.x0 = x0;
  g.lx = length;
  return g;
}

Geometry Geometry::rectangle(double lx, double ly) {
  if (!(lx > 0.0) || !(ly > 0.0))
    throw std::invalid_argument("rectangle extents must be positive");
  Geometry g;
  g.kind = GeometryKind::Rectangle;
  g.lx = lx;
  g.ly = ly;
  return g;
}

Geometry Geometry::disk(double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("disk radius must be positive");
  Geometry g;
  g.kind = GeometryKind::Disk;
  g.radius = radius;
  return g;
}

double analytic_lambda0(const Geometry& geometry) {
  switch (geometry.kind) {
    case GeometryKind::Interval: {
      double f = kPi / geometry.lx;
      return f * f;
    }
    case GeometryKind::Rectangle:
      return kPi * kPi *
             (1.0 / (geometry.lx * geometry.lx) + 1.0 / (geometry.ly * geometry.ly));
    case GeometryKind::Disk: {
      static const double j01 = bessel_j0_first_zero();
      double f = j01 / geometry.radius;
      return f * f;
    }
  }
  throw std::invalid_argument("unknown geometry kind");
}

int Domain::node_at_offset(int node, int di, int dj) const {
  int i = lattice_index_[node][0] + di;
  int j = lattice_index_[node][1] + dj;
  if (i < 0 || i > nx_ || j < 0 || j > ny_) return -1;
  return lattice_[static_cast<std::size_t>(j) * (nx_ + 1) + i];
}

void Domain::finalize() {
  const int n = n_nodes();
  interior_rank_.assign(n, -1);
  boundary_rank_.assign(n, -1);
  neighbors_.assign(n, {-1, -1, -1, -1});
  for (int node = 0; node < n; ++node) {
    neighbors_[node][0] = node_at_offset(node, -1, 0);
    neighbors_[node][1] = node_at_offset(node, +1, 0);
    if (dim_ == 2) {
      neighbors_[node][2] = node_at_offset(node, 0, -1);
      neighbors_[node][3] = node_at_offset(node, 0, +1);
    }
  }
  for (int node = 0; node < n; ++node) {
    if (is_boundary_[node]) {
      boundary_rank_[node] = static_cast<int>(boundary_nodes_.size());
      boundary_nodes_.push_back(node);
    } else {
      interior_rank_[node] = static_cast<int>(interior_nodes_.size());
      interior_nodes_.push_back(node);
    }
  }
  if (n_interior() < 3)
    throw std::invalid_argument("grid too coarse: fewer than 3 interior nodes");
  if (n_boundary() < (dim_ == 1 ? 2 : 4))
    throw std::invalid_argument("grid failed to produce a boundary");
}

Domain Domain::make_interval(double x0, double length, int cells) {
  if (cells < 4) throw std::invalid_argument("interval grid needs at least 4 cells");
  Domain d;
  d.geometry_ = Geometry::interval(x0, length);
  d.dim_ = 1;
  d.nx_ = cells;
  d.ny_ = 0;
  d.hx_ = length / cells;
  d.hy_ = 0.0;

  const int n = cells + 1;
  d.lattice_.resize(n);
  d.coords_.resize(n);
  d.lattice_index_.resize(n);
  d.is_boundary_.assign(n, 0);
  d.cell_volumes_.resize(n);
  for (int i = 0; i < n; ++i) {
    d.lattice_[i] = i;
    d.lattice_index_[i] = {i, 0};
    d.coords_[i] = {x0 + i * d.hx_, 0.0};
    d.is_boundary_[i] = (i == 0 || i == cells) ? 1 : 0;
    d.cell_volumes_[i] = (i == 0 || i == cells) ? 0.5 * d.hx_ : d.hx_;
  }
  d.finalize();
  d.boundary_points_.reserve(d.n_boundary());
  for (int node : d.boundary_nodes_) d.boundary_points_.push_back(d.coords_[node]);
  return d;
}

Domain Domain::make_rectangle(double lx, double ly, int cells_x, int cells_y) {
  if (cells_x < 4 || cells_y < 4)
    throw std::invalid_argument("rectangle grid needs at least 4 cells per axis");
  Domain d;
  d.geometry_ = Geometry::rectangle(lx, ly);
  d.dim_ = 2;
  d.nx_ = cells_x;
  d.ny_ = cells_y;
  d.hx_ = lx / cells_x;
  d.hy_ = ly / cells_y;

  const int n = (cells_x + 1) * (cells_y + 1);
  d.lattice_.resize(n);
  d.coords_.resize(n);
  d.lattice_index_.resize(n);
  d.is_boundary_.assign(n, 0);
  d.cell_volumes_.resize(n);
  int id = 0;
  for (int j = 0; j <= cells_y; ++j) {
    for (int i = 0; i <= cells_x; ++i, ++id) {
      d.lattice_[static_cast<std::size_t>(j) * (cells_x + 1) + i] = id;
      d.lattice_index_[id] = {i, j};
      d.coords_[id] = {i * d.hx_, j * d.hy_};
      bool edge = (i == 0 || i == cells_x || j == 0 || j == cells_y);
      d.is_boundary_[id] = edge ? 1 : 0;
      double wx = (i == 0 || i == cells_x) ? 0.5 * d.hx_ : d.hx_;
      double wy = (j == 0 || j == cells_y) ? 0.5 * d.hy_ : d.hy_;
      d.cell_volumes_[id] = wx * wy;
    }
  }
  d.finalize();
  d.boundary_points_.reserve(d.n_boundary());
  for (int node : d.boundary_nodes_) d.boundary_points_.push_back(d.coords_[node]);
  return d;
}

Domain Domain::make_disk(double radius, int cells_across) {
  if (cells_across < 8)
    throw std::invalid_argument("disk grid needs at least 8 cells across");
  Domain d;
  d.geometry_ = Geometry::disk(radius);
  d.dim_ = 2;
  d.nx_ = cells_across;
  d.ny_ = cells_across;
  d.hx_ = 2.0 * radius / cells_across;
  d.hy_ = d.hx_;

  const double r2 = radius * radius;
  auto point = [&](int i, int j) -> std::array<double, 2> {
    return {-radius + i * d.hx_, -radius + j * d.hy_};
  };
  auto inside = [&](int i, int j) {
    if (i < 0 || i > cells_across || j < 0 || j > cells_across) return false;
    auto p = point(i, j);
    return p[0] * p[0] + p[1] * p[1] < r2;
  };

  const int slots = (cells_across + 1) * (cells_across + 1);
  d.lattice_.assign(slots, -1);
  for (int j = 0; j <= cells_across; ++j) {
    for (int i = 0; i <= cells_across; ++i) {
      if (!inside(i, j)) continue;
      int id = static_cast<int>(d.coords_.size());
      d.lattice_[static_cast<std::size_t>(j) * (cells_across + 1) + i] = id;
      d.lattice_index_.push_back({i, j});
      d.coords_.push_back(point(i, j));
      bool edge = !(inside(i - 1, j) && inside(i + 1, j) && inside(i, j - 1) &&
                    inside(i, j + 1));
      d.is_boundary_.push_back(edge ? 1 : 0);
    }
  }

  // Clipped-cell quadrature weights: the share of each node's h x h cell
  // that lies inside the circle, estimated on a 4 x 4 subsample.
  const int sub = 4;
  d.cell_volumes_.resize(static_cast<int>(d.coords_.size()));
  for (int node = 0; node < static_cast<int>(d.coords_.size()); ++node) {
    const auto& p = d.coords_[node];
    int in = 0;
    for (int a = 0; a < sub; ++a) {
      for (int bq = 0; bq < sub; ++bq) {
        double sx = p[0] + ((a + 0.5) / sub - 0.5) * d.hx_;
        double sy = p[1] + ((bq + 0.5) / sub - 0.5) * d.hy_;
        if (sx * sx + sy * sy < r2) ++in;
      }
    }
    d.cell_volumes_[node] = d.hx_ * d.hy_ * in / (sub * sub);
  }

  d.finalize();
  d.boundary_points_.reserve(d.n_boundary());
  for (int node : d.boundary_nodes_) {
    auto p = d.coords_[node];
    double r = std::sqrt(p[0] * p[0] + p[1] * p[1]);
    if (r < 1e-14) throw std::invalid_argument("degenerate disk grid");
    d.boundary_points_.push_back({p[0] * radius / r, p[1] * radius / r});
  }
  return d;
}

}  // namespace kzn
