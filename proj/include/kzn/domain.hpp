#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace kzn {

enum class GeometryKind { Interval, Rectangle, Disk };

/// Geometric description of the spatial domain.  Supported shapes:
///   - interval  (x0, x0 + lx)
///   - rectangle (0, lx) x (0, ly)
///   - disk of given radius centred at the origin
struct Geometry {
  GeometryKind kind = GeometryKind::Interval;
  double x0 = 0.0;
  double lx = 0.0;
  double ly = 0.0;
  double radius = 0.0;

  static Geometry interval(double x0, double length);
  static Geometry rectangle(double lx, double ly);
  static Geometry disk(double radius);
};

/// Principal Dirichlet eigenvalue of -Lap on the continuous domain:
/// (pi/l)^2 on an interval, pi^2 (1/lx^2 + 1/ly^2) on a rectangle and
/// (j01/R)^2 on a disk, j01 being the first zero of the Bessel function J0.
double analytic_lambda0(const Geometry& geometry);

/// Uniform Cartesian grid over a geometry.  Nodes are classified as
/// interior (all four axis neighbours present and inside) or boundary.
/// The disk is embedded in a lattice over [-R,R]^2: lattice points inside
/// the circle with an outside axis neighbour become boundary nodes and
/// receive Dirichlet data evaluated at their radial projection onto the
/// circle.  This keeps the boundary treatment first order, which is the
/// intended accuracy for that shape.
class Domain {
public:
  static Domain make_interval(double x0, double length, int cells);
  static Domain make_rectangle(double lx, double ly, int cells_x, int cells_y);
  static Domain make_disk(double radius, int cells_across);

  const Geometry& geometry() const { return geometry_; }
  int dim() const { return dim_; }
  double hx() const { return hx_; }
  double hy() const { return hy_; }

  int n_nodes() const { return static_cast<int>(coords_.size()); }
  int n_interior() const { return static_cast<int>(interior_nodes_.size()); }
  int n_boundary() const { return static_cast<int>(boundary_nodes_.size()); }

  const std::vector<int>& interior_nodes() const { return interior_nodes_; }
  const std::vector<int>& boundary_nodes() const { return boundary_nodes_; }
  bool is_boundary(int node) const { return is_boundary_[node] != 0; }

  /// Rank of a node within the interior (or boundary) list, -1 otherwise.
  int interior_rank(int node) const { return interior_rank_[node]; }
  int boundary_rank(int node) const { return boundary_rank_[node]; }

  /// Node coordinates; the y entry is zero in one dimension.
  const std::array<double, 2>& coord(int node) const { return coords_[node]; }

  /// Point at which Dirichlet data is evaluated for a boundary node
  /// (the node itself except on the disk, where it is the projection
  /// onto the circle).  Indexed by boundary rank.
  const std::array<double, 2>& boundary_point(int boundary_rank) const {
    return boundary_points_[boundary_rank];
  }

  /// Axis neighbours in the order -x, +x, -y, +y; -1 when absent.
  const std::array<int, 4>& neighbors(int node) const { return neighbors_[node]; }

  /// Node at lattice offset (di, dj) from the given node, -1 when absent.
  int node_at_offset(int node, int di, int dj) const;

  /// Quadrature weight of each node (trapezoidal weights on interval and
  /// rectangle, area-fraction clipped cells on the disk).
  const Eigen::VectorXd& cell_volumes() const { return cell_volumes_; }

  double grid_spacing(int axis) const { return axis == 0 ? hx_ : hy_; }

private:
  void build_lattice(int nx, int ny);
  void finalize();

  Geometry geometry_;
  int dim_ = 1;
  double hx_ = 0.0;
  double hy_ = 0.0;

  // Lattice bookkeeping: nodes live on an (nx_+1) x (ny_+1) index grid and
  // lattice_ maps a lattice slot to a node id (-1 for slots outside the
  // domain).  ny_ is zero in one dimension.
  int nx_ = 0;
  int ny_ = 0;
  std::vector<int> lattice_;
  std::vector<std::array<int, 2>> lattice_index_;

  std::vector<std::array<double, 2>> coords_;
  std::vector<std::uint8_t> is_boundary_;
  std::vector<int> interior_nodes_;
  std::vector<int> boundary_nodes_;
  std::vector<int> interior_rank_;
  std::vector<int> boundary_rank_;
  std::vector<std::array<double, 2>> boundary_points_;
  std::vector<std::array<int, 4>> neighbors_;
  Eigen::VectorXd cell_volumes_;
};

}  // namespace kzn
