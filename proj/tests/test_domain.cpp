#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "kzn/domain.hpp"
#include "oracle_helpers.hpp"

using namespace kzn;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("interval grid bookkeeping") {
  Domain d = Domain::make_interval(0.0, kPi, 10);
  CHECK(d.dim() == 1);
  CHECK(d.n_nodes() == 11);
  CHECK(d.n_boundary() == 2);
  CHECK(d.n_interior() == 9);
  CHECK(d.coord(0)[0] == doctest::Approx(0.0));
  CHECK(d.coord(10)[0] == doctest::Approx(kPi));
  CHECK(d.hx() == doctest::Approx(kPi / 10));
  CHECK(d.is_boundary(0));
  CHECK(d.is_boundary(10));
  CHECK_FALSE(d.is_boundary(5));
}

TEST_CASE("interval rejects degenerate resolutions") {
  CHECK_THROWS_AS(Domain::make_interval(0.0, 1.0, 3), std::invalid_argument);
  CHECK_THROWS_AS(Domain::make_interval(0.0, -1.0, 10), std::invalid_argument);
}

TEST_CASE("rectangle boundary ring") {
  Domain d = Domain::make_rectangle(1.0, 2.0, 8, 16);
  CHECK(d.dim() == 2);
  CHECK(d.n_nodes() == 9 * 17);
  CHECK(d.n_interior() == 7 * 15);
  CHECK(d.n_boundary() == 9 * 17 - 7 * 15);
  int on_edges = 0;
  for (int i = 0; i < d.n_nodes(); ++i) {
    const auto& x = d.coord(i);
    bool edge = x[0] <= 1e-14 || x[0] >= 1.0 - 1e-14 || x[1] <= 1e-14 ||
                x[1] >= 2.0 - 1e-14;
    CHECK(d.is_boundary(i) == edge);
    if (edge) ++on_edges;
  }
  CHECK(on_edges == d.n_boundary());
}

TEST_CASE("disk nodes and projected boundary points") {
  const double radius = 1.0;
  Domain d = Domain::make_disk(radius, 32);
  CHECK(d.dim() == 2);
  CHECK(d.n_interior() > 0);
  for (int i : d.interior_nodes()) {
    const auto& x = d.coord(i);
    CHECK(std::hypot(x[0], x[1]) < radius);
  }
  for (int r = 0; r < d.n_boundary(); ++r) {
    const auto& bp = d.boundary_point(r);
    CHECK(std::hypot(bp[0], bp[1]) == doctest::Approx(radius).epsilon(1e-12));
  }
}

TEST_CASE("disk cell volumes approximate the area") {
  Domain d = Domain::make_disk(1.0, 64);
  CHECK(d.cell_volumes().sum() == doctest::Approx(kPi).epsilon(0.01));
}

TEST_CASE("interval volumes reproduce the trapezoid rule") {
  Domain d = Domain::make_interval(0.0, 1.0, 4);
  CHECK(d.cell_volumes()[0] == doctest::Approx(0.125));
  CHECK(d.cell_volumes()[2] == doctest::Approx(0.25));
  CHECK(d.cell_volumes().sum() == doctest::Approx(1.0));
}

TEST_CASE("analytic principal eigenvalues") {
  CHECK(analytic_lambda0(Geometry::interval(0.0, kPi)) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(analytic_lambda0(Geometry::interval(2.0, 1.0)) ==
        doctest::Approx(kPi * kPi).epsilon(1e-12));
  CHECK(analytic_lambda0(Geometry::rectangle(1.0, 1.0)) ==
        doctest::Approx(2.0 * kPi * kPi).epsilon(1e-12));
  double j01 = oracle::bessel_j0_first_zero();
  CHECK(analytic_lambda0(Geometry::disk(1.0)) ==
        doctest::Approx(j01 * j01).epsilon(1e-10));
  CHECK(analytic_lambda0(Geometry::disk(2.0)) ==
        doctest::Approx(j01 * j01 / 4.0).epsilon(1e-10));
}

TEST_CASE("neighbor offsets stay on the lattice") {
  Domain d = Domain::make_rectangle(1.0, 1.0, 6, 6);
  for (int i : d.interior_nodes()) {
    int east = d.node_at_offset(i, 1, 0);
    int west = d.node_at_offset(i, -1, 0);
    REQUIRE(east >= 0);
    REQUIRE(west >= 0);
    CHECK(d.coord(east)[0] > d.coord(i)[0]);
    CHECK(d.coord(west)[0] < d.coord(i)[0]);
  }
}
