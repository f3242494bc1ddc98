#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "kzn/domain.hpp"
#include "kzn/norms.hpp"

using namespace kzn;

namespace {
constexpr double kPi = 3.14159265358979323846;

Field sample(const Domain& d, double (*f)(double)) {
  Field out(d.n_nodes());
  for (int i = 0; i < d.n_nodes(); ++i) out[i] = f(d.coord(i)[0]);
  return out;
}
}  // namespace

TEST_CASE("L2 norm of a constant matches the measure") {
  Domain d = Domain::make_interval(0.0, kPi, 100);
  Field one = Field::Ones(d.n_nodes());
  CHECK(discrete_norm(one, d, {2.0, 0}) ==
        doctest::Approx(std::sqrt(kPi)).epsilon(1e-12));
}

TEST_CASE("Lp norm scaling and homogeneity") {
  Domain d = Domain::make_interval(0.0, 1.0, 64);
  Field f = sample(d, [](double x) { return std::sin(3.0 * x) + 0.2; });
  for (double p : {2.0, 3.0, 1.7}) {
    double n1 = discrete_norm(f, d, {p, 0});
    double n2 = discrete_norm(Field(-2.5 * f), d, {p, 0});
    CHECK(n2 == doctest::Approx(2.5 * n1).epsilon(1e-12));
  }
}

TEST_CASE("triangle inequality holds on random fields") {
  Domain d = Domain::make_interval(0.0, 1.0, 50);
  Field f = sample(d, [](double x) { return std::cos(5.0 * x); });
  Field g = sample(d, [](double x) { return x * x - 0.3; });
  for (int order = 0; order <= 2; ++order) {
    double lhs = discrete_norm(Field(f + g), d, {2.0, order});
    double rhs = discrete_norm(f, d, {2.0, order}) +
                 discrete_norm(g, d, {2.0, order});
    CHECK(lhs <= rhs + 1e-12);
  }
}

TEST_CASE("Sobolev norms of sin on (0, pi)") {
  Domain d = Domain::make_interval(0.0, kPi, 400);
  Field f = sample(d, [](double x) { return std::sin(x); });
  // ||sin||^2 = pi/2 and each extra derivative adds the same amount.
  CHECK(discrete_norm(f, d, {2.0, 0}) ==
        doctest::Approx(std::sqrt(kPi / 2)).epsilon(1e-3));
  CHECK(discrete_norm(f, d, {2.0, 1}) ==
        doctest::Approx(std::sqrt(kPi)).epsilon(1e-3));
  CHECK(discrete_norm(f, d, {2.0, 2}) ==
        doctest::Approx(std::sqrt(1.5 * kPi)).epsilon(1e-3));
}

TEST_CASE("vector field norm sums the components") {
  Domain d = Domain::make_rectangle(1.0, 1.0, 20, 20);
  VectorField v = VectorField::Zero(d.n_nodes(), 2);
  v.col(0).setConstant(3.0);
  v.col(1).setConstant(4.0);
  // |v| = 5 pointwise, measure 1.
  CHECK(discrete_norm(v, d, {2.0, 0}) == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("unsupported exponents and orders are rejected") {
  Domain d = Domain::make_interval(0.0, 1.0, 10);
  Field f = Field::Ones(d.n_nodes());
  CHECK_THROWS_AS(discrete_norm(f, d, {1.0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(discrete_norm(f, d, {0.5, 0}), std::invalid_argument);
  CHECK_THROWS_AS(discrete_norm(f, d, {2.0, 3}), std::invalid_argument);
  CHECK_THROWS_AS(discrete_norm(f, d, {2.0, -1}), std::invalid_argument);
}
