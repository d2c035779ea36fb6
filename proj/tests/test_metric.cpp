#include <doctest.h>

#include <cmath>
#include <numbers>

#include "carnot/metric.hpp"
#include "support.hpp"

using namespace carnot;
using carnot::testing::random_vec;

namespace {

Vec<double> vec(std::initializer_list<double> v) {
  Vec<double> out(static_cast<int>(v.size()));
  int i = 0;
  for (double a : v) out(i++) = a;
  return out;
}

// d(0, (r, 0, z)) in H1 from the geodesic family with phi = lambda T / 2
double h1_distance(double r, double z) {
  z = std::abs(z);
  if (z == 0) return r;
  if (r == 0) return 2 * std::sqrt(std::numbers::pi * z);
  const double target = z / (r * r);
  double lo = 1e-12, hi = std::numbers::pi - 1e-15;
  auto f = [](double p) { return (2 * p - std::sin(2 * p)) / (8 * std::sin(p) * std::sin(p)); };
  for (int i = 0; i < 200; ++i) {
    const double m = 0.5 * (lo + hi);
    (f(m) < target ? lo : hi) = m;
  }
  const double phi = 0.5 * (lo + hi);
  return r * phi / std::sin(phi);
}

}  // namespace

TEST_CASE("vertical axis distance") {
  const auto g = heisenberg(1);
  for (double z : {0.25, 1.0, 4.0}) {
    const auto s = distance_point(g, vec({0, 0, 0}), vec({0, 0, z}));
    CHECK(s.multiplicity);
    CHECK(std::abs(s.T - 2 * std::sqrt(std::numbers::pi * z)) < 1e-8);
  }
  CHECK(distance_point(g, vec({1, 2, 3}), vec({1, 2, 3})).T == 0.0);
}

TEST_CASE("heisenberg distance against the analytic family") {
  const auto g = heisenberg(1);
  std::mt19937_64 rng(21);
  for (int rep = 0; rep < 20; ++rep) {
    const Vec<double> y = random_vec(rng, 3, 2.0);
    const double r = y.head(2).norm();
    const auto s = distance_point(g, vec({0, 0, 0}), y);
    CHECK(std::abs(s.T - h1_distance(r, y(2))) < 1e-8);
    CHECK((exp_sr_2step(g, vec({0, 0, 0}), s.P0, s.T) - y).norm() < 1e-9);
    CHECK_FALSE(s.multiplicity);
  }
}

TEST_CASE("distance symmetries") {
  std::mt19937_64 rng(22);
  for (int rep = 0; rep < 4; ++rep) {
    const auto g = rep == 0 ? heisenberg(2) : testing::random_two_step(rng, 4);
    const Vec<double> x = random_vec(rng, g.n()), y = random_vec(rng, g.n());
    const double dxy = distance_point(g, x, y).T;
    CHECK(std::abs(dxy - distance_point(g, y, x).T) < 1e-7);
    const Vec<double> z = random_vec(rng, g.n());
    const double shifted = distance_point(g, group_product(g, z, x), group_product(g, z, y)).T;
    CHECK(std::abs(dxy - shifted) < 1e-7);
    const Vec<double> o = Vec<double>::Zero(g.n());
    const double dil = distance_point(g, o, dilate(g, 1.7, Vec<double>(group_product(g, Vec<double>(-x), y)))).T;
    CHECK(std::abs(dil - 1.7 * dxy) < 1e-6);
    // horizontal lines are minimizing
    Vec<double> hz = Vec<double>::Zero(g.n());
    hz.head(g.h()) = random_vec(rng, g.h());
    CHECK(std::abs(distance_point(g, o, hz).T - hz.norm()) < 1e-8);
  }
}

TEST_CASE("distance errors") {
  try {
    distance_point(engel(), vec({0, 0, 0, 0}), vec({1, 0, 0, 0}));
    FAIL("expected WrongStep");
  } catch (const Error& e) {
    CHECK(e.code() == Code::WrongStep);
  }
}

TEST_CASE("gauss system reproduces the exponential") {
  std::mt19937_64 rng(23);
  for (const auto& g : {heisenberg(1), heisenberg(2), testing::random_two_step(rng)}) {
    const Vec<double> x0 = random_vec(rng, g.n());
    const Vec<double> P0 = testing::unit_horizontal_momentum(rng, g);
    const auto tr = gauss_system_integrate(g, x0, Vec<double>(P0.head(g.h())), Vec<double>(P0.tail(g.v())), 1.0, 1000);
    for (std::size_t i = 0; i < tr.size(); i += 100) {
      const auto st = exp_state_2step(g, x0, P0, tr.times[i]);
      CHECK((st.x - tr.states[i].x).norm() < 1e-10);
      CHECK((st.P - tr.states[i].P).norm() < 1e-10);
    }
  }
  CHECK_THROWS_AS(gauss_system_integrate(heisenberg(1), vec({0, 0, 0}), vec({1, 1}), vec({0}), 1.0, 10), Error);
}

TEST_CASE("first conjugate time in the heisenberg group") {
  const auto g = heisenberg(1);
  const double lam = 2.0;
  const auto c = conjugate_detect(g, vec({0, 0, 0}), vec({1, 0, lam}), 4.0, 200);
  REQUIRE_FALSE(c.empty());
  CHECK(std::abs(c.front() - 2 * std::numbers::pi / lam) < 1e-6);
}

TEST_CASE("sphere samples lie on the sphere") {
  const auto g = heisenberg(1);
  const auto s = sphere_sample(g, vec({0, 0, 0}), 1.0, 6, 5);
  CHECK(s.candidates == 30);
  CHECK(s.points.size() > 10);
  CHECK(s.rejected > 0);
  for (const auto& p : s.points) CHECK(std::abs(h1_distance(p.head(2).norm(), p(2)) - 1.0) < 1e-6);
}
