#include <doctest.h>

#include <cmath>

#include "carnot/hypersurface.hpp"
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

HypersurfaceField<double> curved(int n) {
  HypersurfaceField<double> hf;
  hf.f = [](const Vec<double>& x) { return x(0) + 0.3 * x(1) * x(1) + 0.2 * x(x.size() - 1); };
  (void)n;
  return hf;
}

}  // namespace

TEST_CASE("normals of coordinate hyperplanes") {
  const auto g = heisenberg(1);
  const auto d = surface_normals(g, coordinate_hyperplane<double>(3, 0), vec({0.3, 0.2, 0}));
  CHECK_FALSE(d.characteristic);
  CHECK((d.nuH - vec({1, 0})).norm() < 1e-15);
  CHECK(d.varpi.norm() < 1e-15);
  const auto c = surface_normals(g, coordinate_hyperplane<double>(3, 2), vec({0, 0, 0}));
  CHECK(c.characteristic);
  // away from the origin {x3 = 0} is not characteristic
  const auto e = surface_normals(g, coordinate_hyperplane<double>(3, 2), vec({1, 0, 0}));
  CHECK_FALSE(e.characteristic);
  CHECK(std::abs(e.nuH.norm() - 1) < 1e-15);
  HypersurfaceField<double> flat;
  flat.f = [](const Vec<double>&) { return 1.0; };
  CHECK_THROWS_AS(surface_normals(g, flat, vec({0, 0, 0})), Error);
}

TEST_CASE("metric normals") {
  const auto g = heisenberg(2);
  const auto hp = coordinate_hyperplane<double>(5, 0);
  const auto tr = metric_normal(g, hp, vec({0, 0.2, 0, 0, 0.1}), -0.5, 0.5, 10);
  for (std::size_t i = 0; i < tr.size(); ++i) CHECK(std::abs(tr.states[i].x(0) - tr.times[i]) < 1e-14);
  auto code = [&](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return Code::InvalidArgument;
  };
  CHECK(code([&] { metric_normal(g, hp, vec({1, 0, 0, 0, 0}), 0.0, 1.0, 10); }) == Code::NotOnSurface);
  CHECK(code([&] { metric_normal(g, coordinate_hyperplane<double>(5, 4), vec({0, 0, 0, 0, 0}), 0.0, 1.0, 10); }) ==
        Code::Characteristic);
  CHECK(code([&] { metric_normal(engel(), coordinate_hyperplane<double>(4, 0), vec({0, 0, 0, 0}), 0.0, 1.0, 10); }) ==
        Code::WrongStep);
}

TEST_CASE("hyperplane distance is the coordinate") {
  for (const auto& g : {heisenberg(1), heisenberg(2)}) {
    const int n = g.n();
    const auto ch = build_chart(g, coordinate_hyperplane<double>(n, 0), Vec<double>(Vec<double>::Zero(n)));
    CHECK(ch.eps0 > 0.1);
    std::mt19937_64 rng(41);
    for (int rep = 0; rep < 10; ++rep) {
      Vec<double> x = random_vec(rng, n, 0.2);
      CHECK(std::abs(delta_H(ch, x) - std::abs(x(0))) < 1e-10);
    }
  }
  const auto g = heisenberg(1);
  const auto ch = build_chart(g, coordinate_hyperplane<double>(3, 0), vec({0, 0, 0}));
  CHECK(std::abs(delta_H(ch, vec({0.3, 0, 0})) - 0.3) < 1e-12);
}

TEST_CASE("chart round trip and jacobian on a curved surface") {
  std::mt19937_64 rng(42);
  for (const auto& g : {heisenberg(1), heisenberg(2), testing::random_two_step(rng, 4)}) {
    const int n = g.n();
    const auto field = curved(n);
    const auto ch = build_chart(g, field, Vec<double>(Vec<double>::Zero(n)));
    for (int rep = 0; rep < 5; ++rep) {
      const Vec<double> u = random_vec(rng, n - 1, 0.3);
      const Vec<double> y = surface_point(ch, u);
      CHECK(std::abs(field.f(y)) < 1e-12);
      const double t = 0.8 * ch.eps0 * std::uniform_real_distribution<double>(-1, 1)(rng);
      const Vec<double> x = phi_map(ch, y, t);
      const auto p = project_to_surface(ch, x);
      CHECK((p.y - y).norm() < 1e-9);
      CHECK(std::abs(p.t - t) < 1e-9);
      const auto jac = phi_jacobian(ch, u);
      CHECK(std::abs(jac.finite_difference - jac.closed_form) < 1e-6 * (1 + jac.closed_form));

      // horizontal gradient of delta_H against finite differences
      if (std::abs(t) > 0.05 * ch.eps0) {
        const Vec<double> gr = grad_delta_H(ch, x);
        const Mat<double> L = frame_matrix(g, x);
        for (int I = 0; I < n; ++I) {
          const double s = 1e-6;
          const double fd = (delta_H(ch, Vec<double>(x + s * L.col(I))) - delta_H(ch, Vec<double>(x - s * L.col(I)))) / (2 * s);
          CHECK(std::abs(fd - gr(I)) < 1e-5);
        }
        CHECK(std::abs(gr.head(g.h()).norm() - 1) < 1e-12);
      }
    }
    CHECK_THROWS_AS(phi_map(ch, Vec<double>(Vec<double>::Zero(n)), 2 * ch.eps0), Error);
  }
}

TEST_CASE("chart refuses characteristic base points") {
  const auto g = heisenberg(1);
  CHECK_THROWS_AS(build_chart(g, coordinate_hyperplane<double>(3, 2), vec({0, 0, 0})), Error);
  CHECK_THROWS_AS(build_chart(g, coordinate_hyperplane<double>(3, 0), vec({1, 0, 0})), Error);
}
