#include <doctest.h>

#include <cmath>
#include <numbers>

#include "carnot/exp2.hpp"
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

Mat<double> random_skew(std::mt19937_64& rng, int h) {
  const Mat<double> A = Mat<double>::NullaryExpr(h, h, [&]() { return std::uniform_real_distribution<double>(-1, 1)(rng); });
  return A - A.transpose();
}

Mat<double> taylor_exp(const Mat<double>& M) {
  Mat<double> E = Mat<double>::Identity(M.rows(), M.cols()), term = E;
  for (int k = 1; k < 80; ++k) {
    term = term * M / double(k);
    E += term;
  }
  return E;
}

}  // namespace

TEST_CASE("skew canonical form") {
  std::mt19937_64 rng(1);
  for (int h = 1; h <= 7; ++h) {
    const Mat<double> M = random_skew(rng, h);
    const auto cf = skew_canonical(M);
    CHECK((cf.O.transpose() * cf.O - Mat<double>::Identity(h, h)).norm() < 1e-12);
    CHECK((cf.O.transpose() * M * cf.O - cf.block_matrix()).norm() < 1e-10);
    CHECK(cf.nullity == h % 2);
    for (int j = 0; j + 1 < cf.blocks(); ++j) CHECK(cf.lambdas[j] >= cf.lambdas[j + 1]);
    for (double l : cf.lambdas) CHECK(l > 0);
  }
  // degenerate: rank-2 matrix in dimension 4, repeated frequencies in dimension 4
  Mat<double> M = Mat<double>::Zero(4, 4);
  M(0, 2) = 2;
  M(2, 0) = -2;
  auto cf = skew_canonical(M);
  CHECK(cf.blocks() == 1);
  CHECK(cf.nullity == 2);
  CHECK((cf.O.transpose() * M * cf.O - cf.block_matrix()).norm() < 1e-12);
  const auto g = heisenberg(2);
  cf = skew_canonical(c_horizontal(g, vec({3})));
  CHECK(cf.blocks() == 2);
  CHECK(std::abs(cf.lambdas[0] - 3) < 1e-12);
  CHECK((cf.O.transpose() * c_horizontal(g, vec({3})) * cf.O - cf.block_matrix()).norm() < 1e-12);
  CHECK(skew_canonical(Mat<double>(Mat<double>::Zero(3, 3))).nullity == 3);

  Mat<double> bad = Mat<double>::Identity(2, 2);
  CHECK_THROWS_AS(skew_canonical(bad), Error);
}

TEST_CASE("matrix exponential of skew matrices") {
  std::mt19937_64 rng(2);
  for (int h = 2; h <= 6; ++h) {
    const Mat<double> M = random_skew(rng, h);
    CHECK((exp_matrix(M, 0.7) - taylor_exp(0.7 * M)).norm() < 1e-12);
  }
}

TEST_CASE("trig integrals are continuous across the series switch") {
  for (int p = 0; p <= 2; ++p)
    for (bool s : {false, true}) {
      const double t = 2.0;
      const double below = detail::trig_integral(p, s, 1.9999999, t);
      const double above = detail::trig_integral(p, s, 2.0000001, t);
      CHECK(std::abs(below - above) < 1e-6);
      // direct quadrature
      const int N = 20000;
      const double w = 3.3;
      double q = 0;
      for (int i = 0; i <= N; ++i) {
        const double x = t * i / N;
        const double f = std::pow(x, p) * (s ? std::sin(w * x) : std::cos(w * x));
        q += (i == 0 || i == N ? 1 : (i % 2 ? 4 : 2)) * f;
      }
      q *= t / N / 3;
      CHECK(std::abs(q - detail::trig_integral(p, s, w, t)) < 1e-12);
    }
}

TEST_CASE("closed form matches the integrator") {
  std::mt19937_64 rng(4);
  for (int rep = 0; rep < 20; ++rep) {
    const auto g = rep < 3 ? heisenberg(rep + 1) : testing::random_two_step(rng);
    const Vec<double> x0 = random_vec(rng, g.n());
    const Vec<double> P0 = random_vec(rng, g.n(), 3.0);
    const auto tr = integrate_normal(g, x0, P0, 1.0, 1000);
    for (std::size_t i = 0; i < tr.size(); i += 50) {
      const auto st = exp_state_2step(g, x0, P0, tr.times[i]);
      CHECK((st.x - tr.states[i].x).lpNorm<Eigen::Infinity>() < 1e-9);
      CHECK((st.P - tr.states[i].P).lpNorm<Eigen::Infinity>() < 1e-9);
    }
  }
}

TEST_CASE("small and vanishing vertical momentum") {
  const auto g = heisenberg(1);
  const Vec<double> x0 = vec({0.1, -0.2, 0.3});
  for (double lam : {0.0, 1e-9, 1e-5, 0.3}) {
    const Vec<double> P = vec({0.6, 0.8, lam});
    const auto tr = integrate_normal(g, x0, P, 2.0, 2000);
    CHECK((exp_sr_2step(g, x0, P, 2.0) - tr.states.back().x).norm() < 1e-10);
  }
}

TEST_CASE("homogeneity") {
  std::mt19937_64 rng(6);
  for (int rep = 0; rep < 10; ++rep) {
    const auto g = testing::random_two_step(rng);
    const Vec<double> x0 = random_vec(rng, g.n()), P0 = random_vec(rng, g.n());
    const double a = 0.1 + 9.9 * std::uniform_real_distribution<double>(0, 1)(rng);
    const Vec<double> lhs = exp_sr_2step(g, x0, Vec<double>(a * P0), 0.8);
    const Vec<double> rhs = exp_sr_2step(g, x0, P0, a * 0.8);
    CHECK((lhs - rhs).lpNorm<Eigen::Infinity>() < 1e-10);
  }
}

TEST_CASE("vertical increments") {
  std::mt19937_64 rng(8);
  const auto g = testing::random_two_step(rng);
  const Vec<double> xH0 = random_vec(rng, g.h());
  Vec<double> P0 = random_vec(rng, g.n());
  Vec<double> x0 = Vec<double>::Zero(g.n());
  x0.head(g.h()) = xH0;
  const auto tr = integrate_normal(g, x0, P0, 1.5, 2000);
  for (int a = 0; a < g.v(); ++a) {
    const double closed = vertical_increment(g, a, xH0, P0, 1.5);
    const double sampled = vertical_increment(g, a, tr).front();
    CHECK(std::abs(closed - sampled) < 1e-9);
  }
  CHECK_THROWS_AS(vertical_increment(engel(), 0, vec({0, 0}), vec({1, 0, 0, 0}), 1.0), Error);
}

TEST_CASE("periods") {
  const auto g1 = heisenberg(1);
  const auto T = minimal_periods(g1, vec({2}));
  REQUIRE(T.size() == 1);
  CHECK(std::abs(T[0] - std::numbers::pi) < 1e-12);
  const auto rep = periodicity(g1, vec({2}), T[0]);
  CHECK(rep.rank_defect == 2);
  CHECK(rep.nullity == 0);

  // h = 5, frequencies 1 and 2 with one null direction
  StructureTensor<double> t(GrowthVector({5, 1}));
  t.set_bracket(6, 1, 2, 1);
  t.set_bracket(6, 3, 4, 2);
  const auto g = build_group(std::move(t));
  const auto Ts = minimal_periods(g, vec({1}));
  REQUIRE(Ts.size() == 2);
  CHECK(std::abs(Ts[0] - std::numbers::pi) < 1e-12);
  CHECK(periodicity(g, vec({1}), Ts[0]).rank_defect == 3);
  CHECK(periodicity(g, vec({1}), Ts[1]).rank_defect == 5);
  CHECK(periodicity(g, vec({1}), 1.0).rank_defect == 1);

  CHECK_THROWS_AS(minimal_periods(g1, vec({0})), Error);
  CHECK_THROWS_AS(minimal_periods(engel(), vec({1, 0})), Error);
}

TEST_CASE("closed form requires a two step group") {
  try {
    exp_sr_2step(engel(), Vec<double>(Vec<double>::Zero(4)), vec({1, 0, 0, 0}), 1.0);
    FAIL("expected WrongStep");
  } catch (const Error& e) {
    CHECK(e.code() == Code::WrongStep);
  }
}

TEST_CASE("increment examples") {
  const auto g = heisenberg(1);
  // circle of radius rho, one full turn
  const double rho = 0.7;
  std::vector<double> ts;
  std::vector<Vec<double>> xs, vs;
  for (int i = 0; i <= 2000; ++i) {
    const double s = 2 * std::numbers::pi * i / 2000;
    ts.push_back(s);
    xs.push_back(vec({rho * std::cos(s), rho * std::sin(s)}));
    vs.push_back(vec({-rho * std::sin(s), rho * std::cos(s)}));
  }
  CHECK(std::abs(std::abs(vertical_increment(g, 0, ts, xs, vs)) - 2 * std::numbers::pi * rho * rho) < 1e-10);
  const double lam = 1.3;
  const double I = vertical_increment(g, 0, vec({0, 0}), vec({1, 0, lam}), 2 * std::numbers::pi / lam);
  CHECK(std::abs(I + 2 * std::numbers::pi / (lam * lam)) < 1e-12);
}

TEST_CASE("invertible C_H closed form") {
  std::mt19937_64 rng(12);
  const auto g = heisenberg(3);
  const Vec<double> x0 = random_vec(rng, 7), P0 = random_vec(rng, 7);
  const Mat<double> C = c_horizontal(g, Vec<double>(P0.tail(1)));
  const double t = 1.7;
  const Vec<double> xH = x0.head(6) + C.inverse() * (Mat<double>::Identity(6, 6) - exp_matrix(C, -t)) * P0.head(6);
  CHECK((exp_sr_2step(g, x0, P0, t).head(6) - xH).norm() < 1e-10);
}

TEST_CASE("zero vertical momentum drifts linearly") {
  std::mt19937_64 rng(13);
  const auto g = testing::random_two_step(rng);
  const Vec<double> x0 = random_vec(rng, g.n());
  Vec<double> P0 = random_vec(rng, g.n());
  P0.tail(g.v()).setZero();
  const double t = 2.5;
  const Vec<double> x = exp_sr_2step(g, x0, P0, t);
  CHECK((x.head(g.h()) - x0.head(g.h()) - t * P0.head(g.h())).norm() < 1e-13);
  for (int a = 0; a < g.v(); ++a) {
    const double ex = x0(g.h() + a) - 0.5 * t * (g.CH[a] * x0.head(g.h())).dot(P0.head(g.h()));
    CHECK(std::abs(x(g.h() + a) - ex) < 1e-13);
  }
}

TEST_CASE("exp_matrix is a rotation") {
  std::mt19937_64 rng(14);
  const Mat<double> M = random_skew(rng, 4);
  const Mat<double> E = exp_matrix(M, 1.3);
  CHECK((E * exp_matrix(M, -1.3) - Mat<double>::Identity(4, 4)).norm() < 1e-12);
  CHECK(std::abs(E.determinant() - 1) < 1e-12);
  CHECK(exp_matrix(Mat<double>(Mat<double>::Zero(3, 3)), 2.0) == Mat<double>::Identity(3, 3));
}
