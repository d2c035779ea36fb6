#pragma once

#include <cmath>
#include <numbers>
#include <random>

#include <functional>

#include "carnot/geodesic.hpp"
#include "carnot/group.hpp"
#include "carnot/jacobi.hpp"

namespace carnot::testing {

inline Vec<double> random_vec(std::mt19937_64& rng, int n, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Vec<double> v(n);
  for (int i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

// generic 2-step group with h in [2, max_h] and v in [1, 3]
inline CarnotGroup<double> random_two_step(std::mt19937_64& rng, int max_h = 6) {
  std::uniform_int_distribution<int> hd(2, max_h);
  const int h = hd(rng);
  const int vmax = std::min(3, h * (h - 1) / 2);
  const int v = std::uniform_int_distribution<int>(1, vmax)(rng);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  StructureTensor<double> t(GrowthVector({h, v}));
  for (int a = 0; a < v; ++a)
    for (int i = 0; i < h; ++i)
      for (int j = i + 1; j < h; ++j) t.set_bracket(h + a + 1, i + 1, j + 1, u(rng));
  return build_group(std::move(t), "random(" + std::to_string(h) + "," + std::to_string(v) + ")");
}

inline Vec<double> unit_horizontal_momentum(std::mt19937_64& rng, const CarnotGroup<double>& g,
                                            double vscale = 1.0) {
  Vec<double> P = random_vec(rng, g.n(), vscale);
  Vec<double> ph = random_vec(rng, g.h());
  P.head(g.h()) = ph / ph.norm();
  return P;
}

struct SampledCurve {
  std::vector<double> t;
  std::vector<Vec<double>> x;
};

// unit-speed horizontal curve with velocity L(x) (cos theta, sin theta, 0, ...) in the plane of e1, e2
inline SampledCurve turning_curve(const CarnotGroup<double>& g, const Vec<double>& x0,
                                  const std::function<double(double)>& theta, double T, int steps) {
  SampledCurve c;
  auto f = [&](double t, const Vec<double>& x) {
    Vec<double> u = Vec<double>::Zero(g.n());
    u(0) = std::cos(theta(t));
    u(1) = std::sin(theta(t));
    return Vec<double>(frame_matrix(g, x) * u);
  };
  Vec<double> x = x0;
  const double dt = T / steps;
  c.t.push_back(0);
  c.x.push_back(x);
  for (int i = 0; i < steps; ++i) {
    const double t = i * dt;
    const Vec<double> k1 = f(t, x), k2 = f(t + dt / 2, x + dt / 2 * k1), k3 = f(t + dt / 2, x + dt / 2 * k2),
                      k4 = f(t + dt, x + dt * k3);
    x += dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    c.t.push_back(t + dt);
    c.x.push_back(x);
  }
  return c;
}

// smooth field vanishing at 0 and T
inline FieldAlongCurve<double> bump_field(std::mt19937_64& rng, const std::vector<double>& t, int n) {
  const Vec<double> a = random_vec(rng, n), b = random_vec(rng, n);
  const double T = t.back();
  FieldAlongCurve<double> Y;
  for (double s : t) Y.xi.push_back(std::sin(std::numbers::pi * s / T) * (a + std::cos(2 * s) * b));
  return Y;
}

inline std::vector<Vec<double>> smooth_multiplier(std::mt19937_64& rng, const std::vector<double>& t, int v) {
  const Vec<double> a = random_vec(rng, v), b = random_vec(rng, v);
  std::vector<Vec<double>> out;
  for (double s : t) out.push_back(a + s * s * b);
  return out;
}

}  // namespace carnot::testing
