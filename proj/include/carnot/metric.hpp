#pragma once

#include <algorithm>
#include <limits>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "carnot/exp2.hpp"
#include "carnot/geodesic.hpp"

namespace carnot {

template <typename S>
struct ShootingSolution {
  Vec<S> P0;  // |P_H| = 1
  S T = 0;
  S residual = 0;
  bool multiplicity = false;  // target on the vertical axis through the base point
  bool converged = false;
  int roots = 0;              // converged starts
};

template <typename S>
struct DistanceOptions {
  int starts = 16;
  int max_iter = 150;
  S tol = S(1e-11);
  // optional extra start (P0 with unit horizontal part, T)
  std::optional<std::pair<Vec<S>, S>> guess;
};

namespace detail {

template <typename S>
struct ShootResult {
  Vec<S> u, p;
  S T = 0;
  S residual = 0;
  bool ok = false;
};

// exp(0, (u/|u|, p))(T) - target
template <typename S>
Vec<S> shoot_residual(const CarnotGroup<S>& g, const Vec<S>& z, const Vec<S>& target) {
  const int h = g.h(), n = g.n();
  Vec<S> P(n);
  const S nu = z.head(h).norm();
  P.head(h) = z.head(h) / (nu > S(0) ? nu : S(1));
  P.tail(g.v()) = z.segment(h, g.v());
  return exp_sr_2step(g, Vec<S>(Vec<S>::Zero(n)), P, z(n)) - target;
}

template <typename S>
ShootResult<S> shoot(const CarnotGroup<S>& g, const Vec<S>& target, Vec<S> z, int max_iter, S tol) {
  const int n = g.n(), m = n + 1;
  Vec<S> F = shoot_residual(g, z, target);
  S f = F.norm();
  S mu = S(1e-3);
  for (int it = 0; it < max_iter && f > tol; ++it) {
    Mat<S> J(n, m);
    for (int i = 0; i < m; ++i) {
      const S d = S(1e-7) * std::max(S(1), std::abs(z(i)));
      Vec<S> zp = z, zm = z;
      zp(i) += d;
      zm(i) -= d;
      J.col(i) = (shoot_residual(g, zp, target) - shoot_residual(g, zm, target)) / (S(2) * d);
    }
    const Mat<S> A = J.transpose() * J;
    const Vec<S> b = -(J.transpose() * F);
    bool improved = false;
    for (int tries = 0; tries < 12; ++tries) {
      Mat<S> Am = A;
      Am.diagonal().array() += mu * (S(1) + A.diagonal().array());
      const Vec<S> dz = Am.ldlt().solve(b);
      if (!dz.allFinite()) break;
      Vec<S> zn = z + dz;
      const S nu = zn.head(g.h()).norm();
      if (nu > S(0)) zn.head(g.h()) /= nu;
      const Vec<S> Fn = shoot_residual(g, zn, target);
      const S fn = Fn.norm();
      if (std::isfinite(static_cast<double>(fn)) && fn < f) {
        z = zn;
        F = Fn;
        f = fn;
        mu = std::max(mu / S(5), S(1e-12));
        improved = true;
        break;
      }
      mu *= S(8);
    }
    if (!improved) break;
  }
  ShootResult<S> r;
  r.u = z.head(g.h()) / z.head(g.h()).norm();
  r.p = z.segment(g.h(), g.v());
  r.T = z(n);
  r.residual = f;
  r.ok = f <= tol && r.u.allFinite();
  if (r.T < S(0)) {
    r.T = -r.T;
    r.u = -r.u;
    r.p = -r.p;
  }
  return r;
}

template <typename S>
bool lex_less(const Vec<S>& a, const Vec<S>& b) {
  for (int i = 0; i < a.size(); ++i) {
    if (a(i) < b(i)) return true;
    if (a(i) > b(i)) return false;
  }
  return false;
}

template <typename S>
S spectral_norm(const Mat<S>& M) {
  if (M.size() == 0) return 0;
  Eigen::JacobiSVD<Mat<S>> svd(M);
  return svd.singularValues()(0);
}

}  // namespace detail

template <typename S>
ShootingSolution<S> distance_point(const CarnotGroup<S>& g, const Vec<S>& x, const Vec<S>& y,
                                   const DistanceOptions<S>& opts = {}) {
  if (g.step() != 2) throw Error(Code::WrongStep, "distance requires a 2-step group");
  const int h = g.h(), v = g.v(), n = g.n();
  const Vec<S> target = group_product(g, Vec<S>(-x), y);
  const S scale = std::max(S(1), target.norm());
  ShootingSolution<S> best;
  best.multiplicity = target.head(h).norm() < S(1e-9);
  if (target.norm() == S(0)) {
    best.P0 = Vec<S>::Zero(n);
    best.P0(0) = 1;
    best.converged = true;
    best.roots = 1;
    return best;
  }

  const Vec<S> yH = target.head(h), yV = target.tail(v);
  Vec<S> eV = Vec<S>::Zero(v);
  if (yV.norm() > S(0)) eV = yV / yV.norm();
  else eV(0) = 1;
  const S sigma = std::max(detail::spectral_norm(c_horizontal(g, eV)), S(1e-12));
  const S T0 = std::sqrt(yH.squaredNorm() + S(4) * std::numbers::pi_v<S> * yV.norm() / sigma);
  Vec<S> uH = Vec<S>::Zero(h);
  if (yH.norm() > S(0)) uH = yH / yH.norm();
  else uH(0) = 1;

  std::vector<std::pair<S, Vec<S>>> cov;  // (theta, direction)
  const S pi = std::numbers::pi_v<S>;
  cov.push_back({S(0), eV});
  for (S th : {S(0.5), S(1), S(1.5), S(1.9), S(0.25), S(0.75), S(1.25)})
    for (int sgn : {1, -1}) cov.push_back({th * pi, Vec<S>(S(sgn) * eV)});
  for (int a = 0; a < v; ++a)
    for (int sgn : {1, -1}) cov.push_back({pi, Vec<S>(S(sgn) * Vec<S>::Unit(v, a))});

  std::vector<Vec<S>> inits;
  for (const auto& [th, e] : cov) {
    if (static_cast<int>(inits.size()) >= opts.starts) break;
    const S lam = std::max(detail::spectral_norm(c_horizontal(g, e)), S(1e-12));
    const Vec<S> p = (th / (lam * T0)) * e;
    // initial direction: chord direction rotated back by half the turning
    Vec<S> u = uH;
    if (th > S(0)) u = exp_matrix(c_horizontal(g, p), T0 / S(2)) * uH;
    Vec<S> z(n + 1);
    z << u, p, T0;
    inits.push_back(z);
  }
  if (opts.guess) {
    Vec<S> z(n + 1);
    z << opts.guess->first.head(h), opts.guess->first.tail(v), opts.guess->second;
    inits.push_back(z);
  }

  S best_res = std::numeric_limits<S>::infinity();
  for (const auto& z0 : inits) {
    const auto r = detail::shoot(g, target, z0, opts.max_iter, opts.tol * scale);
    best_res = std::min(best_res, r.residual);
    if (!r.ok) continue;
    ++best.roots;
    Vec<S> P(n);
    P << r.u, r.p;
    const bool better = !best.converged || r.T < best.T - S(1e-12) ||
                        (std::abs(r.T - best.T) <= S(1e-12) && detail::lex_less(P, best.P0));
    if (better) {
      best.converged = true;
      best.T = r.T;
      best.P0 = P;
      best.residual = r.residual;
    }
  }
  if (!best.converged) {
    best.residual = best_res;
    throw Error(Code::NoConvergence, "shooting did not converge; best residual " + std::to_string(static_cast<double>(best_res)));
  }
  return best;
}

template <typename S>
GeodesicTrace<S> gauss_system_integrate(const CarnotGroup<S>& g, const Vec<S>& x0, const Vec<S>& nuH0,
                                        const Vec<S>& varpi0, S r, int steps) {
  const int n = g.n(), h = g.h(), v = g.v();
  if (std::abs(nuH0.norm() - S(1)) > S(1e-9)) throw Error(Code::NotUnit, "nu_H must be a unit vector");
  auto f = [&](const Vec<S>& y) {
    const Vec<S> x = y.head(n), nu = y.segment(n, h), w = y.tail(v);
    Vec<S> nupad = Vec<S>::Zero(n);
    nupad.head(h) = nu;
    Vec<S> d(2 * n);
    d.head(n) = frame_matrix(g, x) * nupad;
    d.segment(n, h) = -(c_horizontal(g, w) * nu);
    d.tail(v) = -(c_full(g, w) * nupad).tail(v);
    return d;
  };
  Vec<S> y(2 * n);
  y << x0, nuH0, varpi0;
  GeodesicTrace<S> tr;
  tr.group = g.name;
  tr.integrator = "gauss";
  tr.step = r / S(steps);
  tr.times.push_back(0);
  tr.states.push_back({y.head(n), y.tail(n)});
  for (int i = 0; i < steps; ++i) {
    y = detail::rk4_step<S>(f, y, r / S(steps));
    tr.times.push_back(r * S(i + 1) / S(steps));
    tr.states.push_back({y.head(n), y.tail(n)});
  }
  detail::fill_diagnostics(g, tr);
  return tr;
}

// central-difference Jacobian of P -> exp(x0, P)(t)
template <typename S>
Mat<S> exp_jacobian(const CarnotGroup<S>& g, const Vec<S>& x0, const Vec<S>& P0, S t, S step = S(1e-6)) {
  const int n = g.n();
  Mat<S> J(n, n);
  for (int i = 0; i < n; ++i) {
    const S d = step * std::max(S(1), std::abs(P0(i)));
    Vec<S> pp = P0, pm = P0;
    pp(i) += d;
    pm(i) -= d;
    J.col(i) = (exp_sr_2step(g, x0, pp, t) - exp_sr_2step(g, x0, pm, t)) / (S(2) * d);
  }
  return J;
}

template <typename S>
S exp_jacobian_det(const CarnotGroup<S>& g, const Vec<S>& x0, const Vec<S>& P0, S t) {
  return exp_jacobian(g, x0, P0, t).determinant();
}

template <typename S>
std::vector<S> conjugate_detect(const CarnotGroup<S>& g, const Vec<S>& x0, const Vec<S>& P0, S t_max,
                                int samples = 400) {
  if (g.step() != 2) throw Error(Code::WrongStep, "conjugate detection requires a 2-step group");
  std::vector<S> ts, ds;
  for (int i = 1; i <= samples; ++i) {
    const S t = t_max * S(i) / S(samples);
    ts.push_back(t);
    ds.push_back(exp_jacobian_det(g, x0, P0, t));
  }
  S dmax = 0;
  for (S d : ds) dmax = std::max(dmax, std::abs(d));
  auto det = [&](S t) { return exp_jacobian_det(g, x0, P0, t); };
  std::vector<S> out;
  for (int i = 0; i + 1 < samples; ++i) {
    if (ds[i] == S(0)) {
      out.push_back(ts[i]);
      continue;
    }
    if ((ds[i] > 0) != (ds[i + 1] > 0) && ds[i + 1] != S(0)) {
      S a = ts[i], b = ts[i + 1], fa = ds[i];
      for (int it = 0; it < 200 && b - a > S(1e-13) * std::max(S(1), b); ++it) {
        const S m = S(0.5) * (a + b);
        const S fm = det(m);
        if ((fm > 0) == (fa > 0)) {
          a = m;
          fa = fm;
        } else {
          b = m;
        }
      }
      out.push_back(S(0.5) * (a + b));
    } else if (i > 0 && std::abs(ds[i]) < std::abs(ds[i - 1]) && std::abs(ds[i]) < std::abs(ds[i + 1]) &&
               std::abs(ds[i]) < S(1e-6) * dmax && (ds[i] > 0) == (ds[i - 1] > 0)) {
      // touching zero without a sign change: golden-section on |det|
      S a = ts[i - 1], b = ts[i + 1];
      const S gr = (std::sqrt(S(5)) - S(1)) / S(2);
      for (int it = 0; it < 120; ++it) {
        const S c = b - gr * (b - a), d = a + gr * (b - a);
        if (std::abs(det(c)) < std::abs(det(d))) b = d;
        else a = c;
      }
      out.push_back(S(0.5) * (a + b));
    }
  }
  return out;
}

template <typename S>
struct SphereSample {
  std::vector<Vec<S>> points;
  std::vector<Vec<S>> nuH;     // P_H(r) of the generating geodesic
  std::vector<Vec<S>> varpi;   // P_V of the generating geodesic
  std::vector<Vec<S>> P0;      // generating covector
  std::vector<bool> regular;
  int candidates = 0;
  int rejected = 0;            // wave-front points strictly inside the ball
};

template <typename S>
SphereSample<S> sphere_sample(const CarnotGroup<S>& g, const Vec<S>& x0, S r, int n_dir, int n_cov,
                              unsigned seed = 7, const DistanceOptions<S>& opts = {}) {
  if (g.step() != 2) throw Error(Code::WrongStep, "sphere sampling requires a 2-step group");
  if (!(r > S(0))) throw Error(Code::InvalidArgument, "radius must be positive");
  const int h = g.h(), v = g.v(), n = g.n();

  std::vector<Vec<S>> dirs;
  if (h == 2) {
    for (int i = 0; i < n_dir; ++i) {
      const S a = S(2) * std::numbers::pi_v<S> * (S(i) + S(0.5)) / S(n_dir);
      Vec<S> u(2);
      u << std::cos(a), std::sin(a);
      dirs.push_back(u);
    }
  } else {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    for (int i = 0; i < n_dir; ++i) {
      Vec<S> u(h);
      for (int j = 0; j < h; ++j) u(j) = S(nd(rng));
      dirs.push_back(u / u.norm());
    }
  }
  S sigma = 0;
  for (int a = 0; a < v; ++a)
    sigma = std::max(sigma, detail::spectral_norm(c_horizontal(g, Vec<S>(Vec<S>::Unit(v, a)))));
  const S B = S(1.5) * S(2) * std::numbers::pi_v<S> / (r * std::max(sigma, S(1e-12)));

  std::vector<Vec<S>> covs;
  int total = 1;
  for (int a = 0; a < v; ++a) total *= n_cov;
  for (int idx = 0; idx < total; ++idx) {
    Vec<S> p(v);
    int rem = idx;
    for (int a = 0; a < v; ++a) {
      const int k = rem % n_cov;
      rem /= n_cov;
      p(a) = n_cov == 1 ? S(0) : -B + S(2) * B * S(k) / S(n_cov - 1);
    }
    covs.push_back(p);
  }

  SphereSample<S> out;
  for (const auto& u : dirs)
    for (const auto& p : covs) {
      ++out.candidates;
      Vec<S> P(n);
      P << u, p;
      const auto st = exp_state_2step(g, x0, P, r);
      DistanceOptions<S> o = opts;
      o.guess = std::make_pair(P, r);
      ShootingSolution<S> sol;
      try {
        sol = distance_point(g, x0, st.x, o);
      } catch (const Error&) {
        ++out.rejected;
        continue;
      }
      if (std::abs(sol.T - r) >= S(1e-5) * r) {
        ++out.rejected;
        continue;
      }
      out.points.push_back(st.x);
      out.nuH.push_back(st.P.head(h));
      out.varpi.push_back(st.P.tail(v));
      out.P0.push_back(P);
      bool reg = !sol.multiplicity;
      if (reg) {
        const Mat<S> J = exp_jacobian(g, x0, P, r);
        S prod = 1;
        for (int i = 0; i < n; ++i) prod *= std::max(J.col(i).norm(), S(1e-300));
        reg = std::abs(J.determinant()) / prod > S(1e-6);
      }
      out.regular.push_back(reg);
    }
  return out;
}

}  // namespace carnot
