#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "carnot/exp2.hpp"
#include "carnot/metric.hpp"

namespace carnot {

template <typename S>
struct HypersurfaceField {
  std::function<S(const Vec<S>&)> f;
  std::function<Vec<S>(const Vec<S>&)> grad;  // coordinate gradient; finite differences when empty

  Vec<S> gradient(const Vec<S>& x) const {
    if (grad) return grad(x);
    const S hstep = S(1e-6) * (S(1) + x.norm());
    Vec<S> gr(x.size());
    for (int i = 0; i < x.size(); ++i) {
      Vec<S> xp = x, xm = x;
      xp(i) += hstep;
      xm(i) -= hstep;
      gr(i) = (f(xp) - f(xm)) / (S(2) * hstep);
    }
    return gr;
  }
};

template <typename S>
HypersurfaceField<S> coordinate_hyperplane(int n, int index) {
  HypersurfaceField<S> hf;
  hf.f = [index](const Vec<S>& x) { return x(index); };
  hf.grad = [n, index](const Vec<S>&) { return Vec<S>(Vec<S>::Unit(n, index)); };
  return hf;
}

template <typename S>
struct SurfaceNormalData {
  Vec<S> frame_grad;  // (X_1 f, ..., X_n f)
  Vec<S> nu;
  Vec<S> nuH;
  Vec<S> varpi;
  Vec<S> N;
  bool characteristic = false;
};

template <typename S>
SurfaceNormalData<S> surface_normals(const CarnotGroup<S>& g, const HypersurfaceField<S>& field,
                                     const Vec<S>& x) {
  const int h = g.h(), v = g.v();
  SurfaceNormalData<S> d;
  d.frame_grad = frame_matrix(g, x).transpose() * field.gradient(x);
  const S norm = d.frame_grad.norm();
  if (!(norm > S(0))) throw Error(Code::ZeroGradient, "gradient of f vanishes");
  d.nu = d.frame_grad / norm;
  const S ph = d.nu.head(h).norm();
  d.characteristic = ph < S(1e-10);
  if (!d.characteristic) {
    d.nuH = d.nu.head(h) / ph;
    d.varpi = d.nu.tail(v) / ph;
    d.N.resize(g.n());
    d.N << d.nuH, d.varpi;
  }
  return d;
}

template <typename S>
GeodesicTrace<S> metric_normal(const CarnotGroup<S>& g, const HypersurfaceField<S>& field, const Vec<S>& y,
                               S t0, S t1, int steps) {
  if (g.step() != 2) throw Error(Code::WrongStep, "metric normals require a 2-step group");
  if (std::abs(field.f(y)) > S(1e-9)) throw Error(Code::NotOnSurface, "point is not on the surface");
  const auto nd = surface_normals(g, field, y);
  if (nd.characteristic) throw Error(Code::Characteristic, "characteristic point");
  if (steps < 1 || !(t1 > t0)) throw Error(Code::InvalidArgument, "need t1 > t0 and steps >= 1");
  const auto cf = skew_canonical(c_horizontal(g, Vec<S>(nd.N.tail(g.v()))));
  GeodesicTrace<S> tr;
  tr.group = g.name;
  tr.integrator = "closed-form";
  tr.step = (t1 - t0) / S(steps);
  for (int i = 0; i <= steps; ++i) {
    const S t = t0 + (t1 - t0) * S(i) / S(steps);
    const auto st = exp_state_2step(g, y, nd.N, t, &cf);
    tr.times.push_back(t);
    tr.states.push_back({st.x, st.P});
  }
  detail::fill_diagnostics(g, tr);
  return tr;
}

template <typename S>
struct ChartOptions {
  S rho = S(0.5);        // half-width of the surface-coordinate box
  S eps = S(0.5);        // user bound for the half-width in t
  int probes = 3;        // probe points per axis
  int max_halvings = 30;
};

template <typename S>
struct TubularChart {
  const CarnotGroup<S>* group = nullptr;
  HypersurfaceField<S> field;
  Vec<S> y0;
  Mat<S> tangent;    // frame components at y0, n x (n-1), orthonormal
  Mat<S> tangent_c;  // coordinate directions L(y0) * tangent
  Vec<S> normal_c;   // coordinate direction L(y0) * nu(y0)
  Mat<S> J0inv;
  S rho = 0;
  S eps0 = 0;
  int dim() const { return group->n(); }
};

template <typename S>
struct Projection {
  Vec<S> y;
  Vec<S> u;
  S t = 0;
  S residual = 0;
  int iterations = 0;
};

namespace detail {

template <typename S>
Vec<S> chart_surface_point(const TubularChart<S>& ch, const Vec<S>& u) {
  Vec<S> z = ch.y0 + ch.tangent_c * u;
  S sigma = 0;
  for (int it = 0; it < 60; ++it) {
    const Vec<S> p = z + sigma * ch.normal_c;
    const S fv = ch.field.f(p);
    if (std::abs(fv) < S(1e-14) * (S(1) + p.norm())) return p;
    const S df = ch.field.gradient(p).dot(ch.normal_c);
    if (df == S(0)) break;
    sigma -= fv / df;
  }
  const Vec<S> p = z + sigma * ch.normal_c;
  if (std::abs(ch.field.f(p)) < S(1e-11)) return p;
  throw Error(Code::NoConvergence, "projection onto the surface failed");
}

template <typename S>
Vec<S> chart_phi(const TubularChart<S>& ch, const Vec<S>& ut) {
  const CarnotGroup<S>& g = *ch.group;
  const int n = g.n();
  const Vec<S> y = chart_surface_point(ch, Vec<S>(ut.head(n - 1)));
  const auto nd = surface_normals(g, ch.field, y);
  if (nd.characteristic) throw Error(Code::Characteristic, "characteristic point in the patch");
  return exp_sr_2step(g, y, nd.N, ut(n - 1));
}

template <typename S>
Mat<S> chart_jacobian(const TubularChart<S>& ch, const Vec<S>& ut, S step = S(1e-7)) {
  const int n = ch.dim();
  Mat<S> J(n, n);
  for (int i = 0; i < n; ++i) {
    Vec<S> a = ut, b = ut;
    a(i) += step;
    b(i) -= step;
    J.col(i) = (chart_phi(ch, a) - chart_phi(ch, b)) / (S(2) * step);
  }
  return J;
}

template <typename S>
bool chart_invert(const TubularChart<S>& ch, const Vec<S>& x, Vec<S>& ut, S& res, int& iters) {
  ut = ch.J0inv * (x - ch.y0);
  Vec<S> F = chart_phi(ch, ut) - x;
  res = F.norm();
  const S tol = S(1e-13) * (S(1) + x.norm());
  for (iters = 0; iters < 50 && res > tol; ++iters) {
    const Mat<S> J = chart_jacobian(ch, ut);
    const Vec<S> d = J.partialPivLu().solve(-F);
    if (!d.allFinite()) return false;
    S lam = 1;
    bool ok = false;
    for (int k = 0; k < 30; ++k) {
      const Vec<S> cand = ut + lam * d;
      Vec<S> Fn;
      try {
        Fn = chart_phi(ch, cand) - x;
      } catch (const Error&) {
        lam *= S(0.5);
        continue;
      }
      if (Fn.norm() < res) {
        ut = cand;
        F = Fn;
        res = Fn.norm();
        ok = true;
        break;
      }
      lam *= S(0.5);
    }
    if (!ok) break;
  }
  return res <= S(1e-10) * (S(1) + x.norm());
}

}  // namespace detail

template <typename S>
TubularChart<S> build_chart(const CarnotGroup<S>& g, const HypersurfaceField<S>& field, const Vec<S>& y0,
                            const ChartOptions<S>& opts = {}) {
  if (g.step() != 2) throw Error(Code::WrongStep, "tubular charts require a 2-step group");
  const int n = g.n();
  if (std::abs(field.f(y0)) > S(1e-9)) throw Error(Code::NotOnSurface, "base point is not on the surface");
  const auto nd = surface_normals(g, field, y0);
  if (nd.characteristic) throw Error(Code::Characteristic, "base point is characteristic");

  TubularChart<S> ch;
  ch.group = &g;
  ch.field = field;
  ch.y0 = y0;
  ch.rho = opts.rho;
  const Mat<S> nu = nd.nu;
  Eigen::HouseholderQR<Mat<S>> qr(nu);
  const Mat<S> Q = qr.householderQ();
  ch.tangent = Q.rightCols(n - 1);
  const Mat<S> L = frame_matrix(g, y0);
  ch.tangent_c = L * ch.tangent;
  ch.normal_c = L * nd.nu;
  ch.J0inv = Mat<S>::Identity(n, n);
  const Mat<S> J0 = detail::chart_jacobian(ch, Vec<S>(Vec<S>::Zero(n)));
  ch.J0inv = J0.inverse();

  // shrink eps until every probe inverts back to itself
  S eps = opts.eps;
  const int m = std::max(2, opts.probes);
  int total = 1;
  for (int i = 0; i < n; ++i) total *= m;
  for (int halving = 0; halving <= opts.max_halvings; ++halving) {
    bool all_ok = true;
    for (int idx = 0; idx < total && all_ok; ++idx) {
      Vec<S> ut(n);
      int rem = idx;
      for (int a = 0; a < n; ++a) {
        const int k = rem % m;
        rem /= m;
        const S w = a < n - 1 ? ch.rho : eps;
        ut(a) = -w + S(2) * w * S(k) / S(m - 1);
      }
      try {
        const Vec<S> x = detail::chart_phi(ch, ut);
        Vec<S> back;
        S res;
        int it;
        all_ok = detail::chart_invert(ch, x, back, res, it) && (back - ut).norm() < S(1e-7);
      } catch (const Error& e) {
        if (e.code() == Code::Characteristic) throw;
        all_ok = false;
      }
    }
    if (all_ok) {
      ch.eps0 = eps;
      return ch;
    }
    eps *= S(0.5);
  }
  throw Error(Code::NoConvergence, "no admissible chart half-width found");
}

template <typename S>
Vec<S> phi_map(const TubularChart<S>& ch, const Vec<S>& y, S t) {
  if (std::abs(t) > ch.eps0) throw Error(Code::OutsideChart, "|t| exceeds the chart half-width");
  const auto nd = surface_normals(*ch.group, ch.field, y);
  if (nd.characteristic) throw Error(Code::Characteristic, "characteristic point");
  return exp_sr_2step(*ch.group, y, nd.N, t);
}

template <typename S>
Vec<S> surface_point(const TubularChart<S>& ch, const Vec<S>& u) {
  return detail::chart_surface_point(ch, u);
}

template <typename S>
struct PhiJacobian {
  S finite_difference = 0;
  S closed_form = 0;  // |P_H V|
};

// |det J Phi(y(u), 0)| two ways
template <typename S>
PhiJacobian<S> phi_jacobian(const TubularChart<S>& ch, const Vec<S>& u) {
  const CarnotGroup<S>& g = *ch.group;
  const int n = g.n(), h = g.h();
  Vec<S> ut = Vec<S>::Zero(n);
  ut.head(n - 1) = u;
  const Mat<S> J = detail::chart_jacobian(ch, ut, S(1e-6));
  PhiJacobian<S> out;
  out.finite_difference = std::abs(J.determinant());

  const Vec<S> y = detail::chart_surface_point(ch, u);
  const Mat<S> Linv = frame_matrix(g, y).inverse();
  Mat<S> tau(n, n - 1);
  for (int i = 0; i < n - 1; ++i) {
    Vec<S> a = u, b = u;
    const S d = S(1e-6);
    a(i) += d;
    b(i) -= d;
    tau.col(i) = Linv * (detail::chart_surface_point(ch, a) - detail::chart_surface_point(ch, b)) / (S(2) * d);
  }
  // generalized cross product: V_i = det[tau, e_i]
  Vec<S> V(n);
  for (int i = 0; i < n; ++i) {
    Mat<S> M(n, n);
    M.leftCols(n - 1) = tau;
    M.col(n - 1) = Vec<S>::Unit(n, i);
    V(i) = M.determinant();
  }
  out.closed_form = V.head(h).norm();
  return out;
}

template <typename S>
Projection<S> project_to_surface(const TubularChart<S>& ch, const Vec<S>& x) {
  const int n = ch.dim();
  Projection<S> p;
  Vec<S> ut;
  if (!detail::chart_invert(ch, x, ut, p.residual, p.iterations))
    throw Error(Code::NoConvergence, "chart inversion did not converge");
  p.u = ut.head(n - 1);
  p.t = ut(n - 1);
  const S slack = S(1e-9);
  if (p.u.cwiseAbs().maxCoeff() > ch.rho * (S(1) + slack) || std::abs(p.t) > ch.eps0 * (S(1) + slack))
    throw Error(Code::OutsideChart, "point lies outside the chart");
  p.y = detail::chart_surface_point(ch, p.u);
  return p;
}

template <typename S>
S delta_H(const TubularChart<S>& ch, const Vec<S>& x) {
  return std::abs(project_to_surface(ch, x).t);
}

// sign(t) (e^{-C_H(varpi) t} nu_H, varpi) at the foot point, frame components
template <typename S>
Vec<S> grad_delta_H(const TubularChart<S>& ch, const Vec<S>& x) {
  const CarnotGroup<S>& g = *ch.group;
  const auto p = project_to_surface(ch, x);
  const auto nd = surface_normals(g, ch.field, p.y);
  const Mat<S> E = exp_matrix(c_horizontal(g, nd.varpi), -p.t);
  Vec<S> out(g.n());
  out << E * nd.nuH, nd.varpi;
  return p.t < S(0) ? Vec<S>(-out) : out;
}

}  // namespace carnot
