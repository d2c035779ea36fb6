#pragma once

#include <cmath>
#include <vector>

#include "carnot/geodesic.hpp"
#include "carnot/group.hpp"

namespace carnot {

// gamma[K](I, J) = <nabla_{X_K} X_J, X_I>
template <typename S>
struct ConnectionData {
  std::vector<Mat<S>> gamma;
  const CarnotGroup<S>* group = nullptr;

  int n() const { return static_cast<int>(gamma.size()); }

  // matrix of Y -> nabla_U Y for constant-component Y
  Mat<S> Gamma(const Vec<S>& U) const {
    Mat<S> G = Mat<S>::Zero(n(), n());
    for (int K = 0; K < n(); ++K)
      if (U(K) != S(0)) G += U(K) * gamma[K];
    return G;
  }
  S gamma_at(int I, int J, int K) const { return gamma[K](I, J); }

  // R(X,Y)Z = nabla_Y nabla_X Z - nabla_X nabla_Y Z - nabla_[Y,X] Z
  Vec<S> curvature(const Vec<S>& X, const Vec<S>& Y, const Vec<S>& Z) const {
    const Mat<S> GX = Gamma(X), GY = Gamma(Y);
    return GY * (GX * Z) - GX * (GY * Z) - Gamma(bracket(*group, Y, X)) * Z;
  }
  S rm(int I, int J, int K, int L) const {
    const Vec<S> eI = Vec<S>::Unit(n(), I), eJ = Vec<S>::Unit(n(), J), eK = Vec<S>::Unit(n(), K);
    return curvature(eI, eJ, eK)(L);
  }
};

template <typename S>
ConnectionData<S> connection_data(const CarnotGroup<S>& g) {
  const int n = g.n();
  ConnectionData<S> cd;
  cd.group = &g;
  cd.gamma.assign(n, Mat<S>::Zero(n, n));
  for (int K = 0; K < n; ++K)
    for (int J = 0; J < n; ++J)
      for (int I = 0; I < n; ++I)
        cd.gamma[K](I, J) = S(0.5) * (g.C(I)(K, J) - g.C(K)(J, I) + g.C(J)(I, K));
  return cd;
}

template <typename S>
struct FieldAlongCurve {
  std::vector<Vec<S>> xi;
  std::size_t size() const { return xi.size(); }
};

namespace detail {

template <typename S>
bool uniform_grid(const std::vector<S>& t) {
  if (t.size() < 2) return false;
  const S dt = (t.back() - t.front()) / S(t.size() - 1);
  for (std::size_t i = 1; i < t.size(); ++i)
    if (std::abs((t[i] - t[i - 1]) - dt) > S(1e-9) * std::abs(dt)) return false;
  return true;
}

// fourth-order differences on uniform grids, second order otherwise
template <typename S>
std::vector<Vec<S>> derivative(const std::vector<S>& t, const std::vector<Vec<S>>& f) {
  const std::size_t N = t.size();
  if (N < 3) throw Error(Code::TooFewSamples, "need at least 3 samples");
  if (N < 5 || !uniform_grid(t)) return time_derivative(t, f);
  const S dt = (t.back() - t.front()) / S(N - 1);
  const S c = S(1) / (S(12) * dt);
  std::vector<Vec<S>> d(N);
  d[0] = c * (-S(25) * f[0] + S(48) * f[1] - S(36) * f[2] + S(16) * f[3] - S(3) * f[4]);
  d[1] = c * (-S(3) * f[0] - S(10) * f[1] + S(18) * f[2] - S(6) * f[3] + f[4]);
  for (std::size_t i = 2; i + 2 < N; ++i) d[i] = c * (f[i - 2] - S(8) * f[i - 1] + S(8) * f[i + 1] - f[i + 2]);
  d[N - 2] = -c * (-S(3) * f[N - 1] - S(10) * f[N - 2] + S(18) * f[N - 3] - S(6) * f[N - 4] + f[N - 5]);
  d[N - 1] = -c * (-S(25) * f[N - 1] + S(48) * f[N - 2] - S(36) * f[N - 3] + S(16) * f[N - 4] - S(3) * f[N - 5]);
  return d;
}

template <typename S>
S quadrature(const std::vector<S>& t, const std::vector<S>& f) {
  const std::size_t N = t.size();
  if (N >= 3 && N % 2 == 1 && uniform_grid(t)) {
    const S dt = (t.back() - t.front()) / S(N - 1);
    S s = f[0] + f[N - 1];
    for (std::size_t i = 1; i + 1 < N; ++i) s += (i % 2 ? S(4) : S(2)) * f[i];
    return s * dt / S(3);
  }
  S s = 0;
  for (std::size_t i = 1; i < N; ++i) s += S(0.5) * (f[i] + f[i - 1]) * (t[i] - t[i - 1]);
  return s;
}

template <typename S>
std::vector<Vec<S>> frame_velocity(const CarnotGroup<S>& g, const std::vector<S>& t,
                                   const std::vector<Vec<S>>& xs) {
  const auto dx = derivative(t, xs);
  std::vector<Vec<S>> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = frame_matrix(g, xs[i]).partialPivLu().solve(dx[i]);
  return out;
}

template <typename S>
std::vector<Vec<S>> trace_points(const GeodesicTrace<S>& tr) {
  std::vector<Vec<S>> xs;
  for (const auto& st : tr.states) xs.push_back(st.x);
  return xs;
}

}  // namespace detail

// Curve given by samples (times, coordinates); fields are frame components on the same grid.
template <typename S>
FieldAlongCurve<S> covariant_derivative_along(const ConnectionData<S>& cd, const std::vector<S>& t,
                                              const std::vector<Vec<S>>& xs, const FieldAlongCurve<S>& F) {
  if (F.size() != t.size() || xs.size() != t.size())
    throw Error(Code::GridMismatch, "field and curve sample counts differ");
  const auto v = detail::frame_velocity(*cd.group, t, xs);
  const auto dF = detail::derivative(t, F.xi);
  FieldAlongCurve<S> out;
  out.xi.resize(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) out.xi[i] = dF[i] + cd.Gamma(v[i]) * F.xi[i];
  return out;
}

template <typename S>
FieldAlongCurve<S> covariant_derivative_along(const ConnectionData<S>& cd, const GeodesicTrace<S>& tr,
                                              const FieldAlongCurve<S>& F) {
  return covariant_derivative_along(cd, tr.times, detail::trace_points(tr), F);
}

// int |xdot_H| + <P_V, xdot_V> with frame components of the velocity
template <typename S>
S sr_action(const CarnotGroup<S>& g, const std::vector<S>& t, const std::vector<Vec<S>>& xs,
            const std::vector<Vec<S>>& PV) {
  if (xs.size() != t.size() || PV.size() != t.size())
    throw Error(Code::GridMismatch, "curve and multiplier sample counts differ");
  const auto v = detail::frame_velocity(g, t, xs);
  std::vector<S> f(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) f[i] = v[i].head(g.h()).norm() + PV[i].dot(v[i].tail(g.v()));
  return detail::quadrature(t, f);
}

template <typename S>
S sr_action(const CarnotGroup<S>& g, const GeodesicTrace<S>& tr) {
  std::vector<Vec<S>> PV;
  for (const auto& st : tr.states) PV.push_back(st.P.tail(g.v()));
  return sr_action(g, tr.times, detail::trace_points(tr), PV);
}

template <typename S>
struct VariationCheck {
  S formula = 0;
  S finite_difference = 0;
  S scale = 0;  // int |nabla_t Y|^2, used to normalize when both values are small
  S abs_error() const { return std::abs(formula - finite_difference); }
  S rel_error() const {
    const S d = std::max({std::abs(formula), std::abs(finite_difference), scale, S(1e-300)});
    return abs_error() / d;
  }
};

// Variation x(t) + s L(x(t)) Y(t), multiplier P_V + s Q_V.
template <typename S>
struct ConcreteVariation {
  const CarnotGroup<S>& g;
  const std::vector<S>& t;
  const std::vector<Vec<S>>& xs;
  const std::vector<Vec<S>>& PV;
  const FieldAlongCurve<S>& Y;
  const std::vector<Vec<S>>& QV;

  S action(S s) const {
    std::vector<Vec<S>> ys(t.size()), ps(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
      ys[i] = xs[i] + s * (frame_matrix(g, xs[i]) * Y.xi[i]);
      ps[i] = PV[i] + s * QV[i];
    }
    return sr_action(g, t, ys, ps);
  }
};

namespace detail {

template <typename S>
void check_inputs(const CarnotGroup<S>& g, const std::vector<S>& t, const std::vector<Vec<S>>& xs,
                  const std::vector<Vec<S>>& PV, const FieldAlongCurve<S>& Y,
                  const std::vector<Vec<S>>& QV) {
  const std::size_t N = t.size();
  if (xs.size() != N || PV.size() != N || Y.size() != N || QV.size() != N)
    throw Error(Code::GridMismatch, "sample counts differ");
  if (Y.xi.front().norm() > S(1e-12) || Y.xi.back().norm() > S(1e-12))
    throw Error(Code::EndpointViolation, "variation field must vanish at both ends");
  const auto v = frame_velocity(g, t, xs);
  for (const auto& w : v)
    if (std::abs(w.head(g.h()).norm() - S(1)) > S(1e-4))
      throw Error(Code::NotUnitSpeed, "curve must have unit horizontal speed");
}

template <typename S>
Vec<S> pad_vertical(const CarnotGroup<S>& g, const Vec<S>& V) {
  Vec<S> out = Vec<S>::Zero(g.n());
  out.tail(g.v()) = V;
  return out;
}

}  // namespace detail

template <typename S>
VariationCheck<S> first_variation_check(const ConnectionData<S>& cd, const std::vector<S>& t,
                                        const std::vector<Vec<S>>& xs, const std::vector<Vec<S>>& PV,
                                        const FieldAlongCurve<S>& Y, const std::vector<Vec<S>>& QV,
                                        S ds = S(1e-4)) {
  const CarnotGroup<S>& g = *cd.group;
  detail::check_inputs(g, t, xs, PV, Y, QV);
  const std::size_t N = t.size();
  const auto v = detail::frame_velocity(g, t, xs);
  FieldAlongCurve<S> V{v};
  const auto acc = covariant_derivative_along(cd, t, xs, V);
  const auto dPV = detail::derivative(t, PV);
  std::vector<S> f(N);
  for (std::size_t i = 0; i < N; ++i) {
    const Vec<S> E = acc.xi[i] + detail::pad_vertical(g, dPV[i]) + c_full(g, PV[i]) * v[i];
    f[i] = QV[i].dot(v[i].tail(g.v())) - Y.xi[i].dot(E);
  }
  VariationCheck<S> out;
  out.formula = detail::quadrature(t, f);
  ConcreteVariation<S> var{g, t, xs, PV, Y, QV};
  out.finite_difference = (var.action(ds) - var.action(-ds)) / (S(2) * ds);
  return out;
}

enum class SecondVariationMode { General, GeodesicVariation };

namespace detail {

// integrand of the second-variation formulas on a given grid
template <typename S>
std::vector<S> second_variation_integrand(const ConnectionData<S>& cd, const std::vector<S>& t,
                                          const std::vector<Vec<S>>& xs, const std::vector<Vec<S>>& PV,
                                          const FieldAlongCurve<S>& Y, const std::vector<Vec<S>>& QV,
                                          SecondVariationMode mode, S* scale) {
  const CarnotGroup<S>& g = *cd.group;
  const int h = g.h(), v = g.v();
  const std::size_t N = t.size();
  const auto vel = frame_velocity(g, t, xs);
  const auto DY = covariant_derivative_along(cd, t, xs, Y);
  std::vector<S> f(N), e(N);
  for (std::size_t i = 0; i < N; ++i) e[i] = DY.xi[i].squaredNorm();
  *scale = quadrature(t, e);
  if (mode == SecondVariationMode::GeodesicVariation) {
    const auto DDY = covariant_derivative_along(cd, t, xs, DY);
    for (std::size_t i = 0; i < N; ++i) {
      const Vec<S> br = bracket(g, vel[i], Y.xi[i]);
      const Vec<S> lin = DY.xi[i] + br;
      const Vec<S> jac = DDY.xi[i] + cd.curvature(vel[i], Y.xi[i], vel[i]) + c_full(g, PV[i]) * DY.xi[i];
      f[i] = QV[i].dot(lin.tail(v)) - Y.xi[i].dot(jac);
    }
    return f;
  }
  FieldAlongCurve<S> YH;
  for (const auto& y : Y.xi) {
    Vec<S> a = Vec<S>::Zero(g.n());
    a.head(h) = y.head(h);
    YH.xi.push_back(a);
  }
  const auto DYH = covariant_derivative_along(cd, t, xs, YH);
  const auto DDYH = covariant_derivative_along(cd, t, xs, DYH);
  for (std::size_t i = 0; i < N; ++i) {
    const Vec<S> br = bracket(g, Y.xi[i], vel[i]);
    const Vec<S> cyv = c_full(g, Vec<S>(Y.xi[i].tail(v))) * vel[i];
    const Vec<S> lin = DY.xi[i] - S(0.75) * br - S(0.25) * cyv;
    const Vec<S> quad = DDYH.xi[i] + c_full(g, PV[i]) * (DYH.xi[i] + br) + br +
                        cd.curvature(vel[i], Y.xi[i], vel[i]);
    f[i] = S(2) * QV[i].dot(lin.tail(v)) - Y.xi[i].dot(quad);
  }
  return f;
}

}  // namespace detail

// Formula value against the second difference of the action along x + s L(x) Y.
template <typename S>
VariationCheck<S> second_variation_check(const ConnectionData<S>& cd, const std::vector<S>& t,
                                         const std::vector<Vec<S>>& xs, const std::vector<Vec<S>>& PV,
                                         const FieldAlongCurve<S>& Y, const std::vector<Vec<S>>& QV,
                                         SecondVariationMode mode, S ds = S(1e-3)) {
  const CarnotGroup<S>& g = *cd.group;
  detail::check_inputs(g, t, xs, PV, Y, QV);
  VariationCheck<S> out;
  const auto f = detail::second_variation_integrand(cd, t, xs, PV, Y, QV, mode, &out.scale);
  out.formula = detail::quadrature(t, f);
  ConcreteVariation<S> var{g, t, xs, PV, Y, QV};
  out.finite_difference = (var.action(ds) - S(2) * var.action(S(0)) + var.action(-ds)) / (ds * ds);
  return out;
}

// Variation through normal geodesics s -> exp(x0, P(s)) on [0, T] with
// P_H(s) = cos(s) P_H + sin(s) W_H and P_V(s) = P_V + s W_V; Y and Q_V are its derivatives at s = 0.
template <typename S>
VariationCheck<S> second_variation_through_geodesics(const ConnectionData<S>& cd, const Vec<S>& x0,
                                                     const Vec<S>& P0, const Vec<S>& W, S T, int steps,
                                                     S ds = S(1e-3), S endpoint_tol = S(1e-6)) {
  const CarnotGroup<S>& g = *cd.group;
  const int v = g.v();
  const int h = g.h();
  auto curve = [&](S s) {
    Vec<S> P = P0 + s * W;
    P.head(h) = std::cos(s) * P0.head(h) + std::sin(s) * W.head(h);
    return integrate_normal(g, x0, P, T, steps);
  };
  const S dy = S(1e-5);
  const auto base = curve(S(0));
  const auto yp = curve(dy), ym = curve(-dy);
  const std::size_t N = base.size();
  std::vector<Vec<S>> xs(N), PV(N), QV(N);
  FieldAlongCurve<S> Y;
  for (std::size_t i = 0; i < N; ++i) {
    xs[i] = base.states[i].x;
    PV[i] = base.states[i].P.tail(v);
    const Vec<S> dxc = (yp.states[i].x - ym.states[i].x) / (S(2) * dy);
    Y.xi.push_back(frame_matrix(g, xs[i]).partialPivLu().solve(dxc));
    QV[i] = (yp.states[i].P.tail(v) - ym.states[i].P.tail(v)) / (S(2) * dy);
  }
  if (Y.xi.front().norm() > endpoint_tol || Y.xi.back().norm() > endpoint_tol)
    throw Error(Code::EndpointViolation, "geodesic family does not keep the endpoints fixed");
  VariationCheck<S> out;
  const auto f = detail::second_variation_integrand(cd, base.times, xs, PV, Y, QV,
                                                    SecondVariationMode::GeodesicVariation, &out.scale);
  out.formula = detail::quadrature(base.times, f);
  auto action = [&](S s) { return sr_action(g, curve(s)); };
  out.finite_difference = (action(ds) - S(2) * action(S(0)) + action(-ds)) / (ds * ds);
  return out;
}

enum class JacobiMode {
  Full,                 // constant-multiplier equation plus the monitored vertical constraint
  ConstantMultiplier,   // nabla_t^2 J + R(P_H,J)P_H + C(P_V) nabla_t J = 0
  TransportedMultiplier // adds (nabla_J C(P_V)) P_H
};

template <typename S>
struct JacobiSolution {
  std::vector<S> times;
  FieldAlongCurve<S> J;
  FieldAlongCurve<S> DJ;            // nabla_t J
  std::vector<S> constraint;        // |vertical part of nabla_t J - [J, P_H]|, Full mode only
};

template <typename S>
Vec<S> jacobi_operator(const ConnectionData<S>& cd, const Vec<S>& PHpad, const Vec<S>& PV,
                       const Vec<S>& J, const Vec<S>& DJ, JacobiMode mode) {
  const CarnotGroup<S>& g = *cd.group;
  const Mat<S> C = c_full(g, PV);
  Vec<S> a = -cd.curvature(PHpad, J, PHpad) - C * DJ;
  if (mode == JacobiMode::TransportedMultiplier) {
    const Mat<S> GJ = cd.Gamma(J);
    a -= (GJ * C - C * GJ) * PHpad;
  }
  return a;
}

template <typename S>
JacobiSolution<S> integrate_jacobi(const ConnectionData<S>& cd, const GeodesicTrace<S>& tr,
                                   const Vec<S>& J0, const Vec<S>& J0dot, JacobiMode mode) {
  const CarnotGroup<S>& g = *cd.group;
  const int n = g.n(), v = g.v();
  if (tr.size() < 2) throw Error(Code::TooFewSamples, "trace needs at least 2 samples");
  if (!detail::uniform_grid(tr.times)) throw Error(Code::GridMismatch, "trace grid must be uniform");
  const auto& s0 = tr.states.front();
  if (std::abs(s0.P.head(g.h()).norm() - S(1)) > S(1e-9))
    throw Error(Code::NotUnitSpeed, "geodesic must have unit horizontal speed");

  auto f = [&](const Vec<S>& z) {
    const MomentumState<S> st{z.segment(0, n), z.segment(n, n)};
    const MomentumState<S> d = normal_rhs(g, st);
    const Vec<S> PH = pad_horizontal(g, st.P);
    const Vec<S> PV = st.P.tail(v);
    const Vec<S> J = z.segment(2 * n, n), D = z.segment(3 * n, n);
    const Mat<S> G = cd.Gamma(PH);
    Vec<S> out(4 * n);
    out << d.x, d.P, D - G * J, -G * D + jacobi_operator(cd, PH, PV, J, D, mode);
    return out;
  };
  Vec<S> z(4 * n);
  z << s0.x, s0.P, J0, J0dot;
  JacobiSolution<S> sol;
  sol.times = tr.times;
  auto record = [&]() {
    const Vec<S> J = z.segment(2 * n, n), D = z.segment(3 * n, n);
    sol.J.xi.push_back(J);
    sol.DJ.xi.push_back(D);
    if (mode == JacobiMode::Full) {
      const Vec<S> PH = pad_horizontal(g, Vec<S>(z.segment(n, n)));
      sol.constraint.push_back((D - bracket(g, J, PH)).tail(v).norm());
    }
  };
  record();
  for (std::size_t i = 1; i < tr.size(); ++i) {
    z = detail::rk4_step<S>(f, z, tr.times[i] - tr.times[i - 1]);
    record();
  }
  return sol;
}

// Residual of the selected Jacobi operator for a field sampled on a geodesic trace.
template <typename S>
std::vector<S> jacobi_residual(const ConnectionData<S>& cd, const GeodesicTrace<S>& tr,
                               const FieldAlongCurve<S>& J, JacobiMode mode) {
  const CarnotGroup<S>& g = *cd.group;
  const auto DJ = covariant_derivative_along(cd, tr, J);
  const auto DDJ = covariant_derivative_along(cd, tr, DJ);
  std::vector<S> r;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    const Vec<S> PH = pad_horizontal(g, tr.states[i].P);
    const Vec<S> PV = tr.states[i].P.tail(g.v());
    r.push_back((DDJ.xi[i] - jacobi_operator(cd, PH, PV, J.xi[i], DJ.xi[i], mode)).norm());
  }
  return r;
}

}  // namespace carnot
