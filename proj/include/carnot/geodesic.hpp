#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "carnot/group.hpp"

namespace carnot {

template <typename S>
struct MomentumState {
  Vec<S> x;
  Vec<S> P;
};

template <typename S>
struct TraceDiagnostics {
  S speed0 = 0;           // |P_H(0)|
  S max_speed_drift = 0;  // max_t | |P_H(t)| - |P_H(0)| |
  S max_energy_drift = 0; // max_t | H(t) - H(0) |, H = |P_H|^2 / 2
  S max_top_drift = 0;    // max_t |P_top(t) - P_top(0)|
  S richardson = -1;      // end-point difference against the halved step, -1 if not computed
};

template <typename S>
struct GeodesicTrace {
  std::vector<S> times;
  std::vector<MomentumState<S>> states;
  std::string group;
  std::string integrator;
  S step = 0;
  TraceDiagnostics<S> diag;

  std::size_t size() const { return times.size(); }
};

template <typename S>
Vec<S> pad_horizontal(const CarnotGroup<S>& g, const Vec<S>& PH) {
  Vec<S> out = Vec<S>::Zero(g.n());
  out.head(g.h()) = PH.head(g.h());
  return out;
}

template <typename S>
MomentumState<S> normal_rhs(const CarnotGroup<S>& g, const MomentumState<S>& s) {
  const Vec<S> PHpad = pad_horizontal(g, s.P);
  MomentumState<S> d;
  d.x = frame_matrix(g, s.x) * PHpad;
  // rows of the top layer vanish identically by grading
  d.P = -(c_full(g, Vec<S>(s.P.tail(g.v()))) * PHpad);
  return d;
}

namespace detail {

template <typename S>
bool finite(const Vec<S>& v) {
  return v.allFinite();
}

template <typename S>
void fill_diagnostics(const CarnotGroup<S>& g, GeodesicTrace<S>& tr) {
  const int h = g.h();
  const int k = g.step();
  const int top_lo = g.tensor.growth.offset(k - 1);
  const auto& P0 = tr.states.front().P;
  const S sp0 = P0.head(h).norm();
  tr.diag.speed0 = sp0;
  for (const auto& st : tr.states) {
    const S sp = st.P.head(h).norm();
    tr.diag.max_speed_drift = std::max(tr.diag.max_speed_drift, std::abs(sp - sp0));
    tr.diag.max_energy_drift =
        std::max(tr.diag.max_energy_drift, std::abs(S(0.5) * sp * sp - S(0.5) * sp0 * sp0));
    if (k >= 2)
      tr.diag.max_top_drift = std::max(
          tr.diag.max_top_drift, (st.P.tail(g.n() - top_lo) - P0.tail(g.n() - top_lo)).norm());
  }
}

template <typename S, typename Rhs>
Vec<S> rk4_step(const Rhs& f, const Vec<S>& y, S dt) {
  const Vec<S> k1 = f(y);
  const Vec<S> k2 = f(Vec<S>(y + S(0.5) * dt * k1));
  const Vec<S> k3 = f(Vec<S>(y + S(0.5) * dt * k2));
  const Vec<S> k4 = f(Vec<S>(y + dt * k3));
  return y + dt / S(6) * (k1 + S(2) * k2 + S(2) * k3 + k4);
}

template <typename S>
Vec<S> pack(const MomentumState<S>& s) {
  Vec<S> y(s.x.size() + s.P.size());
  y << s.x, s.P;
  return y;
}

template <typename S>
MomentumState<S> unpack(const Vec<S>& y, int n) {
  return {y.head(n), y.tail(n)};
}

template <typename S>
std::vector<Vec<S>> rk4_normal(const CarnotGroup<S>& g, const Vec<S>& x0, const Vec<S>& P0, S T,
                               int n_steps) {
  const int n = g.n();
  auto f = [&](const Vec<S>& y) {
    const MomentumState<S> d = normal_rhs(g, unpack(y, n));
    return pack(d);
  };
  std::vector<Vec<S>> out;
  out.reserve(n_steps + 1);
  Vec<S> y = pack(MomentumState<S>{x0, P0});
  out.push_back(y);
  const S dt = T / S(n_steps);
  for (int i = 0; i < n_steps; ++i) {
    y = rk4_step<S>(f, y, dt);
    if (!finite(y)) throw Error(Code::NonFiniteState, "state overflow at step " + std::to_string(i));
    out.push_back(y);
  }
  return out;
}

}  // namespace detail

template <typename S>
GeodesicTrace<S> integrate_normal(const CarnotGroup<S>& g, const Vec<S>& x0, const Vec<S>& P0, S T,
                                  int n_steps, bool richardson = false) {
  if (n_steps < 1) throw Error(Code::InvalidArgument, "n_steps must be >= 1");
  if (!std::isfinite(static_cast<double>(T))) throw Error(Code::InvalidArgument, "T must be finite");
  if (x0.size() != g.n() || P0.size() != g.n())
    throw Error(Code::DimensionMismatch, "x0 and P0 must have n components");
  const int n = g.n();
  const auto ys = detail::rk4_normal(g, x0, P0, T, n_steps);
  GeodesicTrace<S> tr;
  tr.group = g.name;
  tr.integrator = "rk4";
  tr.step = T / S(n_steps);
  for (int i = 0; i <= n_steps; ++i) {
    tr.times.push_back(T * S(i) / S(n_steps));
    tr.states.push_back(detail::unpack(ys[i], n));
  }
  detail::fill_diagnostics(g, tr);
  if (richardson) {
    const auto fine = detail::rk4_normal(g, x0, P0, T, 2 * n_steps);
    tr.diag.richardson = (fine.back() - ys.back()).template lpNorm<Eigen::Infinity>();
  }
  return tr;
}

// Layered scheme: top layer constant, layer k-1 algebraic in x_H, lower layers by quadrature.
template <typename S>
GeodesicTrace<S> integrate_stepwise(const CarnotGroup<S>& g, const Vec<S>& x0, const Vec<S>& P0, S T,
                                    int n_steps) {
  if (n_steps < 1) throw Error(Code::InvalidArgument, "n_steps must be >= 1");
  if (x0.size() != g.n() || P0.size() != g.n())
    throw Error(Code::DimensionMismatch, "x0 and P0 must have n components");
  const int n = g.n(), h = g.h(), k = g.step();
  const GrowthVector& gv = g.tensor.growth;

  // evolved momentum layers are 1..k-2 (0-based coordinates [0, mid_hi))
  const int mid_hi = k >= 3 ? gv.offset(k - 2) : 0;
  const int sub_lo = k >= 2 ? gv.offset(k - 2) : 0;  // layer k-1
  const int sub_hi = k >= 2 ? gv.offset(k - 1) : 0;

  Mat<S> Ctop = Mat<S>::Zero(n, n);
  if (k >= 2)
    for (int a = sub_hi; a < n; ++a)
      if (P0(a) != S(0)) Ctop += P0(a) * g.C(a);

  auto assemble = [&](const Vec<S>& y) {
    Vec<S> P = P0;
    if (k == 1) return P;
    P.head(mid_hi) = y.segment(n, mid_hi);
    Vec<S> dxH = Vec<S>::Zero(n);
    dxH.head(h) = y.head(h) - x0.head(h);
    const Vec<S> corr = Ctop * dxH;
    P.segment(sub_lo, sub_hi - sub_lo) =
        P0.segment(sub_lo, sub_hi - sub_lo) - corr.segment(sub_lo, sub_hi - sub_lo);
    return P;
  };
  auto f = [&](const Vec<S>& y) {
    const Vec<S> P = assemble(y);
    const Vec<S> PHpad = pad_horizontal(g, P);
    Vec<S> d(n + mid_hi);
    d.head(n) = frame_matrix(g, Vec<S>(y.head(n))) * PHpad;
    if (mid_hi > 0) {
      const Vec<S> dP = -(c_full(g, Vec<S>(P.tail(g.v()))) * PHpad);
      d.tail(mid_hi) = dP.head(mid_hi);
    }
    return d;
  };

  Vec<S> y(n + mid_hi);
  y.head(n) = x0;
  if (mid_hi > 0) y.tail(mid_hi) = P0.head(mid_hi);

  GeodesicTrace<S> tr;
  tr.group = g.name;
  tr.integrator = "stepwise";
  tr.step = T / S(n_steps);
  const S dt = T / S(n_steps);
  auto record = [&](S t) {
    tr.times.push_back(t);
    tr.states.push_back(MomentumState<S>{y.head(n), assemble(y)});
  };
  record(S(0));
  for (int i = 0; i < n_steps; ++i) {
    y = detail::rk4_step<S>(f, y, dt);
    if (!detail::finite(y))
      throw Error(Code::NonFiniteState, "state overflow at step " + std::to_string(i));
    record(T * S(i + 1) / S(n_steps));
  }
  detail::fill_diagnostics(g, tr);
  return tr;
}

template <typename S>
struct AbnormalResidual {
  std::vector<S> kernel;      // |C_H(P_V) x_H|
  std::vector<S> vertical;    // |dP_V/dt + (C(P_V) x)_V|
  std::vector<S> horizontal;  // |vertical frame components of dx/dt|
  std::vector<S> momentum;    // |P_H|

  S sup(const std::vector<S>& v) const {
    S m = 0;
    for (S a : v) m = std::max(m, a);
    return m;
  }
  bool consistent(S tol) const {
    return sup(kernel) < tol && sup(vertical) < tol && sup(horizontal) < tol && sup(momentum) < tol;
  }
};

namespace detail {

// central differences, one-sided second order at the ends; step is the local spacing
template <typename S>
std::vector<Vec<S>> time_derivative(const std::vector<S>& t, const std::vector<Vec<S>>& f) {
  const std::size_t N = t.size();
  std::vector<Vec<S>> d(N);
  for (std::size_t i = 0; i < N; ++i) {
    if (i == 0) {
      const S h1 = t[1] - t[0], h2 = t[2] - t[1];
      d[i] = -(S(2) * h1 + h2) / (h1 * (h1 + h2)) * f[0] + (h1 + h2) / (h1 * h2) * f[1] -
             h1 / (h2 * (h1 + h2)) * f[2];
    } else if (i == N - 1) {
      const S h1 = t[N - 2] - t[N - 3], h2 = t[N - 1] - t[N - 2];
      d[i] = h2 / (h1 * (h1 + h2)) * f[N - 3] - (h1 + h2) / (h1 * h2) * f[N - 2] +
             (S(2) * h2 + h1) / (h2 * (h1 + h2)) * f[N - 1];
    } else {
      const S h1 = t[i] - t[i - 1], h2 = t[i + 1] - t[i];
      d[i] = -h2 / (h1 * (h1 + h2)) * f[i - 1] + (h2 - h1) / (h1 * h2) * f[i] +
             h1 / (h2 * (h1 + h2)) * f[i + 1];
    }
  }
  return d;
}

}  // namespace detail

template <typename S>
AbnormalResidual<S> abnormal_residual(const CarnotGroup<S>& g, const GeodesicTrace<S>& tr) {
  if (tr.size() < 3) throw Error(Code::TooFewSamples, "need at least 3 samples");
  const int h = g.h(), v = g.v();
  std::vector<Vec<S>> xs, PVs;
  for (const auto& st : tr.states) {
    xs.push_back(st.x);
    PVs.push_back(st.P.tail(v));
  }
  const auto dx = detail::time_derivative(tr.times, xs);
  const auto dPV = detail::time_derivative(tr.times, PVs);
  AbnormalResidual<S> r;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    const Vec<S>& x = xs[i];
    const Vec<S>& PV = PVs[i];
    r.kernel.push_back((c_horizontal(g, PV) * x.head(h)).norm());
    const Vec<S> cx = c_full(g, PV) * x;
    r.vertical.push_back((dPV[i] + cx.tail(v)).norm());
    const Vec<S> fr = frame_matrix(g, x).partialPivLu().solve(dx[i]);
    r.horizontal.push_back(fr.tail(v).norm());
    r.momentum.push_back(tr.states[i].P.head(h).norm());
  }
  return r;
}

}  // namespace carnot
