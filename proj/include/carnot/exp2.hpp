#pragma once

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "carnot/geodesic.hpp"
#include "carnot/group.hpp"

namespace carnot {

// O^T M O = diag(lambda_j [[0,1],[-1,0]], 0_N); the first 2R columns of O hold the block planes.
template <typename S>
struct SkewCanonicalForm {
  Mat<S> O;
  std::vector<S> lambdas;
  int nullity = 0;

  int blocks() const { return static_cast<int>(lambdas.size()); }
  Mat<S> block_matrix() const {
    const int h = static_cast<int>(O.rows());
    Mat<S> B = Mat<S>::Zero(h, h);
    for (int j = 0; j < blocks(); ++j) {
      B(2 * j, 2 * j + 1) = lambdas[j];
      B(2 * j + 1, 2 * j) = -lambdas[j];
    }
    return B;
  }
};

template <typename S>
SkewCanonicalForm<S> skew_canonical(const Mat<S>& M) {
  const int h = static_cast<int>(M.rows());
  if (M.cols() != h) throw Error(Code::NotSkew, "matrix is not square");
  if (h > 0 && (M + M.transpose()).cwiseAbs().maxCoeff() >= S(1e-12))
    throw Error(Code::NotSkew, "M + M^T is not zero");
  SkewCanonicalForm<S> out;
  out.O = Mat<S>::Zero(h, h);
  if (h == 0) return out;

  const S scale = M.cwiseAbs().maxCoeff();
  if (scale == S(0)) {
    out.O.setIdentity();
    out.nullity = h;
    return out;
  }
  const Mat<S> A = M * M.transpose();
  Eigen::SelfAdjointEigenSolver<Mat<S>> es(S(0.5) * (A + A.transpose()));
  const auto& ev = es.eigenvalues();  // ascending
  const Mat<S>& V = es.eigenvectors();
  const S zero_tol = S(1e-7) * scale;

  std::vector<Vec<S>> used;
  auto orthogonalize = [&](Vec<S> w) {
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& u : used) w -= u.dot(w) * u;
    return w;
  };
  for (int i = h - 1; i >= 0; --i) {
    const S lam = std::sqrt(std::max(ev(i), S(0)));
    if (lam <= zero_tol) break;
    Vec<S> w = orthogonalize(V.col(i));
    const S nw = w.norm();
    if (nw < S(0.5)) continue;
    const Vec<S> o1 = w / nw;
    Vec<S> o2 = orthogonalize(Vec<S>(-(M * o1)));
    const S n2 = o2.norm();
    if (n2 <= zero_tol) continue;
    o2 /= n2;
    used.push_back(o1);
    used.push_back(o2);
    out.lambdas.push_back(o1.dot(M * o2));
  }
  const int R = static_cast<int>(out.lambdas.size());
  for (int i = 0; i < h && static_cast<int>(used.size()) < h; ++i) {
    Vec<S> w = orthogonalize(V.col(i));
    const S nw = w.norm();
    if (nw < S(0.5)) continue;
    used.push_back(w / nw);
  }
  for (int c = 0; c < h; ++c) out.O.col(c) = used[c];
  out.nullity = h - 2 * R;

  // sort blocks by descending frequency
  std::vector<int> idx(R);
  for (int j = 0; j < R; ++j) idx[j] = j;
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return out.lambdas[a] > out.lambdas[b]; });
  Mat<S> O2 = out.O;
  std::vector<S> l2(R);
  for (int j = 0; j < R; ++j) {
    O2.col(2 * j) = out.O.col(2 * idx[j]);
    O2.col(2 * j + 1) = out.O.col(2 * idx[j] + 1);
    l2[j] = out.lambdas[idx[j]];
  }
  out.O = O2;
  out.lambdas = l2;
  return out;
}

template <typename S>
Mat<S> exp_matrix(const SkewCanonicalForm<S>& cf, S t) {
  const int h = static_cast<int>(cf.O.rows());
  Mat<S> E = Mat<S>::Identity(h, h);
  for (int j = 0; j < cf.blocks(); ++j) {
    const S c = std::cos(cf.lambdas[j] * t), s = std::sin(cf.lambdas[j] * t);
    E(2 * j, 2 * j) = c;
    E(2 * j, 2 * j + 1) = s;
    E(2 * j + 1, 2 * j) = -s;
    E(2 * j + 1, 2 * j + 1) = c;
  }
  return cf.O * E * cf.O.transpose();
}

// e^{M t} for skew M
template <typename S>
Mat<S> exp_matrix(const Mat<S>& M, S t) {
  return exp_matrix(skew_canonical(M), t);
}

namespace detail {

// c * s^p * cos(w s) or c * s^p * sin(w s)
template <typename S>
struct TrigTerm {
  S c;
  int p;
  bool is_sin;
  S w;
};

template <typename S>
using TrigPoly = std::vector<TrigTerm<S>>;

// integral over [0, t] of s^p cos(w s) / s^p sin(w s)
template <typename S>
S trig_integral(int p, bool is_sin, S w, S t) {
  S tp1 = t;  // t^(p+1)
  for (int k = 0; k < p; ++k) tp1 *= t;
  if (w == S(0)) return is_sin ? S(0) : tp1 / S(p + 1);
  const S z = w * t;
  if (std::abs(z) < S(4)) {
    // power series in z: sum over m of the parity of the integrand
    const S z2 = z * z;
    int m = is_sin ? 1 : 0;
    S coef = is_sin ? z : S(1);  // (-1)^(m/2) z^m / m!
    S sum = 0;
    for (; m < 60; m += 2) {
      const S term = coef / S(m + p + 1);
      sum += term;
      if (m > 8 && std::abs(term) < S(1e-18) * (std::abs(sum) + S(1e-300))) break;
      coef *= -z2 / (S(m + 1) * S(m + 2));
    }
    return sum * tp1;
  }
  const S c = std::cos(z), s = std::sin(z);
  const S hs = std::sin(S(0.5) * z);
  S ic = s / w, is = S(2) * hs * hs / w;
  S tp = 1;
  for (int k = 1; k <= p; ++k) {
    tp *= t;
    const S nc = tp * s / w - S(k) / w * is;
    const S ns = -tp * c / w + S(k) / w * ic;
    ic = nc;
    is = ns;
  }
  return is_sin ? is : ic;
}

template <typename S>
S integrate_poly(const TrigPoly<S>& f, S t) {
  S sum = 0;
  for (const auto& a : f) sum += a.c * trig_integral(a.p, a.is_sin, a.w, t);
  return sum;
}

template <typename S>
S integrate_product(const TrigPoly<S>& f, const TrigPoly<S>& g, S t) {
  S sum = 0;
  for (const auto& a : f)
    for (const auto& b : g) {
      const int p = a.p + b.p;
      const S c = S(0.5) * a.c * b.c;
      if (c == S(0)) continue;
      const S wm = a.w - b.w, wp = a.w + b.w;
      if (!a.is_sin && !b.is_sin) {
        sum += c * (trig_integral(p, false, wm, t) + trig_integral(p, false, wp, t));
      } else if (a.is_sin && b.is_sin) {
        sum += c * (trig_integral(p, false, wm, t) - trig_integral(p, false, wp, t));
      } else if (a.is_sin && !b.is_sin) {
        sum += c * (trig_integral(p, true, wp, t) + trig_integral(p, true, wm, t));
      } else {
        sum += c * (trig_integral(p, true, wp, t) - trig_integral(p, true, wm, t));
      }
    }
  return sum;
}

// Canonical-basis components q(s) = e^{-B s} q0 and w(s) = int_0^s q on [0, t].
template <typename S>
void canonical_paths(const SkewCanonicalForm<S>& cf, const Vec<S>& q0, S t, std::vector<TrigPoly<S>>& q,
                     std::vector<TrigPoly<S>>& w) {
  const int h = static_cast<int>(q0.size());
  q.assign(h, {});
  w.assign(h, {});
  for (int j = 0; j < cf.blocks(); ++j) {
    const S l = cf.lambdas[j];
    const S a = q0(2 * j), b = q0(2 * j + 1);
    q[2 * j] = {{a, 0, false, l}, {-b, 0, true, l}};
    q[2 * j + 1] = {{a, 0, true, l}, {b, 0, false, l}};
    if (std::abs(l * t) < S(1e-2)) {
      // slow block: sin(ls)/l and (1 - cos ls)/l as polynomials, avoiding the 1/l split
      TrigPoly<S> sn, vs;
      S coef = 1;
      for (int m = 0; m < 4; ++m) {
        const S fs = coef / std::tgamma(S(2 * m + 2));
        const S fv = coef * l / std::tgamma(S(2 * m + 3));
        sn.push_back({fs, 2 * m + 1, false, S(0)});
        vs.push_back({fv, 2 * m + 2, false, S(0)});
        coef *= -l * l;
      }
      for (const auto& e : sn) {
        w[2 * j].push_back({a * e.c, e.p, false, S(0)});
        w[2 * j + 1].push_back({b * e.c, e.p, false, S(0)});
      }
      for (const auto& e : vs) {
        w[2 * j].push_back({-b * e.c, e.p, false, S(0)});
        w[2 * j + 1].push_back({a * e.c, e.p, false, S(0)});
      }
      continue;
    }
    // int cos = sin/l, int sin = (1 - cos)/l
    w[2 * j] = {{a / l, 0, true, l}, {-b / l, 0, false, S(0)}, {b / l, 0, false, l}};
    w[2 * j + 1] = {{a / l, 0, false, S(0)}, {-a / l, 0, false, l}, {b / l, 0, true, l}};
  }
  for (int a = 2 * cf.blocks(); a < h; ++a) {
    q[a] = {{q0(a), 0, false, S(0)}};
    w[a] = {{q0(a), 1, false, S(0)}};
  }
}

template <typename S>
S eval_poly(const TrigPoly<S>& f, S s) {
  S v = 0;
  for (const auto& a : f) v += a.c * std::pow(s, a.p) * (a.is_sin ? std::sin(a.w * s) : std::cos(a.w * s));
  return v;
}

}  // namespace detail

template <typename S>
struct ExpState {
  Vec<S> x;
  Vec<S> P;
};

template <typename S>
ExpState<S> exp_state_2step(const CarnotGroup<S>& g, const Vec<S>& x0, const Vec<S>& P0, S t,
                            const SkewCanonicalForm<S>* cached = nullptr) {
  if (g.step() != 2) throw Error(Code::WrongStep, "closed-form exponential requires a 2-step group");
  if (x0.size() != g.n() || P0.size() != g.n())
    throw Error(Code::DimensionMismatch, "x0 and P0 must have n components");
  const int h = g.h(), v = g.v();
  SkewCanonicalForm<S> local;
  if (!cached) local = skew_canonical(c_horizontal(g, Vec<S>(P0.tail(v))));
  const SkewCanonicalForm<S>& cf = cached ? *cached : local;
  const Vec<S> q0 = cf.O.transpose() * P0.head(h);
  const Vec<S> z0 = cf.O.transpose() * x0.head(h);

  std::vector<detail::TrigPoly<S>> q, w;
  detail::canonical_paths(cf, q0, t, q, w);
  Vec<S> wt(h), qt(h);
  for (int a = 0; a < h; ++a) {
    wt(a) = detail::integrate_poly(q[a], t);
    qt(a) = detail::eval_poly(q[a], t);
  }

  ExpState<S> out;
  out.x = x0;
  out.x.head(h) += cf.O * wt;
  // K(a, b) = int_0^t q_a w_b
  Mat<S> K(h, h);
  for (int a = 0; a < h; ++a)
    for (int b = 0; b < h; ++b) K(a, b) = detail::integrate_product(q[a], w[b], t);
  for (int al = 0; al < v; ++al) {
    const Mat<S> D = cf.O.transpose() * g.CH[al] * cf.O;
    // I = int xdot_H^T C x_H = w(t)^T D z0 + sum D_ab K_ab
    const S I = wt.dot(D * z0) + (D.array() * K.array()).sum();
    out.x(h + al) -= S(0.5) * I;
  }
  out.P = P0;
  out.P.head(h) = cf.O * qt;
  return out;
}

template <typename S>
Vec<S> exp_sr_2step(const CarnotGroup<S>& g, const Vec<S>& x0, const Vec<S>& P0, S t) {
  return exp_state_2step(g, x0, P0, t).x;
}

// I^alpha = int <C^alpha_H x_H, xdot_H> along the closed-form path from x_H0 with momentum P0
template <typename S>
S vertical_increment(const CarnotGroup<S>& g, int alpha, const Vec<S>& xH0, const Vec<S>& P0, S t) {
  if (g.step() != 2) throw Error(Code::WrongStep, "closed-form increments require a 2-step group");
  Vec<S> x0 = Vec<S>::Zero(g.n());
  x0.head(g.h()) = xH0;
  const Vec<S> x = exp_sr_2step(g, x0, P0, t);
  return -S(2) * x(g.h() + alpha);
}

// Sampled path; composite Simpson on uniform odd-length grids, trapezoid otherwise.
template <typename S>
S vertical_increment(const CarnotGroup<S>& g, int alpha, const std::vector<S>& times,
                     const std::vector<Vec<S>>& xH, const std::vector<Vec<S>>& xHdot) {
  const std::size_t N = times.size();
  if (N < 2 || xH.size() != N || xHdot.size() != N)
    throw Error(Code::TooFewSamples, "path needs matching samples");
  const Mat<S>& C = g.CH.at(alpha);
  std::vector<S> f(N);
  for (std::size_t i = 0; i < N; ++i) f[i] = xHdot[i].dot(C * xH[i]);
  bool uniform = true;
  const S dt = times[1] - times[0];
  for (std::size_t i = 1; i < N; ++i)
    if (std::abs((times[i] - times[i - 1]) - dt) > S(1e-9) * std::abs(dt)) uniform = false;
  if (uniform && N % 2 == 1 && N >= 3) {
    S s = f[0] + f[N - 1];
    for (std::size_t i = 1; i + 1 < N; ++i) s += (i % 2 ? S(4) : S(2)) * f[i];
    return s * dt / S(3);
  }
  S s = 0;
  for (std::size_t i = 1; i < N; ++i) s += S(0.5) * (f[i] + f[i - 1]) * (times[i] - times[i - 1]);
  return s;
}

template <typename S>
std::vector<S> vertical_increment(const CarnotGroup<S>& g, int alpha, const GeodesicTrace<S>& tr) {
  std::vector<Vec<S>> xH, xHd;
  for (const auto& st : tr.states) {
    xH.push_back(st.x.head(g.h()));
    xHd.push_back(st.P.head(g.h()));
  }
  return {vertical_increment(g, alpha, tr.times, xH, xHd)};
}

template <typename S>
struct PeriodicityReport {
  S T = 0;
  int rank_defect = 0;  // k
  int nullity = 0;      // N
  int nonconstant_dim = 0;
  std::vector<S> minimal_periods;
  std::vector<S> singular_values;
};

template <typename S>
std::vector<S> minimal_periods(const CarnotGroup<S>& g, const Vec<S>& PH2) {
  if (g.step() != 2) throw Error(Code::WrongStep, "periodicity analysis requires a 2-step group");
  if (PH2.norm() == S(0)) throw Error(Code::ZeroCovector, "P_H2 must be nonzero");
  const auto cf = skew_canonical(c_horizontal(g, PH2));
  std::vector<S> out;
  for (S l : cf.lambdas) {
    const S T = S(2) * std::numbers::pi_v<S> / l;
    bool dup = false;
    for (S u : out)
      if (std::abs(u - T) <= S(1e-12) * T) dup = true;
    if (!dup) out.push_back(T);
  }
  std::sort(out.begin(), out.end());
  return out;
}

template <typename S>
PeriodicityReport<S> periodicity(const CarnotGroup<S>& g, const Vec<S>& PH2, S T, S sv_tol = S(1e-8)) {
  if (g.step() != 2) throw Error(Code::WrongStep, "periodicity analysis requires a 2-step group");
  const int h = g.h();
  const auto cf = skew_canonical(c_horizontal(g, PH2));
  const Mat<S> E = exp_matrix(cf, -T) - Mat<S>::Identity(h, h);
  Eigen::JacobiSVD<Mat<S>> svd(E);
  PeriodicityReport<S> r;
  r.T = T;
  for (int i = 0; i < svd.singularValues().size(); ++i) {
    r.singular_values.push_back(svd.singularValues()(i));
    if (svd.singularValues()(i) <= sv_tol) ++r.rank_defect;
  }
  r.nullity = cf.nullity;
  r.nonconstant_dim = r.rank_defect - r.nullity;
  if (PH2.norm() > S(0)) r.minimal_periods = minimal_periods(g, PH2);
  return r;
}

}  // namespace carnot
