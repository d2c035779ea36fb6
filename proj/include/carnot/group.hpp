#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "carnot/errors.hpp"

namespace carnot {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

struct GrowthVector {
  std::vector<int> dims;

  GrowthVector() = default;
  explicit GrowthVector(std::vector<int> d) : dims(std::move(d)) {
    if (dims.empty()) throw Error(Code::InvalidArgument, "growth vector must have at least one layer");
    for (int h : dims)
      if (h < 1) throw Error(Code::InvalidArgument, "layer dimensions must be positive");
  }

  int step() const { return static_cast<int>(dims.size()); }
  int n() const { return std::accumulate(dims.begin(), dims.end(), 0); }
  int h() const { return dims.front(); }
  int v() const { return n() - h(); }
  // n_i for i = 0..k, with n_0 = 0
  int offset(int layer) const {
    int s = 0;
    for (int i = 0; i < layer; ++i) s += dims[i];
    return s;
  }
  int Q() const {
    int q = 0;
    for (int i = 0; i < step(); ++i) q += (i + 1) * dims[i];
    return q;
  }
  // layer (1-based) of the 0-based coordinate index
  int ord(int index) const {
    int s = 0;
    for (int i = 0; i < step(); ++i) {
      s += dims[i];
      if (index < s) return i + 1;
    }
    throw Error(Code::InvalidArgument, "index out of range");
  }
};

// C[R](I, J) = <[X_I, X_J], X_R>, all indices 0-based.
template <typename S>
struct StructureTensor {
  GrowthVector growth;
  std::vector<Mat<S>> C;

  StructureTensor() = default;
  explicit StructureTensor(GrowthVector g) : growth(std::move(g)) {
    const int n = growth.n();
    C.assign(n, Mat<S>::Zero(n, n));
  }

  // sets C^R_{IJ} = value and C^R_{JI} = -value (1-based indices)
  void set_bracket(int R, int I, int J, S value) {
    C[R - 1](I - 1, J - 1) = value;
    C[R - 1](J - 1, I - 1) = -value;
  }
};

template <typename S>
struct CarnotGroup {
  std::string name;
  StructureTensor<S> tensor;
  std::vector<Mat<S>> CH;  // h x h blocks, one per alpha in the second layer

  int n() const { return tensor.growth.n(); }
  int h() const { return tensor.growth.h(); }
  int v() const { return tensor.growth.v(); }
  int step() const { return tensor.growth.step(); }
  int Q() const { return tensor.growth.Q(); }
  const Mat<S>& C(int R) const { return tensor.C[R]; }
};

namespace detail {

inline std::string triple(int a, int b, int c) {
  std::ostringstream os;
  os << "(" << a + 1 << "," << b + 1 << "," << c + 1 << ")";
  return os.str();
}

template <typename S>
int numeric_rank(const Mat<S>& M, S rel_tol) {
  if (M.size() == 0) return 0;
  Eigen::JacobiSVD<Mat<S>> svd(M);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == S(0)) return 0;
  int r = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > rel_tol * sv(0)) ++r;
  return r;
}

}  // namespace detail

template <typename S>
CarnotGroup<S> build_group(StructureTensor<S> tensor, std::string name = "custom") {
  const GrowthVector gv = tensor.growth;
  const int n = gv.n();
  if (static_cast<int>(tensor.C.size()) != n)
    throw Error(Code::DimensionMismatch, "tensor has " + std::to_string(tensor.C.size()) +
                                             " slices, growth vector needs " + std::to_string(n));
  for (const auto& M : tensor.C)
    if (M.rows() != n || M.cols() != n)
      throw Error(Code::DimensionMismatch, "tensor slice is not n x n");

  for (int R = 0; R < n; ++R)
    for (int I = 0; I < n; ++I)
      for (int J = 0; J < n; ++J)
        if (tensor.C[R](I, J) + tensor.C[R](J, I) != S(0))
          throw Error(Code::SkewViolation, "entry (R,I,J) = " + detail::triple(R, I, J));

  const int k = gv.step();
  for (int R = 0; R < n; ++R)
    for (int I = 0; I < n; ++I)
      for (int J = 0; J < n; ++J) {
        if (tensor.C[R](I, J) == S(0)) continue;
        const int s = gv.ord(I) + gv.ord(J);
        if (s > k || gv.ord(R) != s)
          throw Error(Code::GradingViolation, "entry (R,I,J) = " + detail::triple(R, I, J));
      }

  // [[X_R,X_M],X_L] + [[X_L,X_R],X_M] + [[X_M,X_L],X_R] = 0, component I
  for (int I = 0; I < n; ++I)
    for (int L = 0; L < n; ++L)
      for (int R = 0; R < n; ++R)
        for (int M = 0; M < n; ++M) {
          S sum = 0;
          for (int J = 0; J < n; ++J)
            sum += tensor.C[I](J, L) * tensor.C[J](R, M) + tensor.C[I](J, M) * tensor.C[J](L, R) +
                   tensor.C[I](J, R) * tensor.C[J](M, L);
          if (std::abs(sum) > S(1e-12))
            throw Error(Code::JacobiViolation, "fields " + detail::triple(L, R, M));
        }

  for (int layer = 2; layer <= k; ++layer) {
    const int lo = gv.offset(layer - 1), hi = lo + gv.dims[layer - 1];
    const int plo = gv.offset(layer - 2), phi = plo + gv.dims[layer - 2];
    Mat<S> span(hi - lo, gv.h() * (phi - plo));
    int col = 0;
    for (int a = 0; a < gv.h(); ++a)
      for (int b = plo; b < phi; ++b, ++col)
        for (int R = lo; R < hi; ++R) span(R - lo, col) = tensor.C[R](a, b);
    if (detail::numeric_rank<S>(span, S(1e-10)) < hi - lo)
      throw Error(Code::NotGenerating, "brackets of layer 1 with layer " + std::to_string(layer - 1) +
                                           " do not span layer " + std::to_string(layer));
  }

  CarnotGroup<S> g;
  g.name = std::move(name);
  g.tensor = std::move(tensor);
  if (k >= 2) {
    const int h = gv.h();
    for (int a = h; a < gv.offset(2); ++a) g.CH.push_back(g.tensor.C[a].topLeftCorner(h, h));
  }
  return g;
}

// [U, V]_R = sum_{I,J} C^R_{IJ} U_I V_J
template <typename S>
Vec<S> bracket(const CarnotGroup<S>& g, const Vec<S>& U, const Vec<S>& V) {
  Vec<S> out(g.n());
  for (int R = 0; R < g.n(); ++R) out(R) = U.dot(g.C(R) * V);
  return out;
}

// matrix of V -> [x, V]
template <typename S>
Mat<S> ad_matrix(const CarnotGroup<S>& g, const Vec<S>& x) {
  Mat<S> A(g.n(), g.n());
  for (int R = 0; R < g.n(); ++R) A.row(R) = (g.C(R).transpose() * x).transpose();
  return A;
}

// Left-invariant frame for any step: psi(ad_x) with psi(z) = z / (1 - e^{-z}).
template <typename S>
Mat<S> frame_matrix(const CarnotGroup<S>& g, const Vec<S>& x) {
  static const double coeff[] = {1.0,           0.5, 1.0 / 12.0,      0.0, -1.0 / 720.0, 0.0,
                                 1.0 / 30240.0, 0.0, -1.0 / 1209600.0, 0.0, 1.0 / 47900160.0};
  const int n = g.n();
  const int k = g.step();
  if (k > 11) throw Error(Code::UnsupportedStep, "frame series implemented up to step 11");
  Mat<S> L = Mat<S>::Identity(n, n);
  if (k == 1) return L;
  const Mat<S> A = ad_matrix(g, x);
  Mat<S> P = Mat<S>::Identity(n, n);
  for (int m = 1; m < k; ++m) {
    P = P * A;
    if (coeff[m] != 0.0) L += S(coeff[m]) * P;
  }
  return L;
}

template <typename S>
Mat<S> left_frame(const CarnotGroup<S>& g, const Vec<S>& x) {
  if (g.step() > 3) throw Error(Code::UnsupportedStep, "closed-form frame available for step <= 3");
  return frame_matrix(g, x);
}

template <typename S>
Vec<S> group_product(const CarnotGroup<S>& g, const Vec<S>& x, const Vec<S>& y) {
  if (g.step() > 3) throw Error(Code::UnsupportedStep, "closed-form group law available for step <= 3");
  Vec<S> out = x + y;
  if (g.step() == 1) return out;
  const Vec<S> b = bracket(g, x, y);
  out += S(0.5) * b;
  if (g.step() == 3) {
    const Vec<S> d = x - y;
    out += bracket(g, d, b) / S(12);
  }
  return out;
}

template <typename S>
Vec<S> group_inverse(const CarnotGroup<S>&, const Vec<S>& x) {
  return -x;
}

template <typename S>
Vec<S> dilate(const CarnotGroup<S>& g, S t, const Vec<S>& x) {
  if (!(t > S(0))) throw Error(Code::NonPositiveScale, "dilation factor must be positive");
  Vec<S> out = x;
  for (int I = 0; I < g.n(); ++I) out(I) *= std::pow(t, g.tensor.growth.ord(I));
  return out;
}

template <typename S>
struct COperator {
  Mat<S> full;  // n x n, sum over all vertical alpha
  Mat<S> H;     // h x h, sum over the second layer only
};

// Z holds the v vertical components (alpha = h..n-1).
template <typename S>
COperator<S> c_operator(const CarnotGroup<S>& g, const Vec<S>& Z) {
  const int n = g.n(), h = g.h();
  if (Z.size() != g.v()) throw Error(Code::DimensionMismatch, "vertical covector has wrong size");
  COperator<S> out{Mat<S>::Zero(n, n), Mat<S>::Zero(h, h)};
  for (int a = 0; a < g.v(); ++a) {
    if (Z(a) == S(0)) continue;
    out.full += Z(a) * g.C(h + a);
  }
  for (std::size_t a = 0; a < g.CH.size(); ++a)
    if (Z(a) != S(0)) out.H += Z(a) * g.CH[a];
  return out;
}

template <typename S>
Mat<S> c_full(const CarnotGroup<S>& g, const Vec<S>& Z) {
  Mat<S> M = Mat<S>::Zero(g.n(), g.n());
  for (int a = 0; a < g.v(); ++a)
    if (Z(a) != S(0)) M += Z(a) * g.C(g.h() + a);
  return M;
}

template <typename S>
Mat<S> c_horizontal(const CarnotGroup<S>& g, const Vec<S>& Z) {
  Mat<S> M = Mat<S>::Zero(g.h(), g.h());
  for (std::size_t a = 0; a < g.CH.size(); ++a)
    if (Z(a) != S(0)) M += Z(a) * g.CH[a];
  return M;
}

template <typename S = double>
CarnotGroup<S> heisenberg(int n) {
  if (n < 1) throw Error(Code::InvalidArgument, "Heisenberg dimension must be >= 1");
  StructureTensor<S> t(GrowthVector({2 * n, 1}));
  for (int i = 1; i <= n; ++i) t.set_bracket(2 * n + 1, 2 * i - 1, 2 * i, S(1));
  return build_group(std::move(t), n == 1 ? "h1" : "hn(" + std::to_string(n) + ")");
}

template <typename S = double>
CarnotGroup<S> engel() {
  StructureTensor<S> t(GrowthVector({2, 1, 1}));
  t.set_bracket(3, 1, 2, S(1));
  t.set_bracket(4, 1, 3, S(1));
  return build_group(std::move(t), "engel");
}

}  // namespace carnot
