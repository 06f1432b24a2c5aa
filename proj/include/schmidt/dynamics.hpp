#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/multiprecision/eigen.hpp>

#include "error.hpp"
#include "real.hpp"

namespace schmidt {

template <class Real>
using Mat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
template <class Real>
using Vec = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

struct ToralModel {
  std::string name;
  int n = 0;
  int u = 0;
  std::vector<std::int64_t> matrix;  // row-major
  bool invertible = true;
  Eigen::MatrixXd unstable_basis;    // n x u, orthonormal columns
  Eigen::MatrixXd complement_basis;  // n x (n-u), orthonormal columns
  Eigen::MatrixXd unstable_action;   // u x u
  double sigma1 = 1;
  double sigma2 = 1;
  std::vector<std::complex<double>> eigenvalues;

  Eigen::MatrixXd dense() const {
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) m(i, j) = static_cast<double>(matrix[i * n + j]);
    return m;
  }
};

namespace detail {

inline Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& a) {
  if (a.cols() == 0) return a;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(a.rows(), a.cols());
  // Keep orientation of the input columns.
  for (int j = 0; j < q.cols(); ++j)
    if (q.col(j).dot(a.col(j)) < 0) q.col(j) = -q.col(j);
  return q;
}

inline std::int64_t integer_det(const std::vector<std::int64_t>& m, int n) {
  // Bareiss elimination, exact for the small sizes used here.
  std::vector<__int128> a(m.begin(), m.end());
  __int128 prev = 1;
  int sign = 1;
  for (int k = 0; k < n - 1; ++k) {
    if (a[k * n + k] == 0) {
      int swap = -1;
      for (int i = k + 1; i < n; ++i)
        if (a[i * n + k] != 0) swap = i;
      if (swap < 0) return 0;
      for (int j = 0; j < n; ++j) std::swap(a[k * n + j], a[swap * n + j]);
      sign = -sign;
    }
    for (int i = k + 1; i < n; ++i)
      for (int j = k + 1; j < n; ++j)
        a[i * n + j] = (a[i * n + j] * a[k * n + k] - a[i * n + k] * a[k * n + j]) / prev;
    prev = a[k * n + k];
  }
  return static_cast<std::int64_t>(sign * a[n * n - 1]);
}

}  // namespace detail

inline ToralModel eigen_split(const std::vector<std::int64_t>& matrix, int n, std::string name = "matrix") {
  if (n <= 0 || static_cast<int>(matrix.size()) != n * n) fail(ErrorCode::InvalidParams, "matrix must be n x n");
  const std::int64_t det = detail::integer_det(matrix, n);
  if (det != 1 && det != -1) fail(ErrorCode::NotUnimodular, "|det| = " + std::to_string(det < 0 ? -det : det));

  ToralModel m;
  m.name = std::move(name);
  m.n = n;
  m.matrix = matrix;
  const Eigen::MatrixXd a = m.dense();
  Eigen::EigenSolver<Eigen::MatrixXd> es(a);
  const auto vals = es.eigenvalues();
  const auto vecs = es.eigenvectors();
  const double eps = 1e-9;

  std::vector<Eigen::VectorXd> unstable, other;
  double smin = 1e300, smax = 0;
  for (int i = 0; i < n; ++i) {
    const std::complex<double> ev = vals(i);
    m.eigenvalues.push_back(ev);
    const double mod = std::abs(ev);
    auto& bucket = mod > 1 + eps ? unstable : other;
    if (mod > 1 + eps) {
      smin = std::min(smin, mod);
      smax = std::max(smax, mod);
    }
    if (std::abs(ev.imag()) <= eps * std::max(1.0, mod)) {
      bucket.push_back(vecs.col(i).real());
    } else if (ev.imag() > 0) {
      bucket.push_back(vecs.col(i).real());
      bucket.push_back(vecs.col(i).imag());
    }
  }
  if (unstable.empty()) fail(ErrorCode::NotHyperbolic, "no eigenvalue of modulus > 1");
  std::sort(m.eigenvalues.begin(), m.eigenvalues.end(),
            [](auto x, auto y) { return std::abs(x) > std::abs(y); });

  m.u = static_cast<int>(unstable.size());
  Eigen::MatrixXd bu(n, m.u), bc(n, n - m.u);
  for (int j = 0; j < m.u; ++j) bu.col(j) = unstable[j];
  for (int j = 0; j < n - m.u; ++j) bc.col(j) = other[j];
  m.unstable_basis = detail::orthonormalize(bu);
  m.complement_basis = detail::orthonormalize(bc);
  m.unstable_action = m.unstable_basis.transpose() * a * m.unstable_basis;

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m.unstable_action);
  const auto sv = svd.singularValues();
  m.sigma1 = std::min(smin, sv.minCoeff());
  m.sigma2 = std::max(smax, sv.maxCoeff());
  if (m.sigma1 <= 1 + eps) fail(ErrorCode::NotUniformlyExpanding, "unstable action is not expanding in one step");
  return m;
}

inline ToralModel circle_expanding(int d) {
  if (d < 2) fail(ErrorCode::InvalidParams, "circle map degree must be >= 2");
  ToralModel m;
  m.name = "x" + std::to_string(d);
  m.n = 1;
  m.u = 1;
  m.matrix = {d};
  m.invertible = false;
  m.unstable_basis = Eigen::MatrixXd::Ones(1, 1);
  m.complement_basis = Eigen::MatrixXd(1, 0);
  m.unstable_action = Eigen::MatrixXd::Constant(1, 1, d);
  m.sigma1 = m.sigma2 = d;
  m.eigenvalues = {std::complex<double>(d, 0)};
  return m;
}

inline ToralModel preset(const std::string& name) {
  if (name == "cat2") return eigen_split({2, 1, 1, 1}, 2, "cat2");
  if (name == "cat4_nonconformal") {
    // block-diag(A, A^2)
    return eigen_split({2, 1, 0, 0, 1, 1, 0, 0, 0, 0, 5, 3, 0, 0, 3, 2}, 4, "cat4_nonconformal");
  }
  if (name == "doubling") {
    auto m = circle_expanding(2);
    m.name = "doubling";
    return m;
  }
  fail(ErrorCode::InvalidParams, "unknown preset '" + name + "'");
}

// Frame of the model in working precision; eigenpairs refined by Newton from the double solution.
template <class Real>
struct LeafFrame {
  int n = 0;
  int u = 0;
  Mat<Real> bu;    // n x u
  Mat<Real> f;     // [bu | bc]
  Mat<Real> finv;  // f^{-1}
  Mat<Real> l;     // u x u
  Mat<Real> linv;
  Real sigma1, sigma2;
  double log_sigma1 = 0;

  std::vector<Mat<Real>> table;  // L^k for |k| < kTable, index k + kTable

  static constexpr long kTable = 320;

  // L^k, k of either sign.
  Mat<Real> power(long k) const {
    if (!table.empty() && k > -kTable && k < kTable) return table[k + kTable];
    return power_uncached(k);
  }

  Mat<Real> power_uncached(long k) const {
    const Mat<Real>& base = k >= 0 ? l : linv;
    long e = k >= 0 ? k : -k;
    Mat<Real> acc = Mat<Real>::Identity(u, u);
    Mat<Real> b = base;
    while (e > 0) {
      if (e & 1) acc = acc * b;
      b = b * b;
      e >>= 1;
    }
    return acc;
  }

  void tabulate() {
    table.clear();
    for (long k = -kTable; k < kTable; ++k) table.push_back(power_uncached(k));
  }

  // Scalar expansion for one-dimensional leaves.
  Real lambda_power(long k) const { return ipow(l(0, 0), k); }
};

namespace detail {

template <class Real>
void refine_eigenpair(const Mat<Real>& a, Real& lambda, Vec<Real>& v) {
  using std::abs;
  const int n = static_cast<int>(a.rows());
  int pivot = 0;
  for (int i = 1; i < n; ++i)
    if (abs(v(i)) > abs(v(pivot))) pivot = i;
  v /= v(pivot);
  for (int it = 0; it < 60; ++it) {
    Mat<Real> j = Mat<Real>::Zero(n + 1, n + 1);
    Vec<Real> r(n + 1);
    j.topLeftCorner(n, n) = a - lambda * Mat<Real>::Identity(n, n);
    j.block(0, n, n, 1) = -v;
    j(n, pivot) = 1;
    r.head(n) = (a - lambda * Mat<Real>::Identity(n, n)) * v;
    r(n) = v(pivot) - 1;
    Vec<Real> d = j.fullPivLu().solve(r);
    v -= d.head(n);
    lambda -= d(n);
    Real nd = d.cwiseAbs().maxCoeff();
    if (nd == 0 || nd < std::numeric_limits<Real>::epsilon() * 4) break;
  }
}

template <class Real>
Mat<Real> gram_schmidt(const std::vector<Vec<Real>>& cols, int n) {
  Mat<Real> q(n, static_cast<int>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    Vec<Real> v = cols[j];
    for (std::size_t i = 0; i < j; ++i) v -= q.col(i).dot(v) * q.col(i);
    using std::sqrt;
    v /= sqrt(v.dot(v));
    q.col(j) = v;
  }
  return q;
}

}  // namespace detail

template <class Real>
LeafFrame<Real> make_frame(const ToralModel& m) {
  LeafFrame<Real> fr;
  fr.n = m.n;
  fr.u = m.u;
  fr.log_sigma1 = std::log(m.sigma1);
  Mat<Real> a(m.n, m.n);
  for (int i = 0; i < m.n; ++i)
    for (int j = 0; j < m.n; ++j) a(i, j) = Real(m.matrix[i * m.n + j]);

  if (!m.invertible) {
    fr.bu = Mat<Real>::Identity(1, 1);
    fr.f = fr.bu;
    fr.finv = fr.bu;
    fr.l = a;
  } else if constexpr (std::is_same_v<Real, double>) {
    fr.bu = m.unstable_basis;
    fr.f.resize(m.n, m.n);
    fr.f << m.unstable_basis, m.complement_basis;
    fr.finv = fr.f.inverse();
    fr.l = m.unstable_action;
  } else {
    Eigen::EigenSolver<Eigen::MatrixXd> es(m.dense());
    std::vector<Vec<Real>> unstable, other;
    for (int i = 0; i < m.n; ++i) {
      auto ev = es.eigenvalues()(i);
      if (std::abs(ev.imag()) > 1e-9 * std::max(1.0, std::abs(ev)))
        fail(ErrorCode::Unsupported, "extended precision frames need real eigenvalues");
      Real lambda(ev.real());
      Vec<Real> v(m.n);
      for (int k = 0; k < m.n; ++k) v(k) = Real(es.eigenvectors()(k, i).real());
      detail::refine_eigenpair(a, lambda, v);
      (std::abs(ev) > 1 + 1e-9 ? unstable : other).push_back(v);
    }
    // Match the column order and orientation of the double frame.
    auto order = [&](std::vector<Vec<Real>>& cols, const Eigen::MatrixXd& ref) {
      std::vector<Vec<Real>> sorted;
      for (auto& c : cols) sorted.push_back(c);
      Mat<Real> q = detail::gram_schmidt(sorted, m.n);
      for (int j = 0; j < q.cols() && j < ref.cols(); ++j) {
        double s = 0;
        for (int k = 0; k < m.n; ++k) s += static_cast<double>(q(k, j)) * ref(k, j);
        if (s < 0) q.col(j) = -q.col(j);
      }
      return q;
    };
    fr.bu = order(unstable, m.unstable_basis);
    Mat<Real> bc = order(other, m.complement_basis);
    fr.f.resize(m.n, m.n);
    fr.f << fr.bu, bc;
    fr.finv = fr.f.fullPivLu().inverse();
    fr.l = fr.bu.transpose() * a * fr.bu;
  }
  fr.linv = fr.l.inverse();
  fr.sigma1 = Real(m.sigma1);
  fr.sigma2 = Real(m.sigma2);
  if (m.u == 1) {
    using std::abs;
    fr.sigma1 = fr.sigma2 = abs(fr.l(0, 0));
  }
  fr.tabulate();
  return fr;
}

// Point of the unstable leaf through a rational base point, in the orthonormal unstable frame.
template <class Real>
struct LeafPoint {
  RationalPoint base;
  std::vector<Real> w;
};

inline RationalPoint orbit_point(const ToralModel& m, RationalPoint x, long k) {
  for (long i = 0; i < k; ++i) x = apply_matrix(m.matrix, x);
  return x;
}

template <class Real>
LeafPoint<Real> leaf_forward(const ToralModel& m, const LeafFrame<Real>& fr, const LeafPoint<Real>& p, long k) {
  if (k < 0) fail(ErrorCode::Precondition, "leaf_forward needs k >= 0");
  LeafPoint<Real> q;
  q.base = orbit_point(m, p.base, k);
  Vec<Real> w(fr.u);
  for (int i = 0; i < fr.u; ++i) w(i) = p.w[i];
  Vec<Real> lw = fr.power(k) * w;
  q.w.assign(lw.data(), lw.data() + fr.u);
  return q;
}

template <class Real>
std::vector<Real> torus_position(const LeafFrame<Real>& fr, const RationalPoint& base, const std::vector<Real>& w) {
  std::vector<Real> x = base.to_real<Real>();
  for (int i = 0; i < fr.n; ++i) {
    for (int j = 0; j < fr.u; ++j) x[i] += fr.bu(i, j) * w[j];
    using std::floor;
    x[i] -= floor(x[i]);
  }
  return x;
}

template <class Real>
Real torus_distance(const std::vector<Real>& p, const std::vector<Real>& q) {
  using std::floor;
  using std::sqrt;
  Real s(0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    Real d = p[i] - q[i];
    d -= floor(d + Real(0.5));
    s += d * d;
  }
  return sqrt(s);
}

}  // namespace schmidt
