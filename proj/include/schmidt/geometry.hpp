#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "dynamics.hpp"
#include "error.hpp"

namespace schmidt {

template <class Real>
using P2 = std::array<Real, 2>;

// Open convex cell in leaf coordinates: an interval (dim 1) or a counter-clockwise polygon (dim 2).
template <class Real>
struct Cell {
  int dim = 1;
  std::vector<P2<Real>> v;

  static Cell interval(Real lo, Real hi) {
    Cell c;
    c.dim = 1;
    c.v = {P2<Real>{lo, Real(0)}, P2<Real>{hi, Real(0)}};
    return c;
  }
  static Cell polygon(std::vector<P2<Real>> pts) {
    Cell c;
    c.dim = 2;
    c.v = std::move(pts);
    return c;
  }
  static Cell box(const std::vector<Real>& center, Real half) {
    if (center.size() == 1) return interval(center[0] - half, center[0] + half);
    const Real x = center[0], y = center[1];
    return polygon({{x - half, y - half}, {x + half, y - half}, {x + half, y + half}, {x - half, y + half}});
  }

  const Real& lo() const { return v[0][0]; }
  const Real& hi() const { return v[1][0]; }
  bool empty() const { return dim == 1 ? !(lo() < hi()) : v.size() < 3 || !(area2() > 0); }

  Real area2() const {
    Real s(0);
    for (std::size_t i = 0; i < v.size(); ++i) {
      const auto& a = v[i];
      const auto& b = v[(i + 1) % v.size()];
      s += a[0] * b[1] - a[1] * b[0];
    }
    return s;
  }

  Real volume() const {
    if (dim == 1) return hi() - lo();
    return area2() / 2;
  }

  Real diameter() const {
    if (dim == 1) return hi() - lo();
    Real best(0);
    for (std::size_t i = 0; i < v.size(); ++i)
      for (std::size_t j = i + 1; j < v.size(); ++j) best = std::max(best, dist(v[i], v[j]));
    return best;
  }

  std::vector<Real> centroid() const {
    if (dim == 1) return {(lo() + hi()) / 2};
    Real cx(0), cy(0), a(0);
    for (std::size_t i = 0; i < v.size(); ++i) {
      const auto& p = v[i];
      const auto& q = v[(i + 1) % v.size()];
      Real cr = p[0] * q[1] - q[0] * p[1];
      a += cr;
      cx += (p[0] + q[0]) * cr;
      cy += (p[1] + q[1]) * cr;
    }
    return {cx / (3 * a), cy / (3 * a)};
  }

  // Signed distance from x to the boundary, positive inside.
  Real depth(const std::vector<Real>& x) const {
    if (dim == 1) return std::min(x[0] - lo(), hi() - x[0]);
    Real best = std::numeric_limits<Real>::max();
    for (std::size_t i = 0; i < v.size(); ++i) best = std::min(best, edge_distance(i, x));
    return best;
  }

  bool contains(const std::vector<Real>& x) const { return depth(x) > 0; }
  bool contains_closed(const std::vector<Real>& x) const { return depth(x) >= 0; }

  bool contains_cell(const Cell& o) const {
    if (dim == 1) return lo() <= o.lo() && o.hi() <= hi();
    for (const auto& p : o.v)
      if (!contains_closed({p[0], p[1]})) return false;
    return true;
  }

  // Interiors overlap.
  bool intersects(const Cell& o, const Real& tol = Real(0)) const {
    if (dim == 1) return std::max(lo(), o.lo()) + tol < std::min(hi(), o.hi());
    return separating_gap(*this, o) < -tol && separating_gap(o, *this) < -tol;
  }

  Real max_radius(const std::vector<Real>& c) const {
    Real best(0);
    if (dim == 1) return std::max(c[0] - lo(), hi() - c[0]);
    for (const auto& p : v) best = std::max(best, dist(p, {c[0], c[1]}));
    return best;
  }

  Cell transformed(const Mat<Real>& m) const {
    Cell c = *this;
    if (dim == 1) {
      Real a = m(0, 0) * v[0][0], b = m(0, 0) * v[1][0];
      if (b < a) std::swap(a, b);
      return interval(a, b);
    }
    for (auto& p : c.v) p = {m(0, 0) * p[0] + m(0, 1) * p[1], m(1, 0) * p[0] + m(1, 1) * p[1]};
    if (c.area2() < 0) std::reverse(c.v.begin(), c.v.end());
    return c;
  }

  Cell scaled(const Real& s) const {
    Mat<Real> m = Mat<Real>::Identity(dim, dim) * s;
    return transformed(m);
  }

  // Keep the part with n.x <= off.
  Cell clip(const P2<Real>& n, const Real& off) const {
    std::vector<P2<Real>> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const auto& a = v[i];
      const auto& b = v[(i + 1) % v.size()];
      Real fa = n[0] * a[0] + n[1] * a[1] - off;
      Real fb = n[0] * b[0] + n[1] * b[1] - off;
      if (fa <= 0) out.push_back(a);
      if ((fa < 0 && fb > 0) || (fa > 0 && fb < 0)) {
        Real t = fa / (fa - fb);
        out.push_back({a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])});
      }
    }
    return polygon(std::move(out));
  }

  Cell intersect(const Cell& o) const {
    if (dim == 1) {
      Real a = std::max(lo(), o.lo()), b = std::min(hi(), o.hi());
      if (b < a) b = a;
      return interval(a, b);
    }
    Cell c = *this;
    for (std::size_t i = 0; i < o.v.size() && !c.v.empty(); ++i) {
      auto [n, off] = o.half_plane(i);
      c = c.clip(n, off);
    }
    return c;
  }

  // Outward normal n and offset with n.x <= off on the cell, for edge i.
  std::pair<P2<Real>, Real> half_plane(std::size_t i) const {
    const auto& a = v[i];
    const auto& b = v[(i + 1) % v.size()];
    P2<Real> n{b[1] - a[1], a[0] - b[0]};
    return {n, n[0] * a[0] + n[1] * a[1]};
  }

  // Half-space description a.x <= b, one row per facet.
  std::vector<std::pair<std::vector<Real>, Real>> half_spaces() const {
    std::vector<std::pair<std::vector<Real>, Real>> hs;
    if (dim == 1) {
      hs.push_back({{Real(-1)}, -lo()});
      hs.push_back({{Real(1)}, hi()});
      return hs;
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
      auto [n, off] = half_plane(i);
      hs.push_back({{n[0], n[1]}, off});
    }
    return hs;
  }

  std::pair<std::vector<Real>, std::vector<Real>> bounds() const {
    std::vector<Real> a(dim), b(dim);
    for (int k = 0; k < dim; ++k) {
      a[k] = v[0][k];
      b[k] = v[0][k];
      for (const auto& p : v) {
        a[k] = std::min(a[k], p[k]);
        b[k] = std::max(b[k], p[k]);
      }
    }
    return {a, b};
  }

  std::string summary() const {
    std::string s = "[";
    for (std::size_t i = 0; i < (dim == 1 ? 2 : v.size()); ++i) {
      if (i) s += dim == 1 ? "," : ";";
      s += format_real(v[i][0]);
      if (dim == 2) s += " " + format_real(v[i][1]);
    }
    return s + "]";
  }

 private:
  static Real dist(const P2<Real>& a, const P2<Real>& b) {
    using std::sqrt;
    Real dx = a[0] - b[0], dy = a[1] - b[1];
    return sqrt(dx * dx + dy * dy);
  }

  Real edge_distance(std::size_t i, const std::vector<Real>& x) const {
    using std::sqrt;
    auto [n, off] = half_plane(i);
    return (off - n[0] * x[0] - n[1] * x[1]) / sqrt(n[0] * n[0] + n[1] * n[1]);
  }

  // Max over edges of a of the min distance of b's vertices beyond that edge; >= 0 means separated.
  static Real separating_gap(const Cell& a, const Cell& b) {
    Real best = -std::numeric_limits<Real>::max();
    for (std::size_t i = 0; i < a.v.size(); ++i) {
      auto [n, off] = a.half_plane(i);
      Real m = std::numeric_limits<Real>::max();
      for (const auto& p : b.v) m = std::min(m, n[0] * p[0] + n[1] * p[1] - off);
      best = std::max(best, m);
    }
    return best;
  }
};

// Regular k-gon of circumradius r about c, counter-clockwise.
template <class Real>
Cell<Real> regular_polygon(const std::vector<Real>& c, Real r, int k) {
  std::vector<P2<Real>> pts;
  const double pi = std::acos(-1.0);
  for (int i = 0; i < k; ++i) {
    double t = 2 * pi * i / k;
    pts.push_back({c[0] + r * Real(std::cos(t)), c[1] + r * Real(std::sin(t))});
  }
  return Cell<Real>::polygon(std::move(pts));
}

}  // namespace schmidt
