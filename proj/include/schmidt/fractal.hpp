#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "parallel.hpp"
#include "properties.hpp"
#include "strategy.hpp"

namespace schmidt {

// Alice's answer inside a Bob atom; nullopt drops the branch.
template <class Real>
using Responder = std::function<std::optional<Atom<Real>>(const Atom<Real>&)>;

// Greedy avoidance of every obstacle with k <= Alice's level. With c = 0 this is the neutral move.
template <class Real>
Responder<Real> avoidance_responder(const Tiling<Real>& t, TargetRectangle<Real> target, int a,
                                    bool prune_lost = false) {
  auto orbit = std::make_shared<OrbitCache>(t.model(), t.base());
  return [&t, target, a, prune_lost, orbit](const Atom<Real>& bob) -> std::optional<Atom<Real>> {
    if (!(target.c > 0)) return t.descend(bob, a);
    auto obs = enumerate_obstacles(t, *orbit, target, bob, 0, bob.level + a);
    auto res = greedy_move(t, bob, a, obs);
    if (prune_lost && res.avoided < res.total) return std::nullopt;
    return res.atom;
  };
}

template <class Real>
struct TreeNode {
  Atom<Real> atom;
  int parent = -1;
  int first_child = 0;
  int child_count = 0;
};

template <class Real>
struct TreeFamily {
  int a = 0, b = 0, u = 1;
  double c_a = 0;    // density constant c(a) of the tiling
  double sigma = 0;  // log sigma1
  std::vector<std::vector<TreeNode<Real>>> levels;
  std::vector<double> log_d;    // log of the max base diameter per level
  std::vector<double> density;  // Delta_l, one per expanded level
  long pruned = 0;

  int depth() const { return static_cast<int>(levels.size()) - 1; }
};

struct TreeOptions {
  int a = 3, b = 3, depth = 1;
  bool prune_lost = false;
  int threads = 0;
  long max_nodes = 4000000;
};

// Bob's opening contains the leaf origin; Alice answers it.
template <class Real>
Atom<Real> first_alice_atom(const Tiling<Real>& t, const Responder<Real>& alice, int n1) {
  auto bob = t.atom_containing(std::vector<Real>(t.u(), Real(0)), n1);
  auto a = alice(bob);
  if (!a) fail(ErrorCode::NoChild, "Alice has no answer to the opening");
  return *a;
}

template <class Real>
TreeFamily<Real> build_tree(const Tiling<Real>& t, const Responder<Real>& alice, const Atom<Real>& root,
                            const TreeOptions& opt) {
  if (opt.depth < 0) fail(ErrorCode::InvalidParams, "depth >= 0");
  if (opt.a <= t.a_star() || opt.b <= t.a_star()) fail(ErrorCode::InvalidParams, "a and b must exceed a*");
  TreeFamily<Real> tr;
  tr.a = opt.a;
  tr.b = opt.b;
  tr.u = t.u();
  tr.sigma = std::log(t.model().sigma1);
  tr.c_a = density_constant(t.params().tau, opt.a, t.a_star(), t.model().sigma1, t.model().sigma2, t.u());
  tr.levels.push_back({TreeNode<Real>{root, -1, 0, 0}});
  long total = 1;
  for (int l = 0; l < opt.depth; ++l) {
    auto& cur = tr.levels[l];
    std::vector<std::vector<Atom<Real>>> kids(cur.size());
    std::vector<long> lost(cur.size(), 0);
    parallel_for(cur.size(), opt.threads, [&](std::size_t i) {
      for (const auto& th : t.children(cur[i].atom, opt.b)) {
        auto r = alice(th);
        if (r) kids[i].push_back(std::move(*r));
        else ++lost[i];
      }
    });
    std::vector<TreeNode<Real>> next;
    for (std::size_t i = 0; i < cur.size(); ++i) {
      cur[i].first_child = static_cast<int>(next.size());
      cur[i].child_count = static_cast<int>(kids[i].size());
      tr.pruned += lost[i];
      for (auto& k : kids[i]) next.push_back({std::move(k), static_cast<int>(i), 0, 0});
    }
    total += static_cast<long>(next.size());
    if (total > opt.max_nodes) fail(ErrorCode::TilingDepthExceeded, "tree exceeds max_nodes");
    tr.levels.push_back(std::move(next));
  }
  for (int l = 0; l <= tr.depth(); ++l) {
    Real dmax(0);
    for (const auto& nd : tr.levels[l]) dmax = std::max(dmax, t.base_diameter(nd.atom));
    tr.log_d.push_back(std::log(to_double(dmax)));
    if (l == tr.depth()) break;
    double dmin = 1e300;
    for (const auto& nd : tr.levels[l]) {
      Real s(0);
      for (int c = 0; c < nd.child_count; ++c) s += tr.levels[l + 1][nd.first_child + c].atom.cell.volume();
      dmin = std::min(dmin, to_double(s / t.image(nd.atom, opt.a + opt.b).volume()));
    }
    tr.density.push_back(dmin);
  }
  return tr;
}

// Tree conditions: positive root, disjoint levels, nesting, shrinking diameters, Delta_l > 0 and Delta_l >= c(a), with d_l <= 2(1+tau)delta e^{-sigma n}.
template <class Real>
PropertyReport check_tree(const Tiling<Real>& t, const TreeFamily<Real>& tr) {
  PropertyReport rep;
  PropertyCheck pos{"tree.root_volume"}, disj{"tree.disjoint"}, nest{"tree.nested"}, decay{"tree.diameter"},
      dens{"tree.density"}, ca{"tree.density_vs_c(a)"};
  detail::tally(pos, tr.levels[0][0].atom.cell.volume() > 0);
  const double c_const = 2 * (1 + t.params().tau) * t.params().delta;
  for (int l = 0; l <= tr.depth(); ++l) {
    const auto& lv = tr.levels[l];
    if (lv.empty()) continue;
    const int level = lv[0].atom.level;
    detail::tally(decay, tr.log_d[l] <= std::log(c_const) - tr.sigma * level + 1e-9);
    if (t.u() == 1) {
      std::vector<std::pair<Real, Real>> iv;
      for (const auto& nd : lv) iv.push_back({nd.atom.cell.lo(), nd.atom.cell.hi()});
      std::sort(iv.begin(), iv.end());
      for (std::size_t i = 0; i + 1 < iv.size(); ++i) detail::tally(disj, iv[i].second <= iv[i + 1].first);
    } else {
      for (std::size_t i = 0; i < lv.size(); ++i)
        for (std::size_t j = i + 1; j < lv.size(); ++j)
          detail::tally(disj, !lv[i].atom.cell.intersects(lv[j].atom.cell, t.delta() * Real(1e-9)));
    }
    if (l > 0)
      for (const auto& nd : lv) {
        const auto& p = tr.levels[l - 1][nd.parent].atom;
        detail::tally(nest, t.image(p, nd.atom.level - p.level).contains_cell(nd.atom.cell));
      }
  }
  for (int l = 1; l <= tr.depth(); ++l) detail::tally(decay, tr.log_d[l] < tr.log_d[l - 1]);
  double dmin = 1e300;
  for (double d : tr.density) {
    detail::tally(dens, d > 0);
    detail::tally(ca, d >= tr.c_a);
    dmin = std::min(dmin, d);
  }
  if (!tr.density.empty()) ca.detail = "min Delta " + std::to_string(dmin) + " vs c(a) " + std::to_string(tr.c_a);
  rep.checks = {pos, disj, nest, decay, dens, ca};
  return rep;
}

// mu^(l): weight(B) = weight(A) nu(B) / nu(children of A).
template <class Real>
std::vector<std::vector<double>> stage_measures(const TreeFamily<Real>& tr) {
  std::vector<std::vector<double>> w{{1.0}};
  for (int l = 0; l < tr.depth(); ++l) {
    const auto& lv = tr.levels[l];
    std::vector<double> next(tr.levels[l + 1].size(), 0.0);
    for (std::size_t i = 0; i < lv.size(); ++i) {
      const auto& nd = lv[i];
      Real s(0);
      for (int c = 0; c < nd.child_count; ++c) s += tr.levels[l + 1][nd.first_child + c].atom.cell.volume();
      if (!(s > 0))
        fail(ErrorCode::ZeroDensity, "node " + std::to_string(i) + " at level " + std::to_string(l) +
                                         " has no child volume");
      for (int c = 0; c < nd.child_count; ++c) {
        const int k = nd.first_child + c;
        next[k] = w[l][i] * to_double(tr.levels[l + 1][k].atom.cell.volume() / s);
      }
    }
    w.push_back(std::move(next));
  }
  return w;
}

inline long double total_mass(const std::vector<double>& w) {
  long double s = 0;
  for (double x : w) s += x;
  return s;
}

// u - log(1/c(a)) / (sigma (a + b))
inline double closed_form_bound(int u, double c_a, double sigma, int a, int b) {
  return u - std::log(1 / c_a) / (sigma * (a + b));
}

struct DimensionBound {
  double eps = 0;
  double bound = 0;         // k - eps
  double closed_form = 0;   // u - log(1/c(a)) / (sigma (a+b))
  std::vector<double> eps_levels;
};

template <class Real>
DimensionBound dimension_lower_bound(const TreeFamily<Real>& tr, int k) {
  if (tr.depth() < 1) fail(ErrorCode::Precondition, "need at least two levels");
  if (k != tr.u) fail(ErrorCode::Precondition, "k must equal the leaf dimension");
  DimensionBound r;
  double acc = 0;
  for (std::size_t l = 0; l < tr.density.size(); ++l) {
    acc += std::log(1 / tr.density[l]);
    r.eps_levels.push_back(acc / -tr.log_d[l]);
  }
  r.eps = *std::max_element(r.eps_levels.begin(), r.eps_levels.end());
  r.bound = k - r.eps;
  r.closed_form = closed_form_bound(tr.u, tr.c_a, tr.sigma, tr.a, tr.b);
  return r;
}

struct LineFit {
  double slope = 0, intercept = 0, residual = 0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) fail(ErrorCode::DegenerateFit, "need two points");
  double mx = std::accumulate(x.begin(), x.end(), 0.0) / n, my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0)) fail(ErrorCode::DegenerateFit, "abscissae coincide");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double e = y[i] - f.intercept - f.slope * x[i];
    ss += e * e;
  }
  f.residual = std::sqrt(ss / n);
  return f;
}

struct BoxFit {
  LineFit fit;
  std::vector<double> scales;
  std::vector<long> counts;
  double slope() const { return fit.slope; }
};

inline BoxFit box_dimension(const std::vector<std::vector<double>>& points, const std::vector<double>& scales) {
  if (scales.size() < 5) fail(ErrorCode::Precondition, "need at least 5 scales");
  if (points.empty()) fail(ErrorCode::Precondition, "no points");
  bool same = true;
  for (const auto& p : points) same = same && p == points[0];
  if (same) fail(ErrorCode::DegenerateFit, "all points coincide");
  BoxFit r;
  r.scales = scales;
  std::vector<double> lx, ly;
  for (double e : scales) {
    std::vector<std::vector<long long>> cells;
    cells.reserve(points.size());
    for (const auto& p : points) {
      std::vector<long long> c(p.size());
      for (std::size_t i = 0; i < p.size(); ++i) c[i] = static_cast<long long>(std::floor(p[i] / e));
      cells.push_back(std::move(c));
    }
    std::sort(cells.begin(), cells.end());
    long n = static_cast<long>(std::unique(cells.begin(), cells.end()) - cells.begin());
    r.counts.push_back(n);
    lx.push_back(std::log(1 / e));
    ly.push_back(std::log(static_cast<double>(n)));
  }
  r.fit = fit_line(lx, ly);
  return r;
}

struct OracleResult {
  double dimension = 0;
  double spectral_radius = 0;
  bool empty = false;  // no infinite sequence avoids the words
  int states = 0;
};

// Base-d sequences avoiding every word: de Bruijn transfer matrix, power iteration on A + I.
inline OracleResult sft_oracle_dimension(int d, const std::vector<std::string>& words, double tol = 1e-12) {
  if (d < 2) fail(ErrorCode::InvalidParams, "base d >= 2");
  std::size_t m = 1;
  for (const auto& w : words) {
    if (w.empty()) fail(ErrorCode::InvalidParams, "empty forbidden word");
    for (char ch : w)
      if (ch - '0' < 0 || ch - '0' >= d) fail(ErrorCode::InvalidParams, "word '" + w + "' uses a digit >= d");
    m = std::max(m, w.size());
  }
  const int len = static_cast<int>(m) - 1;  // state = last len digits
  long states = 1;
  for (int i = 0; i < len; ++i) states *= d;
  if (states > 4000000) fail(ErrorCode::InvalidParams, "forbidden words too long");
  auto digits = [&](long s, int n) {
    std::string out(n, '0');
    for (int i = n - 1; i >= 0; --i, s /= d) out[i] = static_cast<char>('0' + s % d);
    return out;
  };
  auto allowed = [&](const std::string& s) {
    for (const auto& w : words)
      if (s.find(w) != std::string::npos) return false;
    return true;
  };
  // edges[s] lists successors of state s
  std::vector<std::vector<long>> edges(states);
  std::vector<char> ok(states);
  for (long s = 0; s < states; ++s) ok[s] = allowed(digits(s, len));
  for (long s = 0; s < states; ++s) {
    if (!ok[s]) continue;
    const std::string ws = digits(s, len);
    for (int x = 0; x < d; ++x) {
      std::string e = ws + static_cast<char>('0' + x);
      if (!allowed(e)) continue;
      long t = len == 0 ? 0 : (s * d + x) % states;
      edges[s].push_back(t);
    }
  }
  // Empty iff every path dies: peel states without surviving successors.
  std::vector<char> alive = ok;
  for (bool changed = true; changed;) {
    changed = false;
    for (long s = 0; s < states; ++s) {
      if (!alive[s]) continue;
      bool any = false;
      for (long t : edges[s]) any = any || alive[t];
      if (!any) {
        alive[s] = 0;
        changed = true;
      }
    }
  }
  if (std::none_of(alive.begin(), alive.end(), [](char c) { return c != 0; })) {
    OracleResult r;
    r.states = static_cast<int>(states);
    r.empty = true;
    return r;
  }
  std::vector<double> v(states), w(states);
  for (long s = 0; s < states; ++s) v[s] = ok[s] ? 1.0 : 0.0;
  double lam = 0;
  for (int it = 0; it < 2000000; ++it) {
    for (long s = 0; s < states; ++s) {
      double acc = v[s];
      for (long t : edges[s]) acc += v[t];
      w[s] = acc;
    }
    double nv = 0, nw = 0;
    for (long s = 0; s < states; ++s) {
      nv += v[s];
      nw += w[s];
    }
    double next = nw / nv;
    for (long s = 0; s < states; ++s) v[s] = w[s] / nw;
    if (it > 2 && std::fabs(next - lam) < tol * next) {
      lam = next;
      OracleResult r;
      r.states = static_cast<int>(states);
      r.spectral_radius = std::max(0.0, lam - 1);
      r.dimension = r.spectral_radius > 1 ? std::log(r.spectral_radius) / std::log(static_cast<double>(d)) : 0.0;
      return r;
    }
    lam = next;
  }
  fail(ErrorCode::NotConverged, "power iteration did not converge");
}

inline OracleResult sft_oracle_dimension(int d, const std::string& word) {
  return sft_oracle_dimension(d, std::vector<std::string>{word});
}

// Limit points of a tree by uniform random descent, in base leaf coordinates.
template <class Real>
std::vector<std::vector<double>> sample_limit_points(const Tiling<Real>& t, const TreeFamily<Real>& tr, int count,
                                                     std::uint64_t seed) {
  std::vector<std::vector<double>> out;
  Rng rng(seed);
  for (int s = 0; s < count * 50 && static_cast<int>(out.size()) < count; ++s) {
    int idx = 0;
    int l = 0;
    for (; l < tr.depth(); ++l) {
      const auto& nd = tr.levels[l][idx];
      if (nd.child_count == 0) break;
      idx = nd.first_child + static_cast<int>(rng.index(nd.child_count));
    }
    if (l < tr.depth()) continue;  // dead branch
    const auto& a = tr.levels[l][idx].atom;
    auto c = t.image(a, -a.level).centroid();
    std::vector<double> p;
    for (const auto& x : c) p.push_back(to_double(x));
    out.push_back(std::move(p));
  }
  return out;
}

// Middle-thirds Cantor set: random ternary strings in {0, 2}.
inline std::vector<std::vector<double>> cantor_samples(int count, int digits, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> out;
  for (int i = 0; i < count; ++i) {
    double x = 0, s = 1.0 / 3;
    for (int k = 0; k < digits; ++k, s /= 3) x += rng.index(2) ? 2 * s : 0;
    out.push_back({x});
  }
  return out;
}

// Binary digits of a point of the circle.
inline std::string binary_digits(long double x, int n) {
  x -= std::floor(x);
  std::string s;
  for (int i = 0; i < n; ++i) {
    x *= 2;
    int d = x >= 1 ? 1 : 0;
    x -= d;
    s += static_cast<char>('0' + d);
  }
  return s;
}

}  // namespace schmidt
