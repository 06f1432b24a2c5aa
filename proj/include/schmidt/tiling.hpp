#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "dynamics.hpp"
#include "error.hpp"
#include "geometry.hpp"
#include "real.hpp"

namespace schmidt {

template <class Real>
struct Atom {
  int level = 0;
  Real key;  // grid position of the site (u = 1) or site index (u = 2)
  Cell<Real> cell;
  std::vector<Real> center;
};

struct TilingParams {
  double delta = 0.05;
  double tau = 0.01;
  std::uint64_t seed = 1;
  int max_level = -1;  // negative: unbounded
  std::size_t max_sites = 400000;
};

inline int a_star_for(double delta, double tau, double sigma1) {
  for (int a = 0; a < 10000; ++a)
    if ((1 + tau) * delta / std::pow(sigma1, a) < (1 - tau) * delta / 4) return a;
  fail(ErrorCode::InvalidParams, "no a* found");
}

// 1-d Voronoi cells of sorted sites, cut to B(s, delta) and [clip_lo, clip_hi).
inline std::vector<std::pair<double, double>> voronoi_cells_1d(const std::vector<double>& sites, double clip_lo,
                                                               double clip_hi, double delta) {
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    double lo = sites[i] - delta, hi = sites[i] + delta;
    if (i > 0) lo = std::max(lo, (sites[i - 1] + sites[i]) / 2);
    if (i + 1 < sites.size()) hi = std::min(hi, (sites[i] + sites[i + 1]) / 2);
    out.push_back({std::max(lo, clip_lo), std::min(hi, clip_hi)});
  }
  return out;
}

template <class Real>
class Tiling {
 public:
  static constexpr int kPitch = 20;      // grid points per delta
  static constexpr int kWindow = 1280;   // grid points per window
  static constexpr int kPolygon = 64;

  Tiling(const ToralModel& model, TilingParams params, RationalPoint base)
      : model_(model), params_(params), base_(std::move(base)), frame_(make_frame<Real>(model)) {
    if (!(params.delta > 0) || !(params.tau > 0 && params.tau < 1))
      fail(ErrorCode::DegenerateDomain, "delta and tau must be positive, tau < 1");
    if (base_.dim() != model.n) fail(ErrorCode::InvalidParams, "base point dimension mismatch");
    if (model.u > 2) fail(ErrorCode::Unsupported, "leaves of dimension > 2");
    delta_ = Real(params.delta);
    h_ = delta_ / kPitch;
    a_star_ = a_star_for(params.delta, params.tau, model.sigma1);
  }

  const ToralModel& model() const { return model_; }
  const LeafFrame<Real>& frame() const { return frame_; }
  const TilingParams& params() const { return params_; }
  const RationalPoint& base() const { return base_; }
  int u() const { return model_.u; }
  int a_star() const { return a_star_; }
  const Real& delta() const { return delta_; }

  Cell<Real> domain(int n) const { return base_domain().transformed(frame_.power(n)); }

  Cell<Real> base_domain() const {
    std::vector<Real> zero(u(), Real(0));
    return Cell<Real>::box(zero, delta_ / 2);
  }

  Cell<Real> image(const Atom<Real>& a, int m) const { return a.cell.transformed(frame_.power(m)); }

  // Atoms of level n whose cells meet the region (level-n coordinates).
  std::vector<Atom<Real>> atoms_in(int n, const Cell<Real>& region) const {
    check_level(n);
    if (n == 0) {
      auto root = root_atom();
      if (root.cell.intersects(region)) return {root};
      return {};
    }
    if (u() == 1) return atoms_in_1d(n, region.lo(), region.hi());
    std::vector<Atom<Real>> out;
    for (const auto& a : level_2d(n))
      if (a.cell.intersects(region)) out.push_back(a);
    return out;
  }

  std::vector<Atom<Real>> level(int n) const {
    check_level(n);
    if (n == 0) return {root_atom()};
    if (u() == 1) {
      auto d = domain(n);
      return atoms_in_1d(n, d.lo(), d.hi());
    }
    return level_2d(n);
  }

  Atom<Real> root_atom() const {
    Atom<Real> a;
    a.level = 0;
    a.key = Real(0);
    a.cell = base_domain();
    a.center.assign(u(), Real(0));
    return a;
  }

  // Atom of level n containing the level-n point x.
  Atom<Real> atom_at(int n, const std::vector<Real>& x) const {
    Cell<Real> probe = Cell<Real>::box(x, h_ / 4);
    auto near = atoms_in(n, probe);
    const Atom<Real>* hit = nullptr;
    bool boundary = false;
    for (const auto& a : near) {
      Real d = a.cell.depth(x);
      if (d > 0) hit = &a;
      else if (d == 0) boundary = true;
    }
    if (hit) return *hit;
    if (boundary) fail(ErrorCode::OnBoundary, "point lies on an atom boundary at level " + std::to_string(n));
    fail(ErrorCode::OutsideDomain, "point outside the level-" + std::to_string(n) + " tiling");
  }

  // Atom of level n containing the base-leaf point w.
  Atom<Real> atom_containing(const std::vector<Real>& w, int n) const {
    Vec<Real> v(u());
    for (int i = 0; i < u(); ++i) v(i) = w[i];
    Vec<Real> x = frame_.power(n) * v;
    return atom_at(n, std::vector<Real>(x.data(), x.data() + u()));
  }

  std::vector<Atom<Real>> children(const Atom<Real>& a, int m) const {
    Cell<Real> img = image(a, m);
    std::vector<Atom<Real>> out;
    for (auto& c : atoms_in(a.level + m, img))
      if (img.contains_cell(c.cell)) out.push_back(std::move(c));
    return out;
  }

  // Child of level n+m whose site is deepest inside the image of a.
  Atom<Real> descend(const Atom<Real>& a, int m) const {
    if (m <= a_star_) fail(ErrorCode::Precondition, "descend needs m > a* = " + std::to_string(a_star_));
    Cell<Real> img = image(a, m);
    auto kids = children(a, m);
    if (kids.empty()) fail(ErrorCode::NoChild, "no level-" + std::to_string(a.level + m) + " atom inside");
    return *deepest(img, kids);
  }

  static const Atom<Real>* deepest(const Cell<Real>& img, const std::vector<Atom<Real>>& kids) {
    const Atom<Real>* best = nullptr;
    Real best_depth(0);
    for (const auto& k : kids) {
      Real d = img.depth(k.center);
      if (!best || d > best_depth || (d == best_depth && k.key < best->key)) {
        best = &k;
        best_depth = d;
      }
    }
    return best;
  }

  // True when a is an atom of this tiling.
  bool is_atom(const Atom<Real>& a) const {
    if (a.level < 0 || (params_.max_level >= 0 && a.level > params_.max_level)) return false;
    for (const auto& b : atoms_in(a.level, Cell<Real>::box(a.center, h_ / 4)))
      if (b.key == a.key && b.cell.v == a.cell.v) return true;
    return false;
  }

  // Base-leaf volume and diameter of an atom.
  Real base_volume(const Atom<Real>& a) const {
    Real det = frame_.power(a.level).determinant();
    using std::abs;
    return a.cell.volume() / abs(det);
  }
  Real base_diameter(const Atom<Real>& a) const { return image(a, -a.level).diameter(); }

  void clear_cache() const {
    std::lock_guard<std::mutex> lock(mu_);
    windows_.clear();
    strips_.clear();
    levels2d_.clear();
  }

 private:
  using Offsets = std::vector<std::int16_t>;

  void check_level(int n) const {
    if (n < 0) fail(ErrorCode::Precondition, "negative level");
    if (params_.max_level >= 0 && n > params_.max_level)
      fail(ErrorCode::TilingDepthExceeded, "level " + std::to_string(n) + " beyond cap " +
                                               std::to_string(params_.max_level));
  }

  std::uint64_t seed_for(int n, const Real& k, int phase) const {
    return hash_combine(hash_combine(hash_combine(params_.seed, static_cast<std::uint64_t>(n)), hash_integer(k)),
                        static_cast<std::uint64_t>(phase));
  }

  // Grid-unit bounds of the level-n domain.
  std::pair<Real, Real> grid_domain(int n) const {
    auto d = domain(n);
    return {d.lo() / h_, d.hi() / h_};
  }

  // Phase 0: greedy over the shuffled interior grid of window k.
  const Offsets& window(int n, const Real& k) const {
    auto& lvl = windows_[n];
    auto it = lvl.find(k);
    if (it != lvl.end()) return it->second;
    using std::ceil;
    using std::floor;
    auto [ga, gb] = grid_domain(n);
    Real origin = k * kWindow;
    long lo = kPitch, hi = kWindow - kPitch;
    Real rlo = ceil(ga) - origin, rhi = floor(gb) - origin;
    if (rlo > Real(lo)) lo = rlo > Real(hi + 1) ? hi + 1 : static_cast<long>(rlo);
    if (rhi < Real(hi)) hi = rhi < Real(lo - 1) ? lo - 1 : static_cast<long>(rhi);
    std::vector<std::int16_t> pts;
    pts.reserve(kWindow);
    for (long j = lo; j <= hi; ++j) pts.push_back(static_cast<std::int16_t>(j));
    Rng rng(seed_for(n, k, 0));
    rng.shuffle(pts);
    std::array<char, kWindow + 2 * kPitch> blocked{};
    Offsets acc;
    for (auto j : pts) {
      if (blocked[j + kPitch]) continue;
      acc.push_back(j);
      for (int d = -kPitch + 1; d < kPitch; ++d) blocked[j + kPitch + d] = 1;
    }
    std::sort(acc.begin(), acc.end());
    return lvl.emplace(k, std::move(acc)).first->second;
  }

  // Phase 1: the strip around the boundary between windows k-1 and k, offsets relative to k*kWindow.
  const Offsets& strip(int n, const Real& k) const {
    auto& lvl = strips_[n];
    auto it = lvl.find(k);
    if (it != lvl.end()) return it->second;
    using std::ceil;
    using std::floor;
    auto [ga, gb] = grid_domain(n);
    Real origin = k * kWindow;
    std::vector<long> taken;
    for (auto j : window(n, k - 1))
      if (j - kWindow > -2 * kPitch) taken.push_back(j - kWindow);
    for (auto j : window(n, k))
      if (j < 2 * kPitch) taken.push_back(j);
    std::vector<std::int16_t> pts;
    for (long j = -kPitch + 1; j < kPitch; ++j) {
      Real g = origin + j;
      if (g >= ceil(ga) && g <= floor(gb)) pts.push_back(static_cast<std::int16_t>(j));
    }
    Rng rng(seed_for(n, k, 1));
    rng.shuffle(pts);
    Offsets acc;
    for (auto j : pts) {
      bool ok = true;
      for (long t : taken)
        if (std::labs(t - j) < kPitch) ok = false;
      if (!ok) continue;
      acc.push_back(j);
      taken.push_back(j);
    }
    std::sort(acc.begin(), acc.end());
    return lvl.emplace(k, std::move(acc)).first->second;
  }

  // Sites (grid units) at level n in [glo, ghi], including end and gap repairs.
  std::vector<Real> sites_1d(int n, const Real& glo, const Real& ghi) const {
    using std::floor;
    auto [ga, gb] = grid_domain(n);
    Real lo = std::max(glo, ga - Real(2 * kPitch)), hi = std::min(ghi, gb + Real(2 * kPitch));
    std::vector<Real> s;
    if (hi < lo) return s;
    Real k0 = floor(lo / kWindow) - 1, k1 = floor(hi / kWindow) + 1;
    {
      std::lock_guard<std::mutex> lock(mu_);
      if (windows_.size() > 64 || cached_windows() > 400000) {
        windows_.clear();
        strips_.clear();
      }
      for (Real k = k0; k <= k1; k += 1) {
        Real origin = k * kWindow;
        for (auto j : strip(n, k)) s.push_back(origin + j);
        for (auto j : window(n, k)) s.push_back(origin + j);
      }
    }
    std::sort(s.begin(), s.end());
    std::vector<Real> out;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i > 0 && s[i] - s[i - 1] > Real(2 * kPitch)) out.push_back((s[i] + s[i - 1]) / 2);
      out.push_back(s[i]);
    }
    if (glo <= ga + Real(4 * kPitch) && (out.empty() || out.front() - ga >= Real(kPitch))) out.insert(out.begin(), ga);
    if (ghi >= gb - Real(4 * kPitch) && gb - out.back() >= Real(kPitch)) out.push_back(gb);
    return out;
  }

  std::size_t cached_windows() const {
    std::size_t t = 0;
    for (auto& [n, m] : windows_) t += m.size();
    return t;
  }

  std::vector<Atom<Real>> atoms_in_1d(int n, Real lo, Real hi) const {
    if (hi < lo) std::swap(lo, hi);
    Real glo = lo / h_, ghi = hi / h_;
    auto s = sites_1d(n, glo - Real(4 * kPitch), ghi + Real(4 * kPitch));
    std::vector<Atom<Real>> out;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] + Real(kPitch) <= glo || s[i] - Real(kPitch) >= ghi) continue;
      Real clo = s[i] - Real(kPitch), chi = s[i] + Real(kPitch);
      if (i > 0) clo = std::max(clo, (s[i - 1] + s[i]) / 2);
      if (i + 1 < s.size()) chi = std::min(chi, (s[i] + s[i + 1]) / 2);
      if (!(clo * h_ < hi && chi * h_ > lo)) continue;
      Atom<Real> a;
      a.level = n;
      a.key = s[i];
      a.cell = Cell<Real>::interval(clo * h_, chi * h_);
      a.center = {s[i] * h_};
      out.push_back(std::move(a));
    }
    return out;
  }

  // Full level for two-dimensional leaves.
  const std::vector<Atom<Real>>& level_2d(int n) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = levels2d_.find(n);
    if (it != levels2d_.end()) return it->second;
    return levels2d_.emplace(n, build_2d(n)).first->second;
  }

  struct SpatialHash {
    Real cell;
    std::unordered_map<std::int64_t, std::vector<int>> buckets;
    std::int64_t key(long i, long j) const { return (static_cast<std::int64_t>(i) << 32) ^ (j & 0xffffffff); }
    std::pair<long, long> index(const P2<Real>& p) const {
      using std::floor;
      return {static_cast<long>(floor(p[0] / cell)), static_cast<long>(floor(p[1] / cell))};
    }
    void add(const P2<Real>& p, int id) {
      auto [i, j] = index(p);
      buckets[key(i, j)].push_back(id);
    }
    template <class F>
    void near(const P2<Real>& p, int reach, F&& f) const {
      auto [i, j] = index(p);
      for (long a = i - reach; a <= i + reach; ++a)
        for (long b = j - reach; b <= j + reach; ++b) {
          auto it = buckets.find(key(a, b));
          if (it == buckets.end()) continue;
          for (int id : it->second) f(id);
        }
    }
  };

  std::vector<Atom<Real>> build_2d(int n) const {
    using std::ceil;
    using std::floor;
    using std::sqrt;
    const double pi = std::acos(-1.0);
    const Real radius = delta_ * Real(1 - 1e-12);
    const Real sep = radius * Real(std::cos(pi / kPolygon));
    Cell<Real> dom = domain(n);
    auto [lo, hi] = dom.bounds();
    const Real est = dom.volume() / (sep * sep) * 2;
    if (est > Real(static_cast<double>(params_.max_sites)))
      fail(ErrorCode::TilingDepthExceeded, "level " + std::to_string(n) + " needs too many sites");

    std::vector<P2<Real>> grid;
    for (Real x = ceil(lo[0] / h_); x * h_ <= hi[0]; x += 1)
      for (Real y = ceil(lo[1] / h_); y * h_ <= hi[1]; y += 1) {
        std::vector<Real> p{x * h_, y * h_};
        if (dom.contains_closed(p)) grid.push_back({p[0], p[1]});
      }
    Rng rng(seed_for(n, Real(0), 2));
    rng.shuffle(grid);

    std::vector<P2<Real>> sites;
    SpatialHash hash{sep, {}};
    auto far_enough = [&](const P2<Real>& p) {
      bool ok = true;
      hash.near(p, 1, [&](int id) {
        Real dx = sites[id][0] - p[0], dy = sites[id][1] - p[1];
        if (dx * dx + dy * dy < sep * sep) ok = false;
      });
      return ok;
    };
    for (const auto& p : grid)
      if (far_enough(p)) {
        hash.add(p, static_cast<int>(sites.size()));
        sites.push_back(p);
      }

    auto voronoi = [&](std::size_t i, Cell<Real> c) {
      const auto& z = sites[i];
      hash.near(z, 3, [&](int id) {
        if (static_cast<std::size_t>(id) == i || c.v.empty()) return;
        const auto& q = sites[id];
        P2<Real> nrm{q[0] - z[0], q[1] - z[1]};
        Real off = (nrm[0] * (q[0] + z[0]) + nrm[1] * (q[1] + z[1])) / 2;
        c = c.clip(nrm, off);
      });
      return c;
    };

    // Vertex repair: any Voronoi-in-domain vertex at distance >= sep becomes a site.
    for (int round = 0; round < 100; ++round) {
      std::vector<P2<Real>> extra;
      for (std::size_t i = 0; i < sites.size(); ++i) {
        Cell<Real> c = voronoi(i, dom);
        for (const auto& v : c.v) {
          Real dx = v[0] - sites[i][0], dy = v[1] - sites[i][1];
          if (dx * dx + dy * dy >= sep * sep) {
            bool ok = far_enough(v);
            for (const auto& e : extra) {
              Real ex = e[0] - v[0], ey = e[1] - v[1];
              if (ex * ex + ey * ey < sep * sep) ok = false;
            }
            if (ok) extra.push_back(v);
          }
        }
      }
      if (extra.empty()) break;
      for (const auto& e : extra) {
        hash.add(e, static_cast<int>(sites.size()));
        sites.push_back(e);
      }
    }

    std::vector<Atom<Real>> atoms;
    for (std::size_t i = 0; i < sites.size(); ++i) {
      std::vector<Real> z{sites[i][0], sites[i][1]};
      Atom<Real> a;
      a.level = n;
      a.key = Real(static_cast<double>(i));
      a.center = z;
      a.cell = voronoi(i, regular_polygon<Real>(z, radius, kPolygon));
      atoms.push_back(std::move(a));
    }
    return atoms;
  }

  ToralModel model_;
  TilingParams params_;
  RationalPoint base_;
  LeafFrame<Real> frame_;
  Real delta_, h_;
  int a_star_ = 0;
  mutable std::mutex mu_;
  mutable std::map<int, std::map<Real, Offsets>> windows_;
  mutable std::map<int, std::map<Real, Offsets>> strips_;
  mutable std::map<int, std::vector<Atom<Real>>> levels2d_;
};

inline double distortion_bound(double l, double c, double theta, double sigma1) {
  if (!(sigma1 > 1) || !(theta > 0) || l < 0 || c < 0) fail(ErrorCode::InvalidParams, "distortion bound inputs");
  return std::exp(l * std::pow(c, theta) / (std::pow(sigma1, theta) - 1));
}

// Lower bound on the stage density for Alice's a-step descent.
inline double density_constant(double tau, int a, int a_star, double sigma1, double sigma2, int u, double k = 1,
                               double c_vol = 1) {
  if (a <= a_star) fail(ErrorCode::InvalidParams, "a must exceed a*");
  const double second = (1 - tau) / (2 * (1 + tau)) - 2 / std::pow(sigma1, a_star);
  if (!(second > 0)) fail(ErrorCode::InvalidParams, "a* too small for a positive density constant");
  const double first = (1 - tau) / (2 * std::pow(sigma2, a) * (1 + tau));
  return c_vol * c_vol / (k * k) * std::pow(first, u) * std::pow(second, u);
}

template <class Real>
void dump_level(std::ostream& os, const Tiling<Real>& t, int n) {
  os << "# level " << n << " delta " << t.params().delta << " tau " << t.params().tau << " seed " << t.params().seed
     << "\n";
  long idx = 0;
  for (const auto& a : t.level(n)) {
    os << "atom " << idx++ << " key " << format_real(a.key) << " center";
    for (const auto& c : a.center) os << " " << format_real(c);
    os << " cell " << a.cell.summary() << "\n";
    for (const auto& [coef, off] : a.cell.half_spaces()) {
      os << "  halfspace";
      for (const auto& c : coef) os << " " << format_real(c);
      os << " <= " << format_real(off) << "\n";
    }
  }
}

}  // namespace schmidt
