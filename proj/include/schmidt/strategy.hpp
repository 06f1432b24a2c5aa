#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include "game.hpp"

namespace schmidt {

template <class Real>
struct TargetRectangle {
  RationalPoint y;
  Real c;
};

// x (torus coordinates) lies in the c-rectangle about y: a sup-norm box in the [B_u | B_c] frame.
template <class Real>
bool in_rectangle(const LeafFrame<Real>& fr, const std::vector<Real>& x, const TargetRectangle<Real>& target) {
  using std::abs;
  using std::floor;
  auto y = target.y.template to_real<Real>();
  const int n = fr.n;
  std::vector<Real> d(n);
  for (int i = 0; i < n; ++i) {
    d[i] = x[i] - y[i];
    d[i] -= floor(d[i] + Real(0.5));
  }
  const int combos = static_cast<int>(std::pow(3, n));
  for (int code = 0; code < combos; ++code) {
    Vec<Real> v(n);
    int c = code;
    for (int i = 0; i < n; ++i, c /= 3) v(i) = d[i] - Real(c % 3 - 1);
    Vec<Real> beta = fr.finv * v;
    if (beta.cwiseAbs().maxCoeff() < target.c / 2) return true;
  }
  return false;
}

template <class Real>
struct Obstacle {
  int k = 0;
  int level = 0;
  Cell<Real> region;     // component clipped to the atom, level coordinates
  Cell<Real> component;  // unclipped component, level coordinates
};

enum class Mode { Guaranteed, Practical };

// Exact forward orbit of the base point. Thread-safe; references stay valid.
class OrbitCache {
 public:
  OrbitCache(const ToralModel& m, RationalPoint x) : m_(m) { pts_.push_back(std::move(x)); }
  const RationalPoint& at(int k) {
    std::lock_guard<std::mutex> lock(mu_);
    while (static_cast<int>(pts_.size()) <= k) pts_.push_back(apply_matrix(m_.matrix, pts_.back()));
    return pts_[k];
  }

 private:
  const ToralModel& m_;
  std::deque<RationalPoint> pts_;
  std::mutex mu_;
};

namespace detail {

template <class Real>
std::vector<Real> rho_bounds(const LeafFrame<Real>& fr, const Real& c) {
  std::vector<Real> rho(fr.n);
  for (int i = 0; i < fr.n; ++i) {
    Real s(0);
    for (int j = 0; j < fr.n; ++j) {
      using std::abs;
      s += abs(fr.f(i, j));
    }
    rho[i] = s * c / 2 * Real(1.000001);
  }
  return rho;
}

}  // namespace detail

// Components I_k, k in [k_lo, k_hi], of the preimage of the rectangle meeting the atom.
template <class Real>
std::vector<Obstacle<Real>> enumerate_obstacles(const Tiling<Real>& t, OrbitCache& orbit,
                                                const TargetRectangle<Real>& target, const Atom<Real>& atom,
                                                int k_lo, int k_hi, Mode mode = Mode::Practical,
                                                long max_candidates = 20000000) {
  using std::ceil;
  using std::floor;
  const auto& fr = t.frame();
  const int n = fr.n, u = fr.u;
  const auto y = target.y.template to_real<Real>();
  const auto rho = detail::rho_bounds(fr, target.c);
  std::vector<Obstacle<Real>> out;
  long budget = max_candidates;

  // Coordinates ordered by unstable weight, so the long direction is enumerated first.
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int p, int q) {
    Real a(0), b(0);
    for (int j = 0; j < u; ++j) {
      using std::abs;
      a += abs(fr.bu(p, j));
      b += abs(fr.bu(q, j));
    }
    return a > b;
  });

  for (int k = std::max(0, k_lo); k <= k_hi; ++k) {
    const auto xk = orbit.at(k).template to_real<Real>();
    std::vector<Real> d(n);
    for (int i = 0; i < n; ++i) d[i] = xk[i] - y[i];
    const Mat<Real> to_level = fr.power(atom.level - k);
    const Cell<Real> yc = atom.cell.transformed(fr.power(k - atom.level));
    auto [ylo, yhi] = yc.bounds();
    for (int j = 0; j < u; ++j) {
      ylo[j] -= target.c;
      yhi[j] += target.c;
    }
    int found = 0;
    std::vector<Real> tv(n);

    auto emit = [&]() {
      Vec<Real> v(n);
      for (int i = 0; i < n; ++i) v(i) = d[i] - tv[i];
      Vec<Real> beta = fr.finv * v;
      for (int i = u; i < n; ++i) {
        using std::abs;
        if (!(abs(beta(i)) < target.c / 2)) return;
      }
      std::vector<Real> centre(u);
      for (int j = 0; j < u; ++j) centre[j] = -beta(j);
      Cell<Real> comp = Cell<Real>::box(centre, target.c / 2).transformed(to_level);
      if (!comp.intersects(atom.cell)) return;
      Obstacle<Real> ob{k, atom.level, comp.intersect(atom.cell), comp};
      if (ob.region.empty()) return;
      ++found;
      out.push_back(std::move(ob));
    };

    // Narrow the box of unstable coordinates one torus coordinate at a time.
    std::function<void(int, std::vector<Real>, std::vector<Real>)> rec = [&](int idx, std::vector<Real> lo,
                                                                             std::vector<Real> hi) {
      if (idx == n) {
        emit();
        return;
      }
      const int i = order[idx];
      Real vmin = d[i], vmax = d[i];
      for (int j = 0; j < u; ++j) {
        Real p = fr.bu(i, j) * lo[j], q = fr.bu(i, j) * hi[j];
        vmin += std::min(p, q);
        vmax += std::max(p, q);
      }
      Real t0 = ceil(vmin - rho[i]), t1 = floor(vmax + rho[i]);
      for (Real ti = t0; ti <= t1; ti += 1) {
        if (--budget < 0) fail(ErrorCode::Unsupported, "obstacle enumeration exceeds the candidate budget");
        tv[i] = ti;
        std::vector<Real> nlo = lo, nhi = hi;
        if (u == 1) {
          using std::abs;
          const Real bij = fr.bu(i, 0);
          if (abs(bij) > Real(1e-30)) {
            Real a = (ti - rho[i] - d[i]) / bij, b = (ti + rho[i] - d[i]) / bij;
            if (b < a) std::swap(a, b);
            nlo[0] = std::max(nlo[0], a);
            nhi[0] = std::min(nhi[0], b);
            if (nhi[0] < nlo[0]) continue;
          }
        }
        rec(idx + 1, nlo, nhi);
      }
    };
    rec(0, ylo, yhi);
    if (mode == Mode::Guaranteed && found > 1)
      fail(ErrorCode::MultipleComponents, "I_" + std::to_string(k) + " has " + std::to_string(found) +
                                              " components inside the atom");
  }
  return out;
}

template <class Real>
bool meets(const Tiling<Real>& t, const Obstacle<Real>& ob, const Atom<Real>& a) {
  Cell<Real> r = ob.region.transformed(t.frame().power(a.level - ob.level));
  return r.intersects(a.cell);
}

template <class Real>
std::vector<Obstacle<Real>> still_active(const Tiling<Real>& t, const std::vector<Obstacle<Real>>& obs,
                                         const Atom<Real>& a) {
  std::vector<Obstacle<Real>> out;
  for (const auto& o : obs)
    if (meets(t, o, a)) out.push_back(o);
  return out;
}

template <class Real>
struct AvoidResult {
  Atom<Real> atom;
  int avoided = 0;
  int total = 0;
  int branch = 0;  // 1: deep child, 2: child at the centre, 0: greedy
};

// Dichotomy: the deepest child, else the child holding the centre, must avoid ceil(eta N) obstacles.
template <class Real>
AvoidResult<Real> avoidance_move(const Tiling<Real>& t, const Atom<Real>& bob, int a,
                                 const std::vector<Obstacle<Real>>& obstacles, double eta) {
  if (!(eta > 0 && eta < 0.25)) fail(ErrorCode::InvalidParams, "eta must lie in (0, 1/4)");
  auto active = still_active(t, obstacles, bob);
  const int total = static_cast<int>(active.size());
  const int need = static_cast<int>(std::ceil(eta * total - 1e-12));
  auto avoided_by = [&](const Atom<Real>& c) {
    int s = 0;
    for (const auto& o : active) s += !meets(t, o, c);
    return s;
  };
  Atom<Real> deep = t.descend(bob, a);
  int s1 = avoided_by(deep);
  if (s1 >= need) return {deep, s1, total, 1};

  Vec<Real> c(t.u());
  for (int i = 0; i < t.u(); ++i) c(i) = bob.center[i];
  Vec<Real> lc = t.frame().power(a) * c;
  std::vector<Real> x(lc.data(), lc.data() + t.u());
  const Cell<Real> img = t.image(bob, a);
  std::vector<Atom<Real>> holders;
  for (auto& k : t.atoms_in(bob.level + a, Cell<Real>::box(x, t.delta() * Real(1e-6))))
    if (k.cell.contains_closed(x) && img.contains_cell(k.cell)) holders.push_back(std::move(k));
  std::sort(holders.begin(), holders.end(), [](const auto& p, const auto& q) { return p.key < q.key; });
  for (const auto& h : holders) {
    int s2 = avoided_by(h);
    if (s2 >= need) return {h, s2, total, 2};
  }
  fail(ErrorCode::DichotomyFailure, "neither branch avoids " + std::to_string(need) + " of " +
                                        std::to_string(total) + " obstacles");
}

// Practical rule: the child avoiding the most obstacles, then the deepest, then the lowest key.
template <class Real>
AvoidResult<Real> greedy_move(const Tiling<Real>& t, const Atom<Real>& bob, int a,
                              const std::vector<Obstacle<Real>>& obstacles) {
  auto active = still_active(t, obstacles, bob);
  const Cell<Real> img = t.image(bob, a);
  auto kids = t.children(bob, a);
  if (kids.empty()) fail(ErrorCode::NoChild, "no child for Alice");
  const Atom<Real>* best = nullptr;
  int best_s = -1;
  Real best_depth(0);
  for (const auto& k : kids) {
    int s = 0;
    for (const auto& o : active) s += !meets(t, o, k);
    Real dp = img.depth(k.center);
    if (s > best_s || (s == best_s && (dp > best_depth || (dp == best_depth && k.key < best->key)))) {
      best = &k;
      best_s = s;
      best_depth = dp;
    }
  }
  return {*best, best_s, static_cast<int>(active.size()), 0};
}

struct LedgerEntry {
  std::string name;
  std::string formula;
  double lhs = 0;
  double rhs = 0;
  bool holds = true;
  double margin() const { return rhs - lhs; }
};

struct GameParams {
  double delta = 0.05, tau = 0.01, eta = 0.2, L = 0.01;
  int a_star = 0, a = 0, b = 0, r = 0, n1 = 0;
  double log_c = 0;  // natural log of c
  Mode mode = Mode::Practical;
  std::vector<LedgerEntry> ledger;

  int horizon(int steps) const { return steps * r * (a + b); }
};

inline int min_a(double tau, double sigma1, int a_star) {
  const double thr = std::log((13 + 11 * tau) / (1 - tau)) / std::log(sigma1);
  int a = static_cast<int>(std::floor(thr)) + 1;
  return std::max(a, a_star + 1);
}

inline int min_r(double eta, int a, int b) {
  for (int r = 1; r < 100000; ++r)
    if (std::pow(1 - eta, r) * (a + b) * r < 1) return r;
  fail(ErrorCode::InvalidParams, "no r satisfies the decay condition");
}

inline int min_n1(double tau, double delta, double L, double sigma1, int a, int b, int r) {
  // 2(1+tau)delta / sigma1^(n1 - (a+b) r) <= L/100
  const double need = std::log(2 * (1 + tau) * delta * 100 / L) / std::log(sigma1);
  int n1 = (a + b) * r + static_cast<int>(std::ceil(need - 1e-12));
  while (2 * (1 + tau) * delta * std::pow(sigma1, -(n1 - (a + b) * r)) > L / 100) ++n1;
  while (n1 > 0 && 2 * (1 + tau) * delta * std::pow(sigma1, -(n1 - 1 - (a + b) * r)) <= L / 100) --n1;
  return n1;
}

inline double log_c_max(double tau, double delta, double sigma2, int n1, int a, int b, int r) {
  return std::log((1 - tau) * delta / 2) - (n1 + (a + b) * r + a) * std::log(sigma2);
}

inline void fill_ledger(GameParams& p, double sigma1, double sigma2) {
  const double d = p.delta, tau = p.tau;
  p.ledger.clear();
  auto add = [&](std::string name, std::string formula, double lhs, double rhs, bool strict) {
    p.ledger.push_back({std::move(name), std::move(formula), lhs, rhs, strict ? lhs < rhs : lhs <= rhs});
  };
  add("a_star", "(1+tau) delta / sigma1^a* < (1-tau) delta / 4", (1 + tau) * d / std::pow(sigma1, p.a_star),
      (1 - tau) * d / 4, true);
  add("a_threshold", "log((13+11 tau)/(1-tau)) / log sigma1 < a",
      std::log((13 + 11 * tau) / (1 - tau)) / std::log(sigma1), p.a, true);
  add("a_gt_a_star", "a* < a", p.a_star, p.a, true);
  add("b_gt_a_star", "a* < b", p.a_star, p.b, true);
  add("eta_range", "eta < 1/4", p.eta, 0.25, true);
  add("r_decay", "(1-eta)^r (a+b) r < 1", std::pow(1 - p.eta, p.r) * (p.a + p.b) * p.r, 1, true);
  add("n1_scale", "2(1+tau) delta / sigma1^(n1-(a+b)r) <= L/100",
      2 * (1 + tau) * d * std::pow(sigma1, -(p.n1 - (p.a + p.b) * p.r)), p.L / 100, false);
  add("c_bound", "log c <= log((1-tau) delta / (2 sigma2^(n1+(a+b)r+a)))", p.log_c,
      log_c_max(tau, d, sigma2, p.n1, p.a, p.b, p.r), false);
}

// Smallest admissible parameters for the guaranteed strategy.
inline GameParams derive_params(const ToralModel& m, double delta, double tau, double eta, int b, double L) {
  if (!(eta > 0 && eta < 0.25)) fail(ErrorCode::InvalidParams, "eta must lie in (0, 1/4)");
  if (!(L > 0)) fail(ErrorCode::InvalidParams, "L must be positive");
  GameParams p;
  p.delta = delta;
  p.tau = tau;
  p.eta = eta;
  p.L = L;
  p.mode = Mode::Guaranteed;
  p.a_star = a_star_for(delta, tau, m.sigma1);
  if (b <= p.a_star) fail(ErrorCode::InvalidParams, "b must exceed a* = " + std::to_string(p.a_star));
  p.b = b;
  p.a = min_a(tau, m.sigma1, p.a_star);
  p.r = min_r(eta, p.a, b);
  p.n1 = min_n1(tau, delta, L, m.sigma1, p.a, b, p.r);
  p.log_c = log_c_max(tau, delta, m.sigma2, p.n1, p.a, b, p.r);
  fill_ledger(p, m.sigma1, m.sigma2);
  return p;
}

inline GameParams practical_params(const ToralModel& m, double delta, double tau, double eta, int a, int b, int r,
                                   int n1, double c) {
  GameParams p;
  p.delta = delta;
  p.tau = tau;
  p.eta = eta;
  p.mode = Mode::Practical;
  p.a_star = a_star_for(delta, tau, m.sigma1);
  if (a <= p.a_star || b <= p.a_star) fail(ErrorCode::InvalidParams, "a and b must exceed a*");
  if (r < 1 || n1 < 0 || !(c > 0)) fail(ErrorCode::InvalidParams, "r >= 1, n1 >= 0, c > 0");
  p.a = a;
  p.b = b;
  p.r = r;
  p.n1 = n1;
  p.log_c = std::log(c);
  p.L = 200 * (1 + tau) * delta * std::pow(m.sigma1, -(n1 - (a + b) * r));
  fill_ledger(p, m.sigma1, m.sigma2);
  return p;
}

template <class Real>
Real c_value(const Tiling<Real>& t, const GameParams& p) {
  if (p.mode == Mode::Guaranteed) {
    // Evaluated in working precision; c underflows double for deep openings.
    return Real((1 - p.tau) * p.delta / 2) / ipow(t.frame().sigma2, p.n1 + (p.a + p.b) * p.r + p.a);
  }
  return Real(std::exp(p.log_c));
}

// Uniform point of the level-n domain with full working precision.
template <class Real>
std::vector<Real> random_domain_point(const Tiling<Real>& t, int n, Rng& rng) {
  Vec<Real> w(t.u());
  for (int i = 0; i < t.u(); ++i) {
    Real x(0), scale(1);
    for (int j = 0; j < std::numeric_limits<Real>::digits / 52 + 1; ++j) {
      x += Real(rng.uniform()) * scale;
      scale /= Real(9007199254740992.0);
    }
    w(i) = (x - Real(0.5)) * t.delta();
  }
  Vec<Real> v = t.frame().power(n) * w;
  return std::vector<Real>(v.data(), v.data() + t.u());
}

enum class BobKind { Random, CenterSeeking, ObstacleHugging };

inline const char* bob_name(BobKind k) {
  switch (k) {
    case BobKind::Random: return "random";
    case BobKind::CenterSeeking: return "center";
    case BobKind::ObstacleHugging: return "hugging";
  }
  return "?";
}

inline BobKind parse_bob(const std::string& s) {
  if (s == "random") return BobKind::Random;
  if (s == "center" || s == "center-seeking") return BobKind::CenterSeeking;
  if (s == "hugging" || s == "obstacle-hugging") return BobKind::ObstacleHugging;
  fail(ErrorCode::InvalidParams, "unknown bob kind '" + s + "'");
}

template <class Real>
class BobAdversary {
 public:
  BobAdversary(BobKind kind, const Tiling<Real>& t, TargetRectangle<Real> target, int horizon)
      : kind_(kind), t_(t), target_(std::move(target)), horizon_(horizon), orbit_(t.model(), t.base()) {}

  BobKind kind() const { return kind_; }

  Atom<Real> opening(int n1, std::uint64_t seed) {
    Rng rng(seed);
    if (kind_ != BobKind::Random) {
      // Candidates: atoms around a few random points plus the leaf origin.
      std::vector<Atom<Real>> pool;
      std::vector<std::vector<Real>> probes{std::vector<Real>(t_.u(), Real(0))};
      for (int i = 0; i < 8; ++i) probes.push_back(random_domain_point(t_, n1, rng));
      for (const auto& x : probes)
        for (auto& a : t_.atoms_in(n1, Cell<Real>::box(x, t_.delta() * 3))) pool.push_back(std::move(a));
      auto pick = choose(pool, n1, rng);
      if (pick) return *pick;
    }
    for (int tries = 0; tries < 100; ++tries) {
      try {
        return t_.atom_at(n1, random_domain_point(t_, n1, rng));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::OnBoundary) throw;
      }
    }
    fail(ErrorCode::NoChild, "no opening found");
  }

  Strategy<Real> strategy() {
    return [this](const MoveContext<Real>& c) {
      auto kids = c.tiling.children(c.transcript.last(), c.level - c.transcript.last().level);
      if (kids.empty()) fail(ErrorCode::NoChild, "no legal move for Bob");
      Rng rng(c.seed);
      if (kind_ != BobKind::Random) {
        auto pick = choose(kids, c.level, rng);
        if (pick) return *pick;
      }
      return kids[rng.index(kids.size())];
    };
  }

 private:
  std::optional<Atom<Real>> choose(const std::vector<Atom<Real>>& pool, int level, Rng& rng) {
    if (pool.empty()) return std::nullopt;
    if (kind_ == BobKind::CenterSeeking) {
      auto y = target_.y.template to_real<Real>();
      const auto& xb = orbit_.at(level);
      const Atom<Real>* best = nullptr;
      Real best_d(0);
      for (const auto& a : pool) {
        Real d = torus_distance(torus_position(t_.frame(), xb, a.center), y);
        if (!best || d < best_d) {
          best = &a;
          best_d = d;
        }
      }
      return *best;
    }
    std::vector<const Atom<Real>*> hits;
    for (const auto& a : pool) {
      auto obs = enumerate_obstacles(t_, orbit_, target_, a, 0, horizon_);
      if (!obs.empty()) hits.push_back(&a);
    }
    if (hits.empty()) return std::nullopt;
    return *hits[rng.index(hits.size())];
  }

  BobKind kind_;
  const Tiling<Real>& t_;
  TargetRectangle<Real> target_;
  int horizon_;
  OrbitCache orbit_;
};

template <class Real>
struct WinReport {
  Transcript<Real> transcript;
  int horizon = 0;
  long obstacles_seen = 0;
  long obstacles_final = 0;  // components meeting the final atom; 0 on success
  bool orbit_avoids = true;  // sampled final-atom orbits stay out of the rectangle for k <= horizon
  std::vector<int> branches;
  bool success() const { return obstacles_final == 0 && orbit_avoids; }
};

// Checks f^k(z) outside the rectangle for k <= horizon on sample points of the final atom.
template <class Real>
bool orbit_check(const Tiling<Real>& t, OrbitCache& orbit, const TargetRectangle<Real>& target,
                 const Atom<Real>& a, int horizon, int samples = 9) {
  const auto& fr = t.frame();
  std::vector<std::vector<Real>> pts{a.center};
  auto [lo, hi] = a.cell.bounds();
  for (int s = 1; s < samples; ++s) {
    std::vector<Real> p(t.u());
    for (int i = 0; i < t.u(); ++i) p[i] = lo[i] + (hi[i] - lo[i]) * Real(s) / Real(samples);
    if (a.cell.contains(p)) pts.push_back(p);
  }
  for (const auto& p : pts) {
    Vec<Real> x(t.u());
    for (int i = 0; i < t.u(); ++i) x(i) = p[i];
    for (int k = 0; k <= horizon; ++k) {
      Vec<Real> w = fr.power(k - a.level) * x;
      auto pos = torus_position(fr, orbit.at(k), std::vector<Real>(w.data(), w.data() + t.u()));
      if (in_rectangle(fr, pos, target)) return false;
    }
  }
  return true;
}

// Alice's step-scheduled avoidance against a single rectangle; steps * r rounds.
template <class Real>
WinReport<Real> run_winning_game(const Tiling<Real>& t, const TargetRectangle<Real>& target, const GameParams& p,
                                 BobAdversary<Real>& bob, int steps, std::uint64_t seed) {
  if (steps < 1) fail(ErrorCode::InvalidParams, "steps >= 1");
  const int rab = p.r * (p.a + p.b);
  const int horizon = steps * rab;
  OrbitCache orbit(t.model(), t.base());
  WinReport<Real> rep;
  rep.horizon = horizon;
  std::vector<Obstacle<Real>> current;

  Strategy<Real> alice = [&](const MoveContext<Real>& c) {
    const int k = c.turn;
    const Atom<Real>& b = c.transcript.last();
    if ((k - 1) % p.r == 0) {
      const int j = (k - 1) / p.r;
      const int hi = j == steps - 1 ? horizon : (j + 1) * rab - 1;
      current = enumerate_obstacles(t, orbit, target, b, j * rab, hi, p.mode);
      rep.obstacles_seen += static_cast<long>(current.size());
    }
    auto res = p.mode == Mode::Guaranteed ? avoidance_move(t, b, p.a, current, p.eta)
                                             : greedy_move(t, b, p.a, current);
    rep.branches.push_back(res.branch);
    return res.atom;
  };
  Atom<Real> start = bob.opening(p.n1, hash_combine(seed, 0x0bULL));
  rep.transcript = modified_play(t, alice, bob.strategy(), p.a, p.b, start, steps * p.r, seed);
  const auto& fin = rep.transcript.last();
  rep.obstacles_final = static_cast<long>(enumerate_obstacles(t, orbit, target, fin, 0, horizon).size());
  rep.orbit_avoids = orbit_check(t, orbit, target, fin, horizon);
  return rep;
}

// Target index (1-based) served at Alice's turn k, 0 for a neutral move.
inline int interleaved_target(int turn, int targets) {
  int t = 1;
  while (turn % 2 == 0) {
    turn /= 2;
    ++t;
  }
  return t <= targets ? t : 0;
}

inline int interleaved_gap(int a, int b, int t) { return b + ((1 << t) - 1) * (a + b); }

template <class Real>
struct InterleavedTarget {
  TargetRectangle<Real> rect;
  int r = 1;
  int steps = 1;
};

template <class Real>
struct InterleavedReport {
  Transcript<Real> transcript;
  std::vector<int> horizons;
  std::vector<long> obstacles_final;
  std::vector<bool> orbit_avoids;
  bool success() const {
    for (std::size_t i = 0; i < horizons.size(); ++i)
      if (obstacles_final[i] != 0 || !orbit_avoids[i]) return false;
    return true;
  }
};

// Several targets at once: target t plays on turns k = 2^(t-1) mod 2^t with gap b + (2^t - 1)(a + b).
template <class Real>
InterleavedReport<Real> run_interleaved_game(const Tiling<Real>& t, const std::vector<InterleavedTarget<Real>>& ts,
                                             int a, int b, int n1, BobAdversary<Real>& bob, std::uint64_t seed) {
  const int T = static_cast<int>(ts.size());
  if (T < 1 || T > 20) fail(ErrorCode::InvalidParams, "between 1 and 20 targets");
  OrbitCache orbit(t.model(), t.base());
  int rounds = 0;
  InterleavedReport<Real> rep;
  for (int i = 1; i <= T; ++i) {
    const auto& g = ts[i - 1];
    rounds = std::max(rounds, (1 << (i - 1)) + (1 << i) * (g.steps * g.r - 1));
    rep.horizons.push_back(g.steps * g.r * (a + interleaved_gap(a, b, i)));
  }
  std::vector<std::vector<Obstacle<Real>>> current(T);
  Strategy<Real> alice = [&](const MoveContext<Real>& c) {
    const Atom<Real>& bob_atom = c.transcript.last();
    const int i = interleaved_target(c.turn, T);
    if (i == 0) return t.descend(bob_atom, a);
    const auto& g = ts[i - 1];
    const int bi = interleaved_gap(a, b, i);
    const int s = (c.turn - (1 << (i - 1))) / (1 << i) + 1;
    const int rab = g.r * (a + bi);
    if ((s - 1) % g.r == 0) {
      const int j = (s - 1) / g.r;
      const int hi = j == g.steps - 1 ? rep.horizons[i - 1] : (j + 1) * rab - 1;
      if (j < g.steps) current[i - 1] = enumerate_obstacles(t, orbit, g.rect, bob_atom, j * rab, hi);
      else current[i - 1].clear();
    }
    return greedy_move(t, bob_atom, a, current[i - 1]).atom;
  };
  Atom<Real> start = bob.opening(n1, hash_combine(seed, 0x0bULL));
  rep.transcript = modified_play(t, alice, bob.strategy(), a, b, start, rounds, seed);
  const auto& fin = rep.transcript.last();
  for (int i = 0; i < T; ++i) {
    rep.obstacles_final.push_back(
        static_cast<long>(enumerate_obstacles(t, orbit, ts[i].rect, fin, 0, rep.horizons[i]).size()));
    rep.orbit_avoids.push_back(orbit_check(t, orbit, ts[i].rect, fin, rep.horizons[i]));
  }
  return rep;
}

}  // namespace schmidt
