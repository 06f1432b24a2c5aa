#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "tiling.hpp"

namespace schmidt {

struct PropertyCheck {
  PropertyCheck() = default;
  PropertyCheck(std::string n) : name(std::move(n)) {}

  std::string name;
  bool passed = true;
  bool skipped = false;
  long checked = 0;
  long violations = 0;
  std::string detail;
};

struct PropertyReport {
  std::vector<PropertyCheck> checks;

  bool all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed || c.skipped; });
  }
  const PropertyCheck* find(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
};

struct VerifyOptions {
  int msg0_max_m = 8;
  int a = 3;
  std::vector<int> bs = {3, 4};
  int msg1_samples = 200;
  double distortion = 1;
  std::uint64_t seed = 11;
};

namespace detail {

inline void tally(PropertyCheck& c, bool ok) {
  ++c.checked;
  if (!ok) {
    ++c.violations;
    c.passed = false;
  }
}

}  // namespace detail

// Checks the tiling axioms, MSG0-2 and the volume conditions on levels 0..depth.
template <class Real>
PropertyReport verify_properties(const Tiling<Real>& t, int depth, const VerifyOptions& opt = {}) {
  using std::log;
  PropertyReport rep;
  const double delta = t.params().delta, tau = t.params().tau;
  const double sigma1 = t.model().sigma1, sigma2 = t.model().sigma2;
  const double c_const = 2 * (1 + tau) * delta;
  const double sigma = std::log(sigma1);
  const int u = t.u();

  std::vector<std::vector<Atom<Real>>> levels;
  for (int n = 0; n <= depth; ++n) levels.push_back(t.level(n));

  PropertyCheck sandwich{"tiling.sandwich"}, disjoint{"tiling.disjoint"}, cover{"tiling.cover"};
  PropertyCheck msg2{"MSG2"}, nu1{"nu1"};
  double min_in = 1e300, max_out = 0;
  for (int n = 0; n <= depth; ++n) {
    const auto& lv = levels[n];
    const Cell<Real> dom = t.domain(n);
    for (const auto& a : lv) {
      double in = to_double(a.cell.depth(a.center)) / delta;
      double out = to_double(a.cell.max_radius(a.center)) / delta;
      min_in = std::min(min_in, in);
      max_out = std::max(max_out, out);
      detail::tally(sandwich, in >= (1 - tau) / 2 && out <= 1 + tau);
      detail::tally(cover, a.cell.intersects(dom));
      detail::tally(nu1, a.cell.volume() > 0);
      double diam = to_double(t.base_diameter(a));
      detail::tally(msg2, std::log(diam) <= std::log(c_const) - sigma * n + 1e-9);
    }
    if (u == 1) {
      for (std::size_t i = 0; i + 1 < lv.size(); ++i) {
        detail::tally(disjoint, lv[i].cell.hi() <= lv[i + 1].cell.lo());
        detail::tally(cover, lv[i].cell.hi() >= lv[i + 1].cell.lo());
      }
      detail::tally(cover, !lv.empty() && lv.front().cell.lo() <= dom.lo() && lv.back().cell.hi() >= dom.hi());
    } else {
      for (std::size_t i = 0; i < lv.size(); ++i)
        for (std::size_t j = i + 1; j < lv.size(); ++j) {
          Real dx = lv[i].center[0] - lv[j].center[0], dy = lv[i].center[1] - lv[j].center[1];
          if (dx * dx + dy * dy > Real(4.1) * t.delta() * t.delta()) continue;
          detail::tally(disjoint, !lv[i].cell.intersects(lv[j].cell, t.delta() * Real(1e-9)));
        }
      // Sample the domain on a fine grid and the domain vertices.
      auto [lo, hi] = dom.bounds();
      std::vector<std::vector<Real>> probes;
      for (const auto& v : dom.v) probes.push_back({v[0], v[1]});
      const int g = 60;
      for (int i = 0; i <= g; ++i)
        for (int j = 0; j <= g; ++j) {
          std::vector<Real> p{lo[0] + (hi[0] - lo[0]) * Real(i) / g, lo[1] + (hi[1] - lo[1]) * Real(j) / g};
          if (dom.contains_closed(p)) probes.push_back(p);
        }
      for (const auto& p : probes) {
        bool hit = false;
        for (const auto& a : lv)
          if (a.cell.contains_closed(p)) {
            hit = true;
            break;
          }
        detail::tally(cover, hit);
      }
    }
  }
  {
    std::ostringstream os;
    os << "inner/delta min " << min_in << ", outer/delta max " << max_out;
    sandwich.detail = os.str();
  }

  PropertyCheck msg0{"MSG0"};
  const int a_star = t.a_star();
  if (depth <= a_star) {
    msg0.skipped = true;
    msg0.detail = "insufficient depth: need depth > a* = " + std::to_string(a_star);
  } else {
    for (int n = 0; n <= depth; ++n)
      for (int m = a_star + 1; m <= std::min(opt.msg0_max_m, depth - n); ++m)
        for (const auto& a : levels[n]) {
          bool ok = true;
          try {
            t.descend(a, m);
          } catch (const Error&) {
            ok = false;
          }
          detail::tally(msg0, ok);
        }
    msg0.detail = "m in (" + std::to_string(a_star) + ", " + std::to_string(opt.msg0_max_m) + "]";
  }

  PropertyCheck msg1{"MSG1"};
  {
    Rng rng(opt.seed);
    const double rmin = 3 * c_const * std::pow(sigma1, -depth);
    for (int s = 0; s < opt.msg1_samples; ++s) {
      std::vector<Real> c(u);
      for (auto& x : c) x = Real((rng.uniform() - 0.5) * delta);
      double r = rmin + rng.uniform() * (delta / 2 - rmin);
      if (r <= rmin) continue;
      bool found = false;
      for (int n = 0; n <= depth && !found; ++n) {
        if (c_const * std::pow(sigma1, -n) >= r) continue;
        try {
          auto a = t.atom_containing(c, n);
          auto pull = t.image(a, -n);
          found = to_double(pull.max_radius(c)) < r;
        } catch (const Error&) {
        }
      }
      detail::tally(msg1, found);
    }
  }

  PropertyCheck nu2{"nu2"};
  const double ca = density_constant(tau, opt.a, a_star, sigma1, sigma2, u, opt.distortion);
  double min_ratio = 1e300;
  for (int b : opt.bs) {
    if (b <= a_star) continue;
    for (int n = 0; n + opt.a + b <= depth; ++n)
      for (const auto& w : levels[n]) {
        Real total(0);
        for (const auto& th : t.children(w, b)) {
          auto kids = t.children(th, opt.a);
          if (kids.empty()) continue;
          Real mv = kids.front().cell.volume();
          for (const auto& k : kids) mv = std::min(mv, k.cell.volume());
          total += mv;
        }
        double ratio = to_double(total / t.image(w, opt.a + b).volume());
        min_ratio = std::min(min_ratio, ratio);
        detail::tally(nu2, ratio >= ca);
      }
  }
  if (nu2.checked == 0) {
    nu2.skipped = true;
    nu2.detail = "insufficient depth for a + b";
  } else {
    std::ostringstream os;
    os << "min density " << min_ratio << " vs c(a) " << ca;
    nu2.detail = os.str();
  }

  rep.checks = {sandwich, disjoint, cover, msg0, msg1, msg2, nu1, nu2};
  return rep;
}

}  // namespace schmidt
