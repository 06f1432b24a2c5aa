#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "fractal.hpp"

namespace schmidt {

// Stage measure of the game tree below `root`, expanded on demand.
template <class Real>
class LeafMeasure {
 public:
  LeafMeasure(const Tiling<Real>& t, Responder<Real> alice, const Atom<Real>& root, int b, int depth)
      : t_(t), alice_(std::move(alice)), b_(b), depth_(depth) {
    add(root, 1.0, 0);
  }

  std::size_t size() const { return nodes_.size(); }
  int depth() const { return depth_; }

  // Upper bound on the mass of a base-coordinate region: nodes finer than `resolution` count whole.
  double mass(const Cell<Real>& region, double resolution) {
    auto [rlo, rhi] = region.bounds();
    std::vector<double> lo, hi;
    for (std::size_t d = 0; d < rlo.size(); ++d) {
      lo.push_back(to_double(rlo[d]));
      hi.push_back(to_double(rhi[d]));
    }
    double total = 0;
    std::vector<int> stack{0};
    while (!stack.empty()) {
      int i = stack.back();
      stack.pop_back();
      const Node& nd = nodes_[i];
      bool apart = false, inside_box = true;
      for (std::size_t d = 0; d < lo.size(); ++d) {
        apart = apart || nd.hi[d] < lo[d] || nd.lo[d] > hi[d];
        inside_box = inside_box && nd.lo[d] >= lo[d] && nd.hi[d] <= hi[d];
      }
      if (apart || !nd.base.intersects(region)) continue;
      if (nd.depth >= depth_ || nd.diam <= resolution || (inside_box && region.contains_cell(nd.base))) {
        total += nd.weight;
        continue;
      }
      for (int k : expand(i)) stack.push_back(k);
    }
    return total;
  }

  // A point of the support, drawn from the measure down to `resolution`.
  std::vector<Real> sample(Rng& rng, double resolution) {
    int i = 0;
    while (nodes_[i].depth < depth_ && nodes_[i].diam > resolution) {
      const auto kids = expand(i);
      double u = rng.uniform() * nodes_[i].weight, acc = 0;
      int pick = kids.back();
      for (int k : kids) {
        acc += nodes_[k].weight;
        if (u < acc) {
          pick = k;
          break;
        }
      }
      i = pick;
    }
    return nodes_[i].base.centroid();
  }

  long double level_mass(int l) {
    long double s = 0;
    std::vector<int> stack{0};
    while (!stack.empty()) {
      int i = stack.back();
      stack.pop_back();
      if (nodes_[i].depth == l) {
        s += nodes_[i].weight;
        continue;
      }
      for (int k : expand(i)) stack.push_back(k);
    }
    return s;
  }

 private:
  struct Node {
    Atom<Real> atom;
    double weight;
    int depth;
    std::vector<int> kids;
    bool expanded;
    Cell<Real> base;  // atom in base leaf coordinates
    std::vector<double> lo, hi;
    double diam;
  };

  void add(Atom<Real> a, double w, int d) {
    Cell<Real> base = t_.image(a, -a.level);
    auto [blo, bhi] = base.bounds();
    std::vector<double> lo, hi;
    for (std::size_t k = 0; k < blo.size(); ++k) {
      lo.push_back(to_double(blo[k]));
      hi.push_back(to_double(bhi[k]));
    }
    const double diam = to_double(base.diameter());
    nodes_.push_back({std::move(a), w, d, {}, false, std::move(base), std::move(lo), std::move(hi), diam});
  }

  std::vector<int> expand(int i) {
    if (nodes_[i].expanded) return nodes_[i].kids;
    std::vector<Atom<Real>> kids;
    for (const auto& th : t_.children(nodes_[i].atom, b_))
      if (auto r = alice_(th)) kids.push_back(std::move(*r));
    Real s(0);
    for (const auto& k : kids) s += k.cell.volume();
    if (!(s > 0)) fail(ErrorCode::ZeroDensity, "leaf node without child volume");
    const double w = nodes_[i].weight;
    const int d = nodes_[i].depth + 1;
    std::vector<int> ids;
    for (auto& k : kids) {
      double wk = w * to_double(k.cell.volume() / s);
      ids.push_back(static_cast<int>(nodes_.size()));
      add(std::move(k), wk, d);
    }
    nodes_[i].kids = ids;
    nodes_[i].expanded = true;
    return ids;
  }

  const Tiling<Real>& t_;
  Responder<Real> alice_;
  int b_, depth_;
  std::vector<Node> nodes_;
};

// Leaf ball as a base-coordinate cell; disks become circumscribed 32-gons.
template <class Real>
Cell<Real> leaf_ball(const std::vector<Real>& z, double r) {
  if (z.size() == 1) return Cell<Real>::interval(z[0] - Real(r), z[0] + Real(r));
  return regular_polygon(z, Real(r / std::cos(std::acos(-1.0) / 32)), 32);
}

struct ScalingReport {
  std::vector<double> scales;
  std::vector<double> masses;  // max over sampled centres
  LineFit fit;
  double target = 0;  // exponent the bound asks for
  double C = 0;       // max mass / r^target
  int samples = 0;
  int l0 = 0;
  bool passed = false;
  double exponent() const { return fit.slope; }
};

// Smallest l0 with C_l(z) inside B_{l-l0}(z) and B_l(z) inside C_{l-l0}(z) at ratio rho.
inline int sandwich_offset(const ToralModel& m, double rho = 0.5) {
  const auto fr = make_frame<double>(m);
  const int n = m.n;
  double R = 0;
  for (int code = 0; code < (1 << n); ++code) {
    Eigen::VectorXd s(n);
    for (int i = 0; i < n; ++i) s(i) = (code >> i & 1) ? 1.0 : -1.0;
    R = std::max(R, (fr.f * s).norm());
  }
  double finv = 0;
  for (int i = 0; i < n; ++i) finv = std::max(finv, fr.finv.row(i).norm());
  auto need = [&](double x) { return x <= 1 ? 0 : static_cast<int>(std::ceil(std::log(x) / std::log(1 / rho) - 1e-12)); };
  return std::max(need(R), need(finv));
}

template <class Real>
ScalingReport leaf_ball_check(LeafMeasure<Real>& mu, int u, const std::vector<double>& scales, int samples,
                              double eps, double tol, double delta, std::uint64_t seed) {
  ScalingReport rep;
  const double rmin = *std::min_element(scales.begin(), scales.end());
  const double rmax = *std::max_element(scales.begin(), scales.end());
  for (double r : scales)
    if (r <= delta / 4) rep.scales.push_back(r);
  if (rep.scales.size() < 3) fail(ErrorCode::WindowTooSmall, "fewer than 3 scales below delta/4");
  const double res = rmin / 20;
  Rng rng(seed);
  std::vector<std::vector<Real>> zs;
  for (int s = 0; s < samples * 20 && static_cast<int>(zs.size()) < samples; ++s) {
    auto z = mu.sample(rng, res);
    bool inside = true;
    for (const auto& x : z) {
      using std::abs;
      inside = inside && to_double(abs(x)) <= delta / 2 - rmax;
    }
    if (inside) zs.push_back(std::move(z));
  }
  if (zs.empty()) fail(ErrorCode::WindowTooSmall, "no sampled centre far enough from the domain edge");
  rep.samples = static_cast<int>(zs.size());
  rep.target = u - eps;
  std::vector<double> lx, ly;
  for (double r : rep.scales) {
    double best = 0;
    for (const auto& z : zs) best = std::max(best, mu.mass(leaf_ball(z, r), res));
    rep.masses.push_back(best);
    rep.C = std::max(rep.C, best / std::pow(r, rep.target));
    lx.push_back(std::log(r));
    ly.push_back(std::log(best));
  }
  rep.fit = fit_line(lx, ly);
  rep.passed = rep.exponent() >= rep.target - tol;
  return rep;
}

struct ProductOptions {
  int nodes = 32;
  int a = 3, b = 12, depth = 6;
  double c = 1e-6;  // target rectangle size; 0 gives neutral trees
  RationalPoint target{{1, 0}, 2};
  TilingParams tiling;
  int threads = 0;
  bool lebesgue = false;  // leaf measures proportional to volume
};

// Quadrature of leaf measures over a uniform grid of plaques through x0 + B_c s.
class ProductMeasure {
 public:
  ProductMeasure(const ToralModel& m, const RationalPoint& x0, const ProductOptions& opt)
      : model_(m), opt_(opt), frame_(make_frame<double>(m)) {
    const int nc = m.n - m.u;
    if (nc < 1) fail(ErrorCode::InvalidParams, "product measure needs a transversal direction");
    if (opt.nodes < 16 || opt.nodes > 64) fail(ErrorCode::InvalidParams, "16 to 64 transversal nodes");
    const int side = static_cast<int>(std::lround(std::pow(opt.nodes, 1.0 / nc)));
    long count = 1;
    for (int i = 0; i < nc; ++i) count *= side;
    if (count != opt.nodes) fail(ErrorCode::InvalidParams, "node count must be a perfect power of the transversal rank");
    const double delta = opt.tiling.delta;
    spacing_ = delta / side;
    const auto x0r = x0.to_real<double>();
    for (long j = 0; j < count; ++j) {
      Eigen::VectorXd s(nc);
      long c = j;
      for (int i = 0; i < nc; ++i, c /= side) s(i) = (static_cast<double>(c % side) + 0.5) * spacing_ - delta / 2;
      Eigen::VectorXd off = frame_.f.rightCols(nc) * s;
      std::vector<double> p(m.n);
      for (int i = 0; i < m.n; ++i) p[i] = x0r[i] + off(i);
      RationalPoint xj = RationalPoint::from_double(p);
      for (auto& v : xj.num) v = ((v % xj.den) + xj.den) % xj.den;
      const auto xr = xj.to_real<double>();
      Eigen::VectorXd local(m.n);
      for (int i = 0; i < m.n; ++i) {
        double d = xr[i] - x0r[i];
        local(i) = d - std::floor(d + 0.5);
      }
      offsets_.push_back(local);
      points_.push_back(std::move(xj));
      weights_.push_back(1.0 / count);
    }
    tilings_.resize(count);
    leaves_.resize(count);
    parallel_for(static_cast<std::size_t>(count), opt.threads, [&](std::size_t j) {
      tilings_[j] = std::make_unique<Tiling<double>>(model_, opt_.tiling, points_[j]);
      Responder<double> alice = [](const Atom<double>& th) { return std::optional<Atom<double>>(th); };
      if (!opt_.lebesgue) alice = avoidance_responder<double>(*tilings_[j], {opt_.target, opt_.c}, opt_.a);
      leaves_[j] = std::make_unique<LeafMeasure<double>>(*tilings_[j], alice, tilings_[j]->root_atom(), opt_.b,
                                                         opt_.depth);
    });
  }

  std::size_t size() const { return points_.size(); }
  const ToralModel& model() const { return model_; }
  double spacing() const { return spacing_; }
  const LeafFrame<double>& frame() const { return frame_; }
  const ProductOptions& options() const { return opt_; }
  const RationalPoint& point(std::size_t j) const { return points_[j]; }
  double weight(std::size_t j) const { return weights_[j]; }
  LeafMeasure<double>& leaf(std::size_t j) { return *leaves_[j]; }

  // Local ambient point of plaque j at leaf coordinate s.
  Eigen::VectorXd ambient(std::size_t j, const std::vector<double>& s) const {
    Eigen::VectorXd v = offsets_[j];
    for (int i = 0; i < model_.u; ++i) v += frame_.bu.col(i) * s[i];
    return v;
  }

  // Slice of the ambient ball B(z, r) through plaque j, in its leaf coordinates; empty if none.
  std::optional<Cell<double>> slice(std::size_t j, const Eigen::VectorXd& z, double r) const {
    Eigen::VectorXd d = z - offsets_[j];
    Eigen::VectorXd s0 = frame_.bu.transpose() * d;
    double perp2 = (d - frame_.bu * s0).squaredNorm();
    if (perp2 >= r * r) return std::nullopt;
    std::vector<double> c(s0.data(), s0.data() + s0.size());
    return leaf_ball(c, std::sqrt(r * r - perp2));
  }

  // Per-plaque masses of every ball, then an ordered reduction over plaques.
  std::vector<double> ball_masses(const std::vector<std::pair<Eigen::VectorXd, double>>& balls, double res) {
    std::vector<std::vector<double>> per(size(), std::vector<double>(balls.size(), 0.0));
    parallel_for(size(), opt_.threads, [&](std::size_t j) {
      for (std::size_t q = 0; q < balls.size(); ++q)
        if (auto cell = slice(j, balls[q].first, balls[q].second)) per[j][q] = leaves_[j]->mass(*cell, res);
    });
    std::vector<double> out(balls.size(), 0.0);
    for (std::size_t j = 0; j < size(); ++j)
      for (std::size_t q = 0; q < balls.size(); ++q) out[q] += weights_[j] * per[j][q];
    return out;
  }

 private:
  ToralModel model_;
  ProductOptions opt_;
  LeafFrame<double> frame_;
  double spacing_ = 0;
  std::vector<RationalPoint> points_;
  std::vector<Eigen::VectorXd> offsets_;
  std::vector<double> weights_;
  std::vector<std::unique_ptr<Tiling<double>>> tilings_;
  std::vector<std::unique_ptr<LeafMeasure<double>>> leaves_;
};

inline ScalingReport product_ball_check(ProductMeasure& pm, int samples, const std::vector<double>& scales, double eps,
                                        double tol, std::uint64_t seed) {
  ScalingReport rep;
  const double delta = pm.options().tiling.delta;
  const int n = pm.frame().n;
  for (double r : scales)
    if (r >= 2 * pm.spacing() && r <= delta / 4) rep.scales.push_back(r);
  if (rep.scales.size() < 3) fail(ErrorCode::WindowTooSmall, "fewer than 3 scales inside [2 spacing, delta/4]");
  const double rmin = *std::min_element(rep.scales.begin(), rep.scales.end());
  const double rmax = *std::max_element(rep.scales.begin(), rep.scales.end());
  const double res = rmin / 20;
  Rng rng(seed);
  std::vector<Eigen::VectorXd> zs;
  for (int s = 0; s < samples * 20 && static_cast<int>(zs.size()) < samples; ++s) {
    std::size_t j = rng.index(pm.size());
    Rng leaf_rng(hash_combine(seed, static_cast<std::uint64_t>(s)));
    auto w = pm.leaf(j).sample(leaf_rng, res);
    Eigen::VectorXd z = pm.ambient(j, w);
    Eigen::VectorXd beta = pm.frame().finv * z;
    if (beta.cwiseAbs().maxCoeff() <= delta / 2 - rmax) zs.push_back(z);
  }
  if (zs.empty()) fail(ErrorCode::WindowTooSmall, "no sampled centre far enough from the box edge");
  rep.samples = static_cast<int>(zs.size());
  rep.target = n - eps;
  rep.l0 = sandwich_offset(pm.model(), 0.5);
  std::vector<std::pair<Eigen::VectorXd, double>> balls;
  for (double r : rep.scales)
    for (const auto& z : zs) balls.push_back({z, r});
  auto m = pm.ball_masses(balls, res);
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < rep.scales.size(); ++i) {
    double best = 0;
    for (std::size_t q = 0; q < zs.size(); ++q) best = std::max(best, m[i * zs.size() + q]);
    rep.masses.push_back(best);
    rep.C = std::max(rep.C, best / std::pow(rep.scales[i], rep.target));
    lx.push_back(std::log(rep.scales[i]));
    ly.push_back(std::log(best));
  }
  rep.fit = fit_line(lx, ly);
  rep.passed = rep.exponent() >= rep.target - tol;
  return rep;
}

}  // namespace schmidt
