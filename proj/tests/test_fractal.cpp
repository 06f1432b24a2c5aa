#include <catch_amalgamated.hpp>

#include <Eigen/Eigenvalues>

#include <schmidt/measure.hpp>

using namespace schmidt;
using Catch::Matchers::WithinAbs;

namespace {

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Precondition;
}

TilingParams tp() {
  TilingParams p;
  p.delta = 0.05;
  p.tau = 0.01;
  p.seed = 9;
  return p;
}

const double kLambda = (3 + std::sqrt(5.0)) / 2;

// Spectral radius of the transfer matrix on words of length m-1, by a dense eigensolver.
double dense_radius(int d, const std::string& w) {
  const int len = static_cast<int>(w.size()) - 1;
  int states = 1;
  for (int i = 0; i < len; ++i) states *= d;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(states, states);
  auto word = [&](int s) {
    std::string out(len, '0');
    for (int i = len - 1; i >= 0; --i, s /= d) out[i] = static_cast<char>('0' + s % d);
    return out;
  };
  for (int s = 0; s < states; ++s)
    for (int x = 0; x < d; ++x) {
      std::string e = word(s) + static_cast<char>('0' + x);
      if (e.find(w) != std::string::npos) continue;
      int t = len == 0 ? 0 : (s * d + x) % states;
      A(s, t) = 1;
    }
  return A.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("symbolic oracle values", "[fractal]") {
  const double phi = (1 + std::sqrt(5.0)) / 2;
  auto r = sft_oracle_dimension(2, "11");
  CHECK_THAT(r.dimension, WithinAbs(std::log2(phi), 1e-10));
  CHECK_THAT(r.dimension, WithinAbs(0.69424, 1e-4));
  CHECK_THAT(sft_oracle_dimension(2, "1").dimension, WithinAbs(0, 1e-12));
  CHECK_FALSE(sft_oracle_dimension(2, "1").empty);
  CHECK_THAT(sft_oracle_dimension(3, "2").dimension, WithinAbs(std::log(2.0) / std::log(3.0), 1e-10));
  auto e = sft_oracle_dimension(2, std::vector<std::string>{"0", "1"});
  CHECK(e.empty);
  CHECK(e.dimension == 0);
  CHECK(code_of([] { sft_oracle_dimension(2, "12"); }) == ErrorCode::InvalidParams);
  CHECK(code_of([] { sft_oracle_dimension(1, "0"); }) == ErrorCode::InvalidParams);
}

TEST_CASE("oracle agrees with a dense eigensolver", "[fractal]") {
  for (auto [d, w] : std::vector<std::pair<int, std::string>>{{2, "101"}, {2, "111"}, {3, "12"}, {3, "000"}, {4, "23"}}) {
    double rho = dense_radius(d, w);
    CHECK_THAT(sft_oracle_dimension(d, w).spectral_radius, WithinAbs(rho, 1e-8));
  }
}

TEST_CASE("box counting on known sets", "[fractal]") {
  std::vector<double> scales;
  for (int k = 2; k <= 7; ++k) scales.push_back(std::pow(3.0, -k));
  auto cantor = box_dimension(cantor_samples(4000, 30, 1), scales);
  CHECK_THAT(cantor.slope(), WithinAbs(std::log(2.0) / std::log(3.0), 0.05));

  std::vector<std::vector<double>> line;
  for (int i = 0; i < 20000; ++i) line.push_back({(i + 0.5) / 20000});
  CHECK_THAT(box_dimension(line, scales).slope(), WithinAbs(1.0, 0.05));

  std::vector<std::vector<double>> finite{{0.1}, {0.4}, {0.7}};
  std::vector<double> fine;
  for (int k = 10; k <= 15; ++k) fine.push_back(std::pow(2.0, -k));
  CHECK_THAT(box_dimension(finite, fine).slope(), WithinAbs(0.0, 1e-12));

  CHECK(code_of([&] { box_dimension({{0.3}, {0.3}}, scales); }) == ErrorCode::DegenerateFit);
  CHECK(code_of([&] { box_dimension(line, {0.1, 0.01}); }) == ErrorCode::Precondition);
}

TEST_CASE("closed-form dimension bound", "[fractal]") {
  const double ca = density_constant(0.01, 3, 2, kLambda, kLambda, 1);
  const double sigma = std::log(kLambda);
  CHECK_THAT(closed_form_bound(1, ca, sigma, 3, 3), WithinAbs(0.096, 0.001));
  CHECK_THAT(closed_form_bound(1, ca, sigma, 3, 27), WithinAbs(0.819, 0.001));
  double prev = -1e9;
  for (int b : {3, 6, 9, 12, 18, 27}) {
    double v = closed_form_bound(1, ca, sigma, 3, b);
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("stage measures on hand-built trees", "[fractal]") {
  TreeFamily<double> tr;
  tr.u = 1;
  Atom<double> root{0, 0, Cell<double>::interval(0, 1), {0.5}};
  Atom<double> one{1, 0, Cell<double>::interval(0.25, 0.75), {0.5}};
  tr.levels = {{{root, -1, 0, 1}}, {{one, 0, 0, 2}}, {}};
  tr.levels[2].push_back({Atom<double>{2, 0, Cell<double>::interval(0.25, 0.5), {0.375}}, 0, 0, 0});
  tr.levels[2].push_back({Atom<double>{2, 1, Cell<double>::interval(0.5, 0.75), {0.625}}, 0, 0, 0});
  auto w = stage_measures(tr);
  CHECK(w[1][0] == 1.0);
  CHECK(w[2][0] == 0.5);
  CHECK(w[2][1] == 0.5);
  tr.levels[1][0].child_count = 0;
  tr.levels[2].clear();
  CHECK(code_of([&] { stage_measures(tr); }) == ErrorCode::ZeroDensity);
}

TEST_CASE("cat-map game tree", "[fractal]") {
  Tiling<double> t(preset("cat2"), tp(), RationalPoint{{1, 0}, 2});
  auto alice = avoidance_responder<double>(t, {RationalPoint{{1, 0}, 2}, 1e-6}, 3);
  auto root = first_alice_atom(t, alice, 3);
  CHECK(root.level == 6);

  TreeOptions opt;
  opt.depth = 0;
  auto single = build_tree(t, alice, root, opt);
  CHECK(single.levels.size() == 1);
  CHECK(code_of([&] { dimension_lower_bound(single, 1); }) == ErrorCode::Precondition);

  opt.depth = 3;
  auto tr = build_tree(t, alice, root, opt);
  auto rep = check_tree(t, tr);
  for (const auto& c : rep.checks) {
    INFO(c.name << " " << c.detail);
    CHECK(c.passed);
  }
  CHECK(tr.density[0] >= 0.005416);
  for (int l = 0; l <= tr.depth(); ++l) {
    const int level = 6 + l * 6;
    CHECK(tr.log_d[l] <= std::log(2 * 1.01 * 0.05) - std::log(kLambda) * level + 1e-9);
  }
  auto w = stage_measures(tr);
  for (const auto& lv : w) CHECK(std::fabs(static_cast<double>(total_mass(lv)) - 1) < 1e-12);
  auto bound = dimension_lower_bound(tr, 1);
  CHECK(bound.eps_levels.size() == 3);
  CHECK(bound.bound >= bound.closed_form - 0.02);
}

TEST_CASE("doubling avoid set lies in the symbolic avoid set", "[fractal]") {
  Tiling<double> t(preset("doubling"), tp(), RationalPoint{{1}, 3});
  TargetRectangle<double> target{RationalPoint{{7}, 8}, 0.25};
  auto alice = avoidance_responder<double>(t, target, 4, true);
  TreeOptions opt;
  opt.a = 4;
  opt.b = 8;
  opt.depth = 2;
  opt.prune_lost = true;
  auto tr = build_tree(t, alice, t.root_atom(), opt);
  CHECK(tr.pruned > 0);
  auto pts = sample_limit_points(t, tr, 1000, 3);
  REQUIRE(pts.size() == 1000);
  const int final_level = 2 * 12;
  for (const auto& p : pts) {
    auto digits = binary_digits(1.0L / 3 + p[0], final_level + 2);
    CHECK(digits.find("11") == std::string::npos);
  }
  std::vector<double> scales;
  for (int k = 8; k <= 18; k += 2) scales.push_back(std::ldexp(1.0, -k));
  auto fit = box_dimension(pts, scales);
  CHECK(fit.slope() <= sft_oracle_dimension(2, "11").dimension + 0.05);
}

TEST_CASE("sandwich offset", "[fractal]") {
  CHECK(sandwich_offset(preset("cat2")) == 1);
  CHECK(sandwich_offset(preset("cat4_nonconformal")) >= 1);
}

TEST_CASE("leaf and product ball scaling", "[fractal]") {
  const std::vector<double> scales{0.0065, 0.008, 0.0095, 0.0115};
  ProductOptions lo;
  lo.nodes = 32;
  lo.b = 3;
  lo.depth = 3;
  lo.tiling = tp();
  lo.lebesgue = true;
  ProductMeasure leb(preset("cat2"), RationalPoint{{1, 0}, 2}, lo);
  auto flat = product_ball_check(leb, 6, scales, 0.0, 0.05, 4);
  CHECK(flat.l0 == 1);
  CHECK_THAT(flat.exponent(), WithinAbs(2.0, 0.05));

  ProductOptions po = lo;
  po.lebesgue = false;
  ProductMeasure pm(preset("cat2"), RationalPoint{{1, 0}, 2}, po);
  const double eps = 1 - closed_form_bound(1, density_constant(0.01, 3, 2, kLambda, kLambda, 1), std::log(kLambda), 3, 3);
  auto prod = product_ball_check(pm, 6, scales, eps, 0.1, 4);
  CHECK(prod.passed);
  CHECK(std::isfinite(prod.C));
  auto leaf = leaf_ball_check(pm.leaf(0), 1, scales, 6, eps, 0.1, 0.05, 4);
  CHECK(leaf.passed);
  CHECK(std::fabs(static_cast<double>(pm.leaf(0).level_mass(1)) - 1) < 1e-12);

  CHECK(code_of([&] { product_ball_check(pm, 4, {0.001, 0.002, 0.02}, eps, 0.1, 1); }) == ErrorCode::WindowTooSmall);
  ProductOptions bad = po;
  bad.nodes = 65;
  CHECK(code_of([&] { ProductMeasure(preset("cat2"), RationalPoint{{1, 0}, 2}, bad); }) == ErrorCode::InvalidParams);
}
