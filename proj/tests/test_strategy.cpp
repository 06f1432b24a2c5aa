#include <catch_amalgamated.hpp>

#include <schmidt/strategy.hpp>

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

// (1/2, 0) has period 3 under the cat map; the leaf through it returns to the target.
const RationalPoint kPeriodic{{1, 0}, 2};

TilingParams tp() {
  TilingParams p;
  p.delta = 0.05;
  p.tau = 0.01;
  p.seed = 5;
  return p;
}

}  // namespace

TEST_CASE("derived parameters for the cat map", "[strategy]") {
  auto m = preset("cat2");
  auto p = derive_params(m, 0.05, 0.01, 0.2, 3, 0.01);
  CHECK(p.a_star == 2);
  CHECK(p.a == 3);
  CHECK(p.r == 22);
  CHECK(p.n1 == 140);
  CHECK(p.horizon(1) == 132);
  for (const auto& e : p.ledger) CHECK(e.holds);
  const double expect = std::log(0.99 * 0.05 / 2) - (140 + 132 + 3) * std::log(m.sigma2);
  CHECK_THAT(p.log_c, WithinAbs(expect, 1e-9));
  CHECK(code_of([&] { derive_params(m, 0.05, 0.01, 0.3, 3, 0.01); }) == ErrorCode::InvalidParams);
  CHECK(code_of([&] { derive_params(m, 0.05, 0.01, 0.2, 2, 0.01); }) == ErrorCode::InvalidParams);
  CHECK(code_of([&] { derive_params(m, 0.05, 0.01, 0.2, 3, 0.0); }) == ErrorCode::InvalidParams);
}

TEST_CASE("ledger flags violated practical conditions", "[strategy]") {
  auto m = preset("cat2");
  auto p = practical_params(m, 0.05, 0.01, 0.2, 3, 3, 1, 6, 1e-6);
  bool r_decay = true;
  for (const auto& e : p.ledger)
    if (e.name == "r_decay") r_decay = e.holds;
  CHECK_FALSE(r_decay);
  CHECK(code_of([&] { practical_params(m, 0.05, 0.01, 0.2, 2, 3, 1, 6, 1e-6); }) == ErrorCode::InvalidParams);
}

TEST_CASE("rectangle membership on the circle", "[strategy]") {
  auto m = preset("doubling");
  auto fr = make_frame<double>(m);
  TargetRectangle<double> r{RationalPoint{{7}, 8}, 0.25};
  CHECK(in_rectangle(fr, {0.8}, r));
  CHECK(in_rectangle(fr, {0.99}, r));
  CHECK_FALSE(in_rectangle(fr, {0.7}, r));
  CHECK_FALSE(in_rectangle(fr, {0.01}, r));
}

TEST_CASE("obstacles match a brute-force orbit scan", "[strategy]") {
  Tiling<double> t(preset("cat2"), tp(), kPeriodic);
  OrbitCache orbit(t.model(), t.base());
  TargetRectangle<double> r{kPeriodic, 2e-3};
  const auto& fr = t.frame();
  for (int n : {0, 3, 5}) {
    auto atoms = t.level(n);
    for (std::size_t ai = 0; ai < atoms.size(); ai += std::max<std::size_t>(1, atoms.size() / 6)) {
      const auto& a = atoms[ai];
      auto obs = enumerate_obstacles(t, orbit, r, a, 0, 8);
      const int samples = 4000;
      for (int s = 1; s < samples; ++s) {
        double x = a.cell.lo() + (a.cell.hi() - a.cell.lo()) * s / samples;
        for (int k = 0; k <= 8; ++k) {
          double w = x * std::pow(fr.sigma1, k - n);
          bool inside = in_rectangle(fr, torus_position(fr, orbit.at(k), std::vector<double>{w}), r);
          bool covered = false, near = false;
          for (const auto& o : obs) {
            if (o.k != k) continue;
            covered |= o.region.contains({x});
            near |= o.region.depth({x}) > -1e-9 * (a.cell.hi() - a.cell.lo());
          }
          if (inside) CHECK(near);
          if (covered) CHECK(inside);
        }
      }
    }
  }
}

TEST_CASE("guaranteed mode rejects split obstacles", "[strategy]") {
  Tiling<double> t(preset("cat2"), tp(), kPeriodic);
  OrbitCache orbit(t.model(), t.base());
  TargetRectangle<double> r{kPeriodic, 0.05};
  auto root = t.root_atom();
  auto obs = enumerate_obstacles(t, orbit, r, root, 12, 12);
  REQUIRE(obs.size() > 1);
  CHECK(code_of([&] { enumerate_obstacles(t, orbit, r, root, 12, 12, Mode::Guaranteed); }) ==
        ErrorCode::MultipleComponents);
}

TEST_CASE("dichotomy move", "[strategy]") {
  Tiling<double> t(preset("cat2"), tp(), kPeriodic);
  auto bob = t.atom_at(4, {0.01});
  // No obstacles: the deep branch.
  auto res = avoidance_move<double>(t, bob, 3, {}, 0.2);
  CHECK(res.branch == 1);
  CHECK(res.atom.key == t.descend(bob, 3).key);
  // A tiny obstacle at the deep child's centre forces the centre branch or a failure.
  auto deep = t.descend(bob, 3);
  Obstacle<double> small{0, deep.level, Cell<double>::box(deep.center, 1e-6), Cell<double>::box(deep.center, 1e-6)};
  res = avoidance_move<double>(t, bob, 3, {small}, 0.2);
  CHECK(res.branch == 2);
  CHECK(res.avoided == 1);
  // An obstacle filling Bob's atom cannot be avoided.
  Obstacle<double> all{0, bob.level, bob.cell, bob.cell};
  CHECK(code_of([&] { avoidance_move<double>(t, bob, 3, {all}, 0.2); }) == ErrorCode::DichotomyFailure);
  CHECK(code_of([&] { avoidance_move<double>(t, bob, 3, {}, 0.25); }) == ErrorCode::InvalidParams);
  auto g = greedy_move<double>(t, bob, 3, {small});
  CHECK(g.avoided == 1);
}

TEST_CASE("practical strategy wins against every Bob", "[strategy]") {
  Tiling<double> t(preset("cat2"), tp(), kPeriodic);
  TargetRectangle<double> r{kPeriodic, 1e-6};
  auto p = practical_params(t.model(), 0.05, 0.01, 0.2, 3, 3, 1, 6, 1e-6);
  long seen = 0;
  for (auto kind : {BobKind::Random, BobKind::CenterSeeking, BobKind::ObstacleHugging})
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
      BobAdversary<double> bob(kind, t, r, p.horizon(2));
      auto rep = run_winning_game(t, r, p, bob, 2, seed);
      CHECK(rep.success());
      CHECK(rep.transcript.moves.size() == 4);
      seen += rep.obstacles_seen;
    }
  // Center-seeking and hugging Bobs drive the play onto the periodic orbit.
  CHECK(seen > 0);
}

TEST_CASE("neutral Alice loses to an obstacle-hugging Bob", "[strategy]") {
  Tiling<double> t(preset("cat2"), tp(), kPeriodic);
  TargetRectangle<double> r{kPeriodic, 4e-3};
  OrbitCache orbit(t.model(), t.base());
  int lost = 0;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    BobAdversary<double> bob(BobKind::ObstacleHugging, t, r, 12);
    Atom<double> start = bob.opening(6, seed);
    auto tr = modified_play(t, neutral_strategy<double>(), bob.strategy(), 3, 3, start, 2, seed);
    lost += !enumerate_obstacles(t, orbit, r, tr.last(), 0, 12).empty();
  }
  CHECK(lost > 0);
}

TEST_CASE("interleaving schedule", "[strategy]") {
  std::vector<int> got;
  for (int k = 1; k <= 8; ++k) got.push_back(interleaved_target(k, 3));
  CHECK(got == std::vector<int>{1, 2, 1, 3, 1, 2, 1, 0});
  CHECK(interleaved_gap(3, 3, 1) == 9);
  CHECK(interleaved_gap(3, 3, 2) == 21);
}

TEST_CASE("interleaved game avoids two targets", "[strategy]") {
  Tiling<double> t(preset("cat2"), tp(), kPeriodic);
  std::vector<InterleavedTarget<double>> ts{{{kPeriodic, 1e-11}, 1, 1}, {{RationalPoint{{0, 0}, 1}, 1e-11}, 1, 1}};
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    BobAdversary<double> bob(BobKind::CenterSeeking, t, ts[0].rect, 24);
    auto rep = run_interleaved_game(t, ts, 3, 3, 14, bob, seed);
    CHECK(rep.horizons == std::vector<int>{12, 24});
    CHECK(rep.success());
  }
}

TEST_CASE("guaranteed-parameter game in high precision", "[strategy][slow]") {
  auto m = preset("cat2");
  auto p = derive_params(m, 0.05, 0.01, 0.2, 3, 0.01);
  Tiling<HighPrecision> t(m, tp(), kPeriodic);
  TargetRectangle<HighPrecision> r{kPeriodic, c_value(t, p)};
  CHECK_THAT(to_double(log(r.c)), WithinAbs(p.log_c, 1e-6));
  BobAdversary<HighPrecision> bob(BobKind::CenterSeeking, t, r, p.horizon(1));
  auto rep = run_winning_game(t, r, p, bob, 1, 7);
  CHECK(rep.success());
  CHECK(rep.transcript.moves.size() == 2 * 22);
}
