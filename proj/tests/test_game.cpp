#include <catch_amalgamated.hpp>

#include <sstream>

#include <schmidt/game.hpp>

using namespace schmidt;
using Catch::Matchers::WithinRel;

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

ClassicStrategy shrink_toward(std::vector<double> target, double factor) {
  return [target, factor](const ClassicTranscript& tr) {
    const Ball& prev = tr.moves.back().ball;
    Ball b{prev.center, prev.radius * factor};
    double room = prev.radius - b.radius;
    double d = 0;
    for (std::size_t i = 0; i < target.size(); ++i) d += (target[i] - prev.center[i]) * (target[i] - prev.center[i]);
    d = std::sqrt(d);
    double step = std::min(d, room);
    for (std::size_t i = 0; i < target.size(); ++i)
      if (d > 0) b.center[i] += (target[i] - prev.center[i]) * step / d;
    return b;
  };
}

const RationalPoint kBase{{1, 2}, 7};

}  // namespace

TEST_CASE("classic game radii and nesting") {
  auto tr = classic_play(shrink_toward({0.3}, 0.5), shrink_toward({-0.2}, 0.5), 0.5, 0.5, Ball{{0.0}, 1.0}, 20);
  CHECK(tr.moves.size() == 40);
  for (std::size_t i = 1; i < tr.moves.size(); ++i) {
    CHECK_THAT(tr.moves[i].ball.radius, WithinRel(tr.moves[i - 1].ball.radius * 0.5, 1e-12));
  }
  auto z = classic_limit_point(tr, 1e-9);
  CHECK(z.size() == 1);
  CHECK(code_of([&] { classic_limit_point(tr, 1e-20); }) == ErrorCode::NotConverged);
}

TEST_CASE("classic referee rejects illegal balls") {
  auto cheat = [](const ClassicTranscript& tr) {
    Ball b = tr.moves.back().ball;
    b.center[0] += b.radius;
    b.radius *= 0.5;
    return b;
  };
  CHECK(code_of([&] { classic_play(cheat, shrink_toward({0.0}, 0.5), 0.5, 0.5, Ball{{0.0}, 1.0}, 3); }) ==
        ErrorCode::IllegalMove);
  auto wrong_radius = [](const ClassicTranscript& tr) { return Ball{tr.moves.back().ball.center, tr.moves.back().ball.radius * 0.4}; };
  CHECK(code_of([&] { classic_play(wrong_radius, shrink_toward({0.0}, 0.5), 0.5, 0.5, Ball{{0.0}, 1.0}, 3); }) ==
        ErrorCode::IllegalMove);
  CHECK(code_of([&] { classic_play(wrong_radius, wrong_radius, 1.5, 0.5, Ball{{0.0}, 1.0}, 3); }) ==
        ErrorCode::InvalidParams);
}

TEST_CASE("modified game nests atoms") {
  auto m = preset("cat2");
  Tiling<double> t(m, {}, kBase);
  auto start = t.level(2)[1];
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto tr = modified_play(t, neutral_strategy<double>(), random_strategy<double>(), 3, 4, start, 4, seed);
    REQUIRE(tr.moves.size() == 8);
    CHECK(tr.last().level == 2 + 4 * 3 + 3 * 4);
    for (std::size_t i = 1; i < tr.moves.size(); ++i) {
      const auto& prev = tr.moves[i - 1].atom;
      const auto& cur = tr.moves[i].atom;
      CHECK(t.image(prev, cur.level - prev.level).contains_cell(cur.cell));
      CHECK(t.base_diameter(cur) <= 2 * 1.01 * 0.05 * std::pow(m.sigma1, -cur.level) * (1 + 1e-12));
    }
    auto z = limit_point(t, tr, 1e-8);
    auto pulled = t.image(tr.last(), -tr.last().level);
    CHECK(pulled.contains(z.w));
  }
}

TEST_CASE("modified referee errors") {
  auto m = preset("cat2");
  Tiling<double> t(m, {.max_level = 10}, kBase);
  auto start = t.level(1)[0];
  Strategy<double> wrong_level = [](const MoveContext<double>& c) {
    return c.tiling.descend(c.transcript.last(), c.level - c.transcript.last().level + 1);
  };
  CHECK(code_of([&] { modified_play(t, wrong_level, random_strategy<double>(), 3, 3, start, 2, 1); }) ==
        ErrorCode::IllegalMove);
  Strategy<double> outside = [](const MoveContext<double>& c) {
    auto img = c.tiling.image(c.transcript.last(), c.level - c.transcript.last().level);
    return c.tiling.atom_at(c.level, {img.hi() + 0.06});
  };
  CHECK(code_of([&] { modified_play(t, outside, random_strategy<double>(), 3, 3, start, 2, 1); }) ==
        ErrorCode::IllegalMove);
  Strategy<double> forged = [](const MoveContext<double>& c) {
    auto a = c.tiling.descend(c.transcript.last(), c.level - c.transcript.last().level);
    a.cell = Cell<double>::interval(a.cell.lo() + 1e-4, a.cell.hi());
    return a;
  };
  CHECK(code_of([&] { modified_play(t, forged, random_strategy<double>(), 3, 3, start, 2, 1); }) ==
        ErrorCode::IllegalMove);
  CHECK(code_of([&] { modified_play(t, neutral_strategy<double>(), random_strategy<double>(), 3, 3, start, 3, 1); }) ==
        ErrorCode::TilingDepthExceeded);
  CHECK(code_of([&] { modified_play(t, neutral_strategy<double>(), random_strategy<double>(), 2, 3, start, 1, 1); }) ==
        ErrorCode::InvalidParams);
}

TEST_CASE("limit point needs convergence") {
  auto m = preset("cat2");
  Tiling<double> t(m, {}, kBase);
  auto tr = modified_play(t, neutral_strategy<double>(), random_strategy<double>(), 3, 3, t.level(1)[0], 1, 1);
  CHECK(code_of([&] { limit_point(t, tr, 1e-9); }) == ErrorCode::NotConverged);
}

TEST_CASE("transcripts round trip and detect tampering") {
  auto m = preset("cat2");
  Tiling<double> t(m, {}, kBase);
  auto tr = modified_play(t, neutral_strategy<double>(), random_strategy<double>(), 3, 3, t.level(2)[0], 3, 7);
  std::stringstream ss;
  write_transcript(ss, tr);
  auto back = read_transcript<double>(ss);
  REQUIRE(back.moves.size() == tr.moves.size());
  CHECK_NOTHROW(replay_validate(t, back));
  for (std::size_t i = 0; i < tr.moves.size(); ++i) CHECK(back.moves[i].atom.cell.v == tr.moves[i].atom.cell.v);

  auto tampered = back;
  tampered.moves[3].atom.cell.v[1][0] += 1e-6;
  CHECK(code_of([&] { replay_validate(t, tampered); }) == ErrorCode::ReplayMismatch);
  auto swapped = back;
  std::swap(swapped.moves[2], swapped.moves[3]);
  CHECK(code_of([&] { replay_validate(t, swapped); }) == ErrorCode::ReplayMismatch);
  std::stringstream junk("not a transcript");
  CHECK(code_of([&] { read_transcript<double>(junk); }) == ErrorCode::ReplayMismatch);
}
