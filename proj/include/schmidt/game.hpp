#pragma once

#include <cmath>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"
#include "tiling.hpp"

namespace schmidt {

enum class Player { Alice, Bob };

inline const char* player_name(Player p) { return p == Player::Alice ? "alice" : "bob"; }

// Classic (alpha, beta) game on R^d.

struct Ball {
  std::vector<double> center;
  double radius = 0;
};

struct ClassicMove {
  Player player;
  int turn;
  Ball ball;
};

struct ClassicTranscript {
  double alpha = 0, beta = 0;
  std::vector<ClassicMove> moves;
};

using ClassicStrategy = std::function<Ball(const ClassicTranscript&)>;

namespace detail {

inline bool nested(const Ball& inner, const Ball& outer) {
  double d = 0;
  for (std::size_t i = 0; i < inner.center.size(); ++i) {
    double x = inner.center[i] - outer.center[i];
    d += x * x;
  }
  return std::sqrt(d) + inner.radius <= outer.radius * (1 + 1e-12);
}

inline std::string illegal(Player p, int turn, const std::string& why) {
  return std::string(player_name(p)) + " at turn " + std::to_string(turn) + ": " + why;
}

}  // namespace detail

inline ClassicTranscript classic_play(const ClassicStrategy& alice, const ClassicStrategy& bob, double alpha,
                                      double beta, Ball start, int rounds) {
  if (!(alpha > 0 && alpha < 1 && beta > 0 && beta < 1)) fail(ErrorCode::InvalidParams, "alpha, beta in (0, 1)");
  if (!(start.radius > 0)) fail(ErrorCode::InvalidParams, "starting radius must be positive");
  ClassicTranscript tr{alpha, beta, {}};
  tr.moves.push_back({Player::Bob, 1, start});
  for (int k = 1; k <= rounds; ++k) {
    if (k > 1) {
      Ball b = bob(tr);
      const Ball& prev = tr.moves.back().ball;
      if (std::fabs(b.radius - beta * prev.radius) > 1e-12 * prev.radius)
        fail(ErrorCode::IllegalMove, detail::illegal(Player::Bob, k, "radius must be beta times Alice's"));
      if (!detail::nested(b, prev)) fail(ErrorCode::IllegalMove, detail::illegal(Player::Bob, k, "ball not nested"));
      tr.moves.push_back({Player::Bob, k, b});
    }
    Ball a = alice(tr);
    const Ball& prev = tr.moves.back().ball;
    if (std::fabs(a.radius - alpha * prev.radius) > 1e-12 * prev.radius)
      fail(ErrorCode::IllegalMove, detail::illegal(Player::Alice, k, "radius must be alpha times Bob's"));
    if (!detail::nested(a, prev)) fail(ErrorCode::IllegalMove, detail::illegal(Player::Alice, k, "ball not nested"));
    tr.moves.push_back({Player::Alice, k, a});
  }
  return tr;
}

inline std::vector<double> classic_limit_point(const ClassicTranscript& tr, double tol) {
  if (tr.moves.empty() || !(tr.moves.back().ball.radius < tol))
    fail(ErrorCode::NotConverged, "final radius not below tolerance");
  return tr.moves.back().ball.center;
}

// Modified game on tiling atoms.

template <class Real>
struct MoveRecord {
  Player player;
  int turn;
  Atom<Real> atom;
};

template <class Real>
struct Transcript {
  int a = 0, b = 0;
  std::vector<MoveRecord<Real>> moves;

  const Atom<Real>& last() const { return moves.back().atom; }
};

template <class Real>
struct MoveContext {
  const Tiling<Real>& tiling;
  const Transcript<Real>& transcript;
  int turn;
  Player player;
  int level;  // required level of the move
  std::uint64_t seed;
};

template <class Real>
using Strategy = std::function<Atom<Real>(const MoveContext<Real>&)>;

namespace detail {

template <class Real>
void check_move(const Tiling<Real>& t, const Atom<Real>* prev, const Atom<Real>& mv, int level, Player p, int turn) {
  if (mv.level != level)
    fail(ErrorCode::IllegalMove, illegal(p, turn, "level " + std::to_string(mv.level) + " != required " +
                                                      std::to_string(level)));
  if (!t.is_atom(mv)) fail(ErrorCode::IllegalMove, illegal(p, turn, "not an atom of the tiling"));
  if (prev && !t.image(*prev, level - prev->level).contains_cell(mv.cell))
    fail(ErrorCode::IllegalMove, illegal(p, turn, "atom not inside the previous move"));
}

inline std::uint64_t move_seed(std::uint64_t seed, int turn, Player p) {
  return hash_combine(hash_combine(seed, static_cast<std::uint64_t>(turn)), p == Player::Alice ? 1 : 2);
}

template <class Real>
void check_depth(const Tiling<Real>& t, int level) {
  int cap = t.params().max_level;
  if (cap >= 0 && level > cap)
    fail(ErrorCode::TilingDepthExceeded, "game needs level " + std::to_string(level) + ", tiling capped at " +
                                             std::to_string(cap));
}

}  // namespace detail

// Bob opens with `start`; each round Alice descends a levels, then Bob b levels. Ends on Alice's move.
template <class Real>
Transcript<Real> modified_play(const Tiling<Real>& t, const Strategy<Real>& alice, const Strategy<Real>& bob, int a,
                               int b, const Atom<Real>& start, int rounds, std::uint64_t seed) {
  if (a <= t.a_star() || b <= t.a_star())
    fail(ErrorCode::InvalidParams, "a and b must exceed a* = " + std::to_string(t.a_star()));
  Transcript<Real> tr;
  tr.a = a;
  tr.b = b;
  detail::check_move(t, static_cast<const Atom<Real>*>(nullptr), start, start.level, Player::Bob, 1);
  tr.moves.push_back({Player::Bob, 1, start});
  for (int k = 1; k <= rounds; ++k) {
    if (k > 1) {
      int lv = tr.last().level + b;
      detail::check_depth(t, lv);
      MoveContext<Real> ctx{t, tr, k, Player::Bob, lv, detail::move_seed(seed, k, Player::Bob)};
      Atom<Real> mv = bob(ctx);
      detail::check_move(t, &tr.last(), mv, lv, Player::Bob, k);
      tr.moves.push_back({Player::Bob, k, std::move(mv)});
    }
    int lv = tr.last().level + a;
    detail::check_depth(t, lv);
    MoveContext<Real> ctx{t, tr, k, Player::Alice, lv, detail::move_seed(seed, k, Player::Alice)};
    Atom<Real> mv = alice(ctx);
    detail::check_move(t, &tr.last(), mv, lv, Player::Alice, k);
    tr.moves.push_back({Player::Alice, k, std::move(mv)});
  }
  return tr;
}

template <class Real>
Strategy<Real> neutral_strategy() {
  return [](const MoveContext<Real>& c) { return c.tiling.descend(c.transcript.last(), c.level - c.transcript.last().level); };
}

template <class Real>
Strategy<Real> random_strategy() {
  return [](const MoveContext<Real>& c) {
    auto kids = c.tiling.children(c.transcript.last(), c.level - c.transcript.last().level);
    if (kids.empty()) fail(ErrorCode::NoChild, "no legal move");
    Rng rng(c.seed);
    return kids[rng.index(kids.size())];
  };
}

// Point of the final atom, pulled back to the base leaf.
template <class Real>
LeafPoint<Real> limit_point(const Tiling<Real>& t, const Transcript<Real>& tr, double tol) {
  if (tr.moves.empty()) fail(ErrorCode::NotConverged, "empty transcript");
  const auto& a = tr.last();
  if (!(t.base_diameter(a) < Real(tol))) fail(ErrorCode::NotConverged, "final atom diameter above tolerance");
  auto c = a.cell.centroid();
  Vec<Real> v(t.u());
  for (int i = 0; i < t.u(); ++i) v(i) = c[i];
  Vec<Real> w = t.frame().power(-a.level) * v;
  return {t.base(), std::vector<Real>(w.data(), w.data() + t.u())};
}

template <class Real>
void write_transcript(std::ostream& os, const Transcript<Real>& tr) {
  os << "schmidt-transcript 1\n";
  os << "a " << tr.a << "\nb " << tr.b << "\nmoves " << tr.moves.size() << "\n";
  for (const auto& m : tr.moves) {
    os << "move " << m.turn << " " << player_name(m.player) << " " << m.atom.level << " " << format_real(m.atom.key)
       << " " << m.atom.center.size();
    for (const auto& c : m.atom.center) os << " " << format_real(c);
    os << " " << m.atom.cell.dim << " " << m.atom.cell.v.size();
    for (const auto& p : m.atom.cell.v) os << " " << format_real(p[0]) << " " << format_real(p[1]);
    os << "\n";
  }
}

template <class Real>
Transcript<Real> read_transcript(std::istream& is) {
  Transcript<Real> tr;
  std::string word;
  int version = 0;
  std::size_t count = 0;
  if (!(is >> word >> version) || word != "schmidt-transcript" || version != 1)
    fail(ErrorCode::ReplayMismatch, "not a transcript");
  if (!(is >> word >> tr.a) || word != "a" || !(is >> word >> tr.b) || word != "b" || !(is >> word >> count) ||
      word != "moves")
    fail(ErrorCode::ReplayMismatch, "bad header");
  for (std::size_t i = 0; i < count; ++i) {
    MoveRecord<Real> m;
    std::string player, tok;
    std::size_t nc = 0, nv = 0;
    if (!(is >> word >> m.turn >> player >> m.atom.level >> tok >> nc) || word != "move")
      fail(ErrorCode::ReplayMismatch, "bad move line " + std::to_string(i + 1));
    m.player = player == "alice" ? Player::Alice : Player::Bob;
    m.atom.key = parse_real<Real>(tok);
    for (std::size_t j = 0; j < nc; ++j) {
      is >> tok;
      m.atom.center.push_back(parse_real<Real>(tok));
    }
    is >> m.atom.cell.dim >> nv;
    for (std::size_t j = 0; j < nv; ++j) {
      std::string x, y;
      is >> x >> y;
      m.atom.cell.v.push_back({parse_real<Real>(x), parse_real<Real>(y)});
    }
    if (!is) fail(ErrorCode::ReplayMismatch, "truncated move " + std::to_string(i + 1));
    tr.moves.push_back(std::move(m));
  }
  return tr;
}

// Re-checks every move of a transcript against the tiling.
template <class Real>
void replay_validate(const Tiling<Real>& t, const Transcript<Real>& tr) {
  const Atom<Real>* prev = nullptr;
  for (std::size_t i = 0; i < tr.moves.size(); ++i) {
    const auto& m = tr.moves[i];
    Player expect = i % 2 == 0 ? Player::Bob : Player::Alice;
    if (m.player != expect) fail(ErrorCode::ReplayMismatch, "move " + std::to_string(i + 1) + " out of turn");
    int level = prev ? prev->level + (m.player == Player::Alice ? tr.a : tr.b) : m.atom.level;
    try {
      detail::check_move(t, prev, m.atom, level, m.player, m.turn);
    } catch (const Error& e) {
      fail(ErrorCode::ReplayMismatch, "move " + std::to_string(i + 1) + ": " + e.what());
    }
    prev = &m.atom;
  }
}

}  // namespace schmidt
