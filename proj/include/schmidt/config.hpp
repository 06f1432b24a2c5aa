#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "error.hpp"
#include "strategy.hpp"

namespace schmidt {

struct ExperimentConfig {
  // model
  std::string preset = "cat2";
  std::vector<std::int64_t> matrix;  // row-major; overrides preset when set
  // tiling
  TilingParams tiling;
  int depth = 6;
  // game
  Mode mode = Mode::Practical;
  std::optional<int> a;  // empty: auto
  int b = 3;
  double eta = 0.2;
  double L = 0.01;
  int r = 1;
  int n1 = 6;
  int steps = 2;
  std::vector<BobKind> bobs{BobKind::Random, BobKind::CenterSeeking, BobKind::ObstacleHugging};
  // target
  RationalPoint y{{1, 0}, 2};
  std::optional<double> c = 1e-6;  // empty: auto
  // batch
  int seeds = 10;
  std::uint64_t first_seed = 1;
  // analysis
  int tree_depth = 2;
  std::vector<int> tree_b{3};
  int tree_n1 = 3;
  bool prune = false;  // drop branches where avoidance fails
  int box_samples = 2000;
  std::vector<double> box_scales;  // empty: from the tree
  std::string oracle_word;
  int nodes = 32;
  int product_depth = 0;  // 0 disables the product-measure check
  std::vector<double> scales;
  // run
  std::string output = "out";
  int threads = 0;

  ToralModel model() const {
    if (!matrix.empty()) {
      const int n = static_cast<int>(std::lround(std::sqrt(static_cast<double>(matrix.size()))));
      return eigen_split(matrix, n, "matrix");
    }
    return schmidt::preset(preset);
  }
  bool guaranteed() const { return mode == Mode::Guaranteed; }
};

namespace detail {

[[noreturn]] inline void bad_key(const std::string& key, const std::string& why) {
  fail(ErrorCode::ConfigError, "key '" + key + "': " + why);
}

inline std::vector<std::string> words(const std::string& s) {
  std::vector<std::string> out;
  std::string w;
  std::istringstream is(s);
  while (is >> w) {
    std::string part;
    std::istringstream ws(w);
    while (std::getline(ws, part, ','))
      if (!part.empty()) out.push_back(part);
  }
  return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& s) {
  std::istringstream is(s);
  T v{};
  if (!(is >> v) || !(is >> std::ws).eof()) bad_key(key, "not a number: '" + s + "'");
  return v;
}

inline double positive(const std::string& key, const std::string& s) {
  double v = parse_number<double>(key, s);
  if (!(v > 0) || !std::isfinite(v)) bad_key(key, "must be positive");
  return v;
}

inline int positive_int(const std::string& key, const std::string& s) {
  long v = parse_number<long>(key, s);
  if (v <= 0 || v > 1000000000) bad_key(key, "must be a positive integer");
  return static_cast<int>(v);
}

inline int nonneg_int(const std::string& key, const std::string& s) {
  long v = parse_number<long>(key, s);
  if (v < 0 || v > 1000000000) bad_key(key, "must be a non-negative integer");
  return static_cast<int>(v);
}

inline bool parse_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "yes" || s == "1" || s == "on") return true;
  if (s == "false" || s == "no" || s == "0" || s == "off") return false;
  bad_key(key, "not a boolean: '" + s + "'");
}

// "1/2 0" -> {1, 0} / 2, over the least common denominator.
inline RationalPoint parse_rational_point(const std::string& key, const std::string& s) {
  std::vector<std::pair<std::int64_t, std::int64_t>> q;
  for (const auto& w : words(s)) {
    auto slash = w.find('/');
    std::int64_t p = parse_number<std::int64_t>(key, w.substr(0, slash));
    std::int64_t d = slash == std::string::npos ? 1 : parse_number<std::int64_t>(key, w.substr(slash + 1));
    if (d <= 0) bad_key(key, "denominator must be positive");
    q.push_back({p, d});
  }
  if (q.empty()) bad_key(key, "empty point");
  std::int64_t den = 1;
  for (auto [p, d] : q) {
    den = std::lcm(den, d);
    if (den > (1LL << 40)) bad_key(key, "denominator too large");
  }
  RationalPoint r;
  r.den = den;
  for (auto [p, d] : q) r.num.push_back((((p * (den / d)) % den) + den) % den);
  return r;
}

}  // namespace detail

inline ExperimentConfig parse_config(std::istream& in, const std::string& source = "<config>") {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    fail(ErrorCode::ConfigError, source + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  static const std::map<std::string, std::set<std::string>> known{
      {"model", {"preset", "matrix"}},
      {"tiling", {"delta", "tau", "depth", "seed"}},
      {"game", {"mode", "a", "b", "eta", "L", "r", "n1", "steps", "bob"}},
      {"target", {"y", "c"}},
      {"batch", {"seeds", "first_seed"}},
      {"analysis",
       {"tree_depth", "tree_b", "tree_n1", "prune", "box_samples", "box_scales", "oracle_word", "nodes",
        "product_depth", "scales"}},
      {"run", {"output", "threads"}}};

  ExperimentConfig c;
  bool explicit_r = false, explicit_n1 = false;
  for (const auto& [section, body] : tree) {
    auto sec = known.find(section);
    if (sec == known.end()) {
      if (body.empty()) detail::bad_key(section, "key outside any section");
      detail::bad_key(section, "unknown section");
    }
    for (const auto& [name, node] : body) {
      const std::string key = section + "." + name;
      if (!sec->second.count(name)) detail::bad_key(key, "unknown key");
      const std::string v = node.get_value<std::string>();
      if (v.empty()) detail::bad_key(key, "empty value");
      using namespace detail;
      if (key == "model.preset") {
        c.preset = v;
        try {
          preset(v);
        } catch (const Error&) {
          bad_key(key, "unknown preset '" + v + "'");
        }
      } else if (key == "model.matrix") {
        c.matrix.clear();
        for (const auto& w : words(v)) c.matrix.push_back(parse_number<std::int64_t>(key, w));
        const auto n = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(c.matrix.size()))));
        if (n == 0 || n * n != c.matrix.size()) bad_key(key, "need n*n integers");
        try {
          c.model();
        } catch (const Error& e) {
          bad_key(key, e.what());
        }
      } else if (key == "tiling.delta") {
        c.tiling.delta = positive(key, v);
      } else if (key == "tiling.tau") {
        c.tiling.tau = positive(key, v);
        if (c.tiling.tau >= 1) bad_key(key, "must be < 1");
      } else if (key == "tiling.depth") {
        c.depth = nonneg_int(key, v);
      } else if (key == "tiling.seed") {
        c.tiling.seed = parse_number<std::uint64_t>(key, v);
      } else if (key == "game.mode") {
        if (v == "guaranteed") c.mode = Mode::Guaranteed;
        else if (v == "practical") c.mode = Mode::Practical;
        else bad_key(key, "expected 'guaranteed' or 'practical'");
      } else if (key == "game.a") {
        if (v == "auto") c.a.reset();
        else c.a = positive_int(key, v);
      } else if (key == "game.b") {
        c.b = positive_int(key, v);
      } else if (key == "game.eta") {
        c.eta = positive(key, v);
      } else if (key == "game.L") {
        c.L = positive(key, v);
      } else if (key == "game.r") {
        c.r = positive_int(key, v);
        explicit_r = true;
      } else if (key == "game.n1") {
        c.n1 = positive_int(key, v);
        explicit_n1 = true;
      } else if (key == "game.steps") {
        c.steps = positive_int(key, v);
      } else if (key == "game.bob") {
        c.bobs.clear();
        for (const auto& w : words(v)) {
          if (w == "all") {
            c.bobs = {BobKind::Random, BobKind::CenterSeeking, BobKind::ObstacleHugging};
            continue;
          }
          try {
            c.bobs.push_back(parse_bob(w));
          } catch (const Error&) {
            bad_key(key, "unknown bob kind '" + w + "'");
          }
        }
      } else if (key == "target.y") {
        c.y = parse_rational_point(key, v);
      } else if (key == "target.c") {
        if (v == "auto") c.c.reset();
        else c.c = positive(key, v);
      } else if (key == "batch.seeds") {
        c.seeds = positive_int(key, v);
      } else if (key == "batch.first_seed") {
        c.first_seed = parse_number<std::uint64_t>(key, v);
      } else if (key == "analysis.tree_depth") {
        c.tree_depth = positive_int(key, v);
      } else if (key == "analysis.tree_b") {
        c.tree_b.clear();
        for (const auto& w : words(v)) c.tree_b.push_back(positive_int(key, w));
        if (c.tree_b.empty()) bad_key(key, "empty list");
      } else if (key == "analysis.tree_n1") {
        c.tree_n1 = nonneg_int(key, v);
      } else if (key == "analysis.prune") {
        c.prune = parse_bool(key, v);
      } else if (key == "analysis.box_samples") {
        c.box_samples = positive_int(key, v);
      } else if (key == "analysis.box_scales") {
        c.box_scales.clear();
        for (const auto& w : words(v)) c.box_scales.push_back(positive(key, w));
      } else if (key == "analysis.oracle_word") {
        if (v.find_first_not_of("0123456789") != std::string::npos) bad_key(key, "digits only");
        c.oracle_word = v;
      } else if (key == "analysis.nodes") {
        c.nodes = positive_int(key, v);
      } else if (key == "analysis.product_depth") {
        c.product_depth = nonneg_int(key, v);
      } else if (key == "analysis.scales") {
        c.scales.clear();
        for (const auto& w : words(v)) c.scales.push_back(positive(key, w));
      } else if (key == "run.output") {
        c.output = v;
      } else if (key == "run.threads") {
        c.threads = nonneg_int(key, v);
      }
    }
  }

  // Cross-key consistency.
  const auto m = c.model();
  if (c.y.dim() != m.n) detail::bad_key("target.y", "needs " + std::to_string(m.n) + " coordinates");
  const int a_star = a_star_for(c.tiling.delta, c.tiling.tau, m.sigma1);
  if (c.b <= a_star) detail::bad_key("game.b", "must exceed a* = " + std::to_string(a_star));
  if (c.a && *c.a <= a_star) detail::bad_key("game.a", "must exceed a* = " + std::to_string(a_star));
  if (c.guaranteed()) {
    if (!(c.eta < 0.25)) detail::bad_key("game.eta", "must be < 1/4");
    if (explicit_r) detail::bad_key("game.r", "derived in guaranteed mode");
    if (explicit_n1) detail::bad_key("game.n1", "derived in guaranteed mode");
    if (c.c) detail::bad_key("target.c", "must be 'auto' in guaranteed mode");
    if (c.a && *c.a < min_a(c.tiling.tau, m.sigma1, a_star))
      detail::bad_key("game.a", "below the threshold " + std::to_string(min_a(c.tiling.tau, m.sigma1, a_star)));
  } else if (!c.c) {
    detail::bad_key("target.c", "'auto' needs guaranteed mode");
  }
  for (int b : c.tree_b)
    if (b <= a_star) detail::bad_key("analysis.tree_b", "must exceed a* = " + std::to_string(a_star));
  if (!c.box_scales.empty() && c.box_scales.size() < 5) detail::bad_key("analysis.box_scales", "need 5 scales");
  if (c.product_depth > 0) {
    if (m.n != 2 || m.u != 1) detail::bad_key("analysis.product_depth", "needs a 2-torus model");
    if (c.scales.size() < 3) detail::bad_key("analysis.scales", "need 3 scales for the product check");
  }
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ConfigError, "cannot open '" + path + "'");
  return parse_config(in, path);
}

}  // namespace schmidt
