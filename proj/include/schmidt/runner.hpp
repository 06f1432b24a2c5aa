#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <boost/version.hpp>

#include "config.hpp"
#include "measure.hpp"
#include "properties.hpp"

namespace schmidt {

inline constexpr const char* kToolVersion = "0.1.0";

// RFC-4180 field quoting.
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

inline std::string csv_row(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) out += (i ? "," : "") + csv_field(fields[i]);
  return out + "\r\n";
}

inline std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

// Every artifact goes through here, so the manifest sees all files.
class ArtifactWriter {
 public:
  explicit ArtifactWriter(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec || !std::filesystem::is_directory(dir_))
      fail(ErrorCode::Precondition, "output directory '" + dir_.string() + "' not writable");
  }

  const std::filesystem::path& dir() const { return dir_; }

  void write(const std::string& rel, const std::string& body) {
    auto p = dir_ / rel;
    std::filesystem::create_directories(p.parent_path());
    std::ofstream os(p, std::ios::binary);
    os << body;
    if (!os) fail(ErrorCode::Precondition, "cannot write '" + p.string() + "'");
    files_[rel] = body.size();
  }

  const std::map<std::string, std::size_t>& files() const { return files_; }

 private:
  std::filesystem::path dir_;
  std::map<std::string, std::size_t> files_;
};

inline std::filesystem::path output_dir(const ExperimentConfig& c) {
  std::filesystem::path out(c.output);
  if (const char* root = std::getenv("SCHMIDT_OUTPUT_ROOT"); root && *root) {
    if (out.is_absolute()) out = out.relative_path();
    return std::filesystem::path(root) / out;
  }
  return out;
}

inline GameParams game_params(const ExperimentConfig& c, const ToralModel& m) {
  const int a_star = a_star_for(c.tiling.delta, c.tiling.tau, m.sigma1);
  const int a = c.a.value_or(min_a(c.tiling.tau, m.sigma1, a_star));
  if (!c.guaranteed()) return practical_params(m, c.tiling.delta, c.tiling.tau, c.eta, a, c.b, c.r, c.n1, *c.c);
  GameParams p = derive_params(m, c.tiling.delta, c.tiling.tau, c.eta, c.b, c.L);
  if (a != p.a) {
    p.a = a;
    p.r = min_r(c.eta, a, c.b);
    p.n1 = min_n1(c.tiling.tau, c.tiling.delta, c.L, m.sigma1, a, c.b, p.r);
    p.log_c = log_c_max(c.tiling.tau, c.tiling.delta, m.sigma2, p.n1, a, c.b, p.r);
    fill_ledger(p, m.sigma1, m.sigma2);
  }
  return p;
}

inline std::string ledger_csv(const GameParams& p) {
  std::string s = csv_row({"name", "formula", "lhs", "rhs", "margin", "holds"});
  for (const auto& e : p.ledger)
    s += csv_row({e.name, e.formula, num(e.lhs), num(e.rhs), num(e.margin()), e.holds ? "true" : "false"});
  return s;
}

inline void append_report(std::string& csv, const std::string& suite, const PropertyReport& rep) {
  for (const auto& ch : rep.checks)
    csv += csv_row({suite, ch.name, ch.passed ? "true" : "false", ch.skipped ? "true" : "false",
                    std::to_string(ch.checked), std::to_string(ch.violations), ch.detail});
}

inline std::string report_header() {
  return csv_row({"suite", "check", "passed", "skipped", "checked", "violations", "detail"});
}

struct GameRow {
  BobKind bob;
  std::uint64_t seed;
  bool success = false;
  long seen = 0, final = 0;
  bool orbit = false;
  int moves = 0, horizon = 0;
  std::string transcript;
};

template <class Real>
std::vector<GameRow> play_games(const ExperimentConfig& c, const ToralModel& m, const GameParams& p,
                                const std::vector<BobKind>& bobs, int seeds) {
  Tiling<Real> t(m, c.tiling, c.y);
  TargetRectangle<Real> target{c.y, c.guaranteed() ? c_value(t, p) : Real(*c.c)};
  std::vector<GameRow> rows(bobs.size() * static_cast<std::size_t>(seeds));
  parallel_for(rows.size(), c.threads, [&](std::size_t i) {
    GameRow& g = rows[i];
    g.bob = bobs[i / seeds];
    g.seed = c.first_seed + i % seeds;
    BobAdversary<Real> bob(g.bob, t, target, p.horizon(c.steps));
    auto rep = run_winning_game(t, target, p, bob, c.steps, g.seed);
    g.success = rep.success();
    g.seen = rep.obstacles_seen;
    g.final = rep.obstacles_final;
    g.orbit = rep.orbit_avoids;
    g.moves = static_cast<int>(rep.transcript.moves.size());
    g.horizon = rep.horizon;
    std::ostringstream os;
    write_transcript(os, rep.transcript);
    g.transcript = os.str();
  });
  return rows;
}

inline std::string transcript_name(const GameRow& g) {
  return "transcripts/" + std::string(bob_name(g.bob)) + "-" + std::to_string(g.seed) + ".txt";
}

inline std::string games_csv(const std::vector<GameRow>& rows) {
  std::string s = csv_row({"bob", "seed", "moves", "horizon", "obstacles_seen", "obstacles_final", "orbit_avoids",
                           "success"});
  for (const auto& g : rows)
    s += csv_row({bob_name(g.bob), std::to_string(g.seed), std::to_string(g.moves), std::to_string(g.horizon),
                  std::to_string(g.seen), std::to_string(g.final), g.orbit ? "true" : "false",
                  g.success ? "true" : "false"});
  return s;
}

struct DimensionRow {
  int b = 0;
  TreeFamily<double> tree;
  DimensionBound bound;
  PropertyReport checks;
  std::string box, oracle;
};

inline DimensionRow dimension_row(const ExperimentConfig& c, const ToralModel& m, const GameParams& p, int b) {
  Tiling<double> t(m, c.tiling, c.y);
  const double cval = c.guaranteed() ? std::exp(p.log_c) : *c.c;
  auto alice = avoidance_responder<double>(t, {c.y, cval}, p.a, c.prune);
  auto root = c.tree_n1 == 0 ? t.root_atom() : first_alice_atom(t, alice, c.tree_n1);
  TreeOptions opt;
  opt.a = p.a;
  opt.b = b;
  opt.depth = c.tree_depth;
  opt.prune_lost = c.prune;
  opt.threads = c.threads;
  DimensionRow row;
  row.b = b;
  row.tree = build_tree(t, alice, root, opt);
  row.checks = check_tree(t, row.tree);
  PropertyCheck mass{"tree.stage_mass"};
  for (const auto& w : stage_measures(row.tree)) detail::tally(mass, std::fabs(total_mass(w) - 1) < 1e-12L);
  row.checks.checks.push_back(mass);
  row.bound = dimension_lower_bound(row.tree, t.u());

  auto pts = sample_limit_points(t, row.tree, c.box_samples, hash_combine(c.first_seed, static_cast<std::uint64_t>(b)));
  std::vector<double> scales = c.box_scales;
  if (scales.empty()) {
    const double hi = std::exp(row.tree.log_d[std::min(1, row.tree.depth())]);
    const double lo = std::max(std::exp(row.tree.log_d.back()) * 4, hi * 1e-4);
    for (int i = 0; i < 6; ++i) scales.push_back(hi * std::pow(lo / hi, i / 5.0));
  }
  try {
    row.box = num(box_dimension(pts, scales).slope());
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateFit && e.code() != ErrorCode::Precondition) throw;
  }
  if (!c.oracle_word.empty()) {
    if (m.n != 1) fail(ErrorCode::ConfigError, "key 'analysis.oracle_word': needs a circle model");
    row.oracle = num(sft_oracle_dimension(static_cast<int>(m.matrix[0]), c.oracle_word).dimension);
  }
  return row;
}

inline std::string dimension_csv(const std::string& model, int a, int depth, const std::vector<DimensionRow>& rows) {
  std::string s = csv_row({"model", "a", "b", "depth", "c_a", "eps", "closed_form_bound", "box_estimate", "oracle"});
  for (const auto& r : rows)
    s += csv_row({model, std::to_string(a), std::to_string(r.b), std::to_string(depth), num(r.tree.c_a),
                  num(r.bound.eps), num(r.bound.closed_form), r.box, r.oracle});
  return s;
}

inline std::vector<DimensionRow> dimension_rows(const ExperimentConfig& c, const ToralModel& m, const GameParams& p) {
  std::vector<DimensionRow> rows;
  for (int b : c.tree_b) rows.push_back(dimension_row(c, m, p, b));
  return rows;
}

// Product and leaf ball scaling at the last tree b; empty when disabled.
inline std::string scaling_analysis(const ExperimentConfig& c, const ToralModel& m, const GameParams& p,
                                    PropertyReport& rep) {
  if (c.product_depth == 0) return {};
  ProductOptions po;
  po.nodes = c.nodes;
  po.a = p.a;
  po.b = c.tree_b.back();
  po.depth = c.product_depth;
  po.c = c.guaranteed() ? std::exp(p.log_c) : *c.c;
  po.target = c.y;
  po.tiling = c.tiling;
  po.threads = c.threads;
  ProductMeasure pm(m, c.y, po);
  const double ca = density_constant(c.tiling.tau, p.a, p.a_star, m.sigma1, m.sigma2, m.u);
  const double eps = m.u - closed_form_bound(m.u, ca, std::log(m.sigma1), p.a, po.b);
  auto prod = product_ball_check(pm, 6, c.scales, eps, 0.1, c.first_seed);
  auto leaf = leaf_ball_check(pm.leaf(0), m.u, c.scales, 6, eps, 0.1, c.tiling.delta, c.first_seed);
  PropertyCheck pc{"scaling.product"}, lc{"scaling.leaf"};
  detail::tally(pc, prod.passed);
  detail::tally(lc, leaf.passed);
  pc.detail = "exponent " + num(prod.exponent()) + " target " + num(prod.target);
  lc.detail = "exponent " + num(leaf.exponent()) + " target " + num(leaf.target);
  rep.checks.push_back(pc);
  rep.checks.push_back(lc);
  std::string s = csv_row({"measure", "scale", "mass", "exponent", "target", "C", "l0"});
  for (const auto& [name, r] : {std::pair{"product", &prod}, std::pair{"leaf", &leaf}})
    for (std::size_t i = 0; i < r->scales.size(); ++i)
      s += csv_row({name, num(r->scales[i]), num(r->masses[i]), num(r->exponent()), num(r->target), num(r->C),
                    std::to_string(r->l0)});
  return s;
}

inline std::string manifest(const ExperimentConfig& c, const std::string& config_path, const std::string& command,
                            const GameParams& p, const ArtifactWriter& w) {
  std::ostringstream os;
  os << "tool schmidt " << kToolVersion << "\n";
  os << "command " << command << "\n";
  os << "config " << config_path << "\n";
  os << "compiler " << __VERSION__ << "\n";
  os << "eigen " << EIGEN_WORLD_VERSION << "." << EIGEN_MAJOR_VERSION << "." << EIGEN_MINOR_VERSION << "\n";
  os << "boost " << BOOST_LIB_VERSION << "\n";
  os << "model " << c.model().name << "\n";
  os << "tiling_seed " << c.tiling.seed << "\n";
  os << "game_seeds " << c.first_seed << ".." << c.first_seed + c.seeds - 1 << "\n";
  os << "mode " << (c.guaranteed() ? "guaranteed" : "practical") << "\n";
  os << "params a=" << p.a << " b=" << p.b << " r=" << p.r << " n1=" << p.n1 << " a*=" << p.a_star
     << " log_c=" << num(p.log_c) << "\n";
  os << "threads " << resolve_threads(c.threads) << "\n";
  for (const auto& [f, size] : w.files()) os << "file " << f << " " << size << "\n";
  return os.str();
}

inline void write_error(const std::filesystem::path& dir, const Error& e) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  std::ofstream os(dir / "error.txt");
  os << "code " << code_name(e.code()) << "\nmessage " << e.what() << "\n";
}

inline bool games_ok(const std::vector<GameRow>& rows) {
  return std::all_of(rows.begin(), rows.end(), [](const auto& g) { return g.success; });
}

inline std::vector<GameRow> run_games(const ExperimentConfig& c, const ToralModel& m, const GameParams& p,
                                      const std::vector<BobKind>& bobs, int seeds) {
  if (c.guaranteed()) return play_games<HighPrecision>(c, m, p, bobs, seeds);
  return play_games<double>(c, m, p, bobs, seeds);
}

// Full batch. Returns 0 when every check and game passes, 2 otherwise.
inline int run_experiment(const ExperimentConfig& c, const std::string& config_path, std::ostream& log) {
  const auto m = c.model();
  const auto p = game_params(c, m);
  ArtifactWriter w(output_dir(c));
  w.write("ledger.csv", ledger_csv(p));

  Tiling<double> t(m, c.tiling, c.y);
  auto props = verify_properties(t, c.depth);
  std::string report = report_header();
  append_report(report, "tiling", props);

  auto games = run_games(c, m, p, c.bobs, c.seeds);
  for (const auto& g : games) w.write(transcript_name(g), g.transcript);
  w.write("games.csv", games_csv(games));

  auto dims = dimension_rows(c, m, p);
  bool ok = props.all_passed() && games_ok(games);
  for (const auto& d : dims) {
    append_report(report, "tree b=" + std::to_string(d.b), d.checks);
    ok = ok && d.checks.all_passed();
  }
  w.write("dimension.csv", dimension_csv(m.name, p.a, c.tree_depth, dims));

  PropertyReport scaling;
  auto sc = scaling_analysis(c, m, p, scaling);
  if (!sc.empty()) {
    w.write("scaling.csv", sc);
    append_report(report, "measure", scaling);
    ok = ok && scaling.all_passed();
  }
  w.write("properties.csv", report);
  w.write("manifest.txt", manifest(c, config_path, "run", p, w));

  long won = std::count_if(games.begin(), games.end(), [](const auto& g) { return g.success; });
  log << "games " << won << "/" << games.size() << " won\n";
  log << "properties " << (ok ? "all pass" : "FAILURES") << "\n";
  log << "output " << w.dir().string() << "\n";
  return ok ? 0 : 2;
}

struct VerifyLine {
  std::string suite, check;
  bool passed;
  std::string detail;
};

// Invariant suites only; prints a table and returns 0 when all pass.
inline int verify_experiment(const ExperimentConfig& c, std::ostream& out) {
  const auto m = c.model();
  const auto p = game_params(c, m);
  std::vector<VerifyLine> lines;
  Tiling<double> t(m, c.tiling, c.y);

  auto props = verify_properties(t, c.depth);
  for (const auto& ch : props.checks) {
    std::string d = ch.detail;
    if (ch.skipped && d.find("insufficient depth") == std::string::npos) d = "insufficient depth: " + d;
    lines.push_back({"tiling", ch.name, ch.passed || ch.skipped, ch.skipped ? "SKIPPED " + d : d});
  }

  // Replay: saved transcripts when present, otherwise a fresh round-trip per Bob.
  const auto tdir = output_dir(c) / "transcripts";
  std::vector<std::pair<std::string, std::string>> files;
  if (std::filesystem::is_directory(tdir)) {
    std::vector<std::filesystem::path> paths;
    for (const auto& e : std::filesystem::directory_iterator(tdir))
      if (e.path().extension() == ".txt") paths.push_back(e.path());
    std::sort(paths.begin(), paths.end());
    for (const auto& pth : paths) {
      std::ifstream in(pth);
      std::stringstream ss;
      ss << in.rdbuf();
      files.push_back({pth.filename().string(), ss.str()});
    }
  }
  if (files.empty())
    for (const auto& g : run_games(c, m, p, c.bobs, 1)) files.push_back({transcript_name(g), g.transcript});
  for (const auto& [name, body] : files) {
    VerifyLine v{"replay", name, true, "ok"};
    try {
      std::istringstream in(body);
      if (c.guaranteed()) {
        Tiling<HighPrecision> th(m, c.tiling, c.y);
        replay_validate(th, read_transcript<HighPrecision>(in));
      } else {
        replay_validate(t, read_transcript<double>(in));
      }
    } catch (const Error& e) {
      v.passed = false;
      v.detail = e.what();
    }
    lines.push_back(v);
  }

  ExperimentConfig small = c;
  small.tree_b = {c.tree_b.front()};
  small.box_scales.clear();
  auto d = dimension_row(small, m, p, c.tree_b.front());
  for (const auto& ch : d.checks.checks) lines.push_back({"tree", ch.name, ch.passed, ch.detail});

  // Oracle: power iteration vs a direct count of admissible words.
  {
    const std::string word = c.oracle_word.empty() ? "11" : c.oracle_word;
    const int base = m.n == 1 ? static_cast<int>(m.matrix[0]) : 2;
    auto o = sft_oracle_dimension(base, word);
    long prev = 0, cur = 0;
    const int len = std::max(4, static_cast<int>(16 * std::log(2.0) / std::log(static_cast<double>(base))));
    for (int n : {len - 1, len}) {
      long count = 0, total = 1;
      for (int i = 0; i < n; ++i) total *= base;
      for (long x = 0; x < total; ++x) {
        std::string s(n, '0');
        long y = x;
        for (int i = n - 1; i >= 0; --i, y /= base) s[i] = static_cast<char>('0' + y % base);
        count += s.find(word) == std::string::npos;
      }
      prev = cur;
      cur = count;
    }
    const double ratio = prev > 0 ? static_cast<double>(cur) / prev : 0;
    const bool ok = o.empty ? cur == 0 : std::fabs(ratio - o.spectral_radius) < 0.05 * o.spectral_radius;
    lines.push_back({"oracle", "sft." + word, ok, "radius " + num(o.spectral_radius) + " word ratio " + num(ratio)});
  }

  bool all = true;
  out << "suite    check                          result  detail\n";
  for (const auto& l : lines) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%-8s %-30s %-7s ", l.suite.c_str(), l.check.c_str(), l.passed ? "PASS" : "FAIL");
    out << buf << l.detail << "\n";
    all = all && l.passed;
  }
  out << (all ? "all checks pass" : "some checks FAILED") << "\n";
  return all ? 0 : 2;
}

inline int tile_experiment(const ExperimentConfig& c, std::ostream& log) {
  const auto m = c.model();
  Tiling<double> t(m, c.tiling, c.y);
  ArtifactWriter w(output_dir(c));
  std::ostringstream os;
  long atoms = 0;
  for (int n = 0; n <= c.depth; ++n) {
    dump_level(os, t, n);
    atoms += static_cast<long>(t.level(n).size());
  }
  w.write("tiling.txt", os.str());
  log << "levels 0.." << c.depth << ", " << atoms << " atoms -> " << (w.dir() / "tiling.txt").string() << "\n";
  return 0;
}

inline int play_experiment(const ExperimentConfig& c, std::ostream& log) {
  const auto m = c.model();
  const auto p = game_params(c, m);
  ExperimentConfig one = c;
  one.seeds = 1;
  auto g = run_games(one, m, p, {c.bobs.front()}, 1).front();
  ArtifactWriter w(output_dir(c));
  w.write(transcript_name(g), g.transcript);
  log << "bob " << bob_name(g.bob) << " seed " << g.seed << ": " << g.moves << " moves, horizon " << g.horizon
      << ", obstacles " << g.seen << ", " << (g.success ? "Alice wins" : "Alice loses") << "\n";
  return g.success ? 0 : 2;
}

inline int dim_experiment(const ExperimentConfig& c, const std::string& config_path, std::ostream& log) {
  const auto m = c.model();
  const auto p = game_params(c, m);
  ArtifactWriter w(output_dir(c));
  auto dims = dimension_rows(c, m, p);
  w.write("dimension.csv", dimension_csv(m.name, p.a, c.tree_depth, dims));
  PropertyReport scaling;
  auto sc = scaling_analysis(c, m, p, scaling);
  if (!sc.empty()) w.write("scaling.csv", sc);
  w.write("manifest.txt", manifest(c, config_path, "dim", p, w));
  for (const auto& d : dims)
    log << "b=" << d.b << " eps " << num(d.bound.eps) << " bound " << num(d.bound.bound) << " closed form "
        << num(d.bound.closed_form) << "\n";
  return scaling.all_passed() ? 0 : 2;
}

}  // namespace schmidt
