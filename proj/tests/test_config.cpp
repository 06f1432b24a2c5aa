#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <schmidt/runner.hpp>

using namespace schmidt;

namespace {

ExperimentConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

std::string config_error(const std::string& text) {
  try {
    parse(text);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) return e.what();
    return "wrong code: " + std::string(e.what());
  }
  return "no error";
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kTiny = R"([model]
preset = cat2
[tiling]
depth = 4
seed = 5
[game]
a = 3
b = 3
n1 = 6
steps = 1
bob = center, hugging
[target]
y = 1/2 0
c = 1e-6
[batch]
seeds = 2
[analysis]
tree_depth = 1
tree_b = 3
box_samples = 300
[run]
output = tiny
threads = 2
)";

struct OutputRoot {
  std::filesystem::path dir;
  explicit OutputRoot(const std::string& name) : dir(std::filesystem::temp_directory_path() / name) {
    std::filesystem::remove_all(dir);
    setenv("SCHMIDT_OUTPUT_ROOT", dir.c_str(), 1);
  }
  ~OutputRoot() {
    unsetenv("SCHMIDT_OUTPUT_ROOT");
    std::filesystem::remove_all(dir);
  }
};

}  // namespace

TEST_CASE("defaults and parsed values", "[config]") {
  auto c = parse("");
  CHECK(c.model().name == "cat2");
  CHECK(c.mode == Mode::Practical);
  CHECK(c.bobs.size() == 3);

  c = parse("[model]\nmatrix = 2 1 1 1\n[target]\ny = 1/3, 1/2\n[game]\nbob = hugging\nmode = practical\n");
  CHECK(c.model().u == 1);
  CHECK(c.y.den == 6);
  CHECK(c.y.num == std::vector<std::int64_t>{2, 3});
  CHECK(c.bobs == std::vector<BobKind>{BobKind::ObstacleHugging});

  c = parse("[game]\nmode = guaranteed\na = auto\n[target]\nc = auto\n");
  CHECK(c.guaranteed());
  CHECK_FALSE(c.c.has_value());
  auto p = game_params(c, c.model());
  CHECK(p.a == 3);
  CHECK(p.r == 22);
  CHECK(p.n1 == 140);
}

TEST_CASE("malformed keys are named", "[config]") {
  using Catch::Matchers::ContainsSubstring;
  CHECK_THAT(config_error("[game]\nbogus = 1\n"), ContainsSubstring("game.bogus"));
  CHECK_THAT(config_error("[nowhere]\nx = 1\n"), ContainsSubstring("nowhere"));
  CHECK_THAT(config_error("[game]\nb = three\n"), ContainsSubstring("game.b"));
  CHECK_THAT(config_error("[game]\nb = 2\n"), ContainsSubstring("game.b"));
  CHECK_THAT(config_error("[tiling]\ndelta = -1\n"), ContainsSubstring("tiling.delta"));
  CHECK_THAT(config_error("[game]\nmode = fast\n"), ContainsSubstring("game.mode"));
  CHECK_THAT(config_error("[game]\nbob = lazy\n"), ContainsSubstring("game.bob"));
  CHECK_THAT(config_error("[model]\nmatrix = 2 1 1\n"), ContainsSubstring("model.matrix"));
  CHECK_THAT(config_error("[model]\nmatrix = 1 1 0 1\n"), ContainsSubstring("model.matrix"));
  CHECK_THAT(config_error("[model]\npreset = cat3\n"), ContainsSubstring("model.preset"));
  CHECK_THAT(config_error("[target]\ny = 1/2\n"), ContainsSubstring("target.y"));
  CHECK_THAT(config_error("[target]\nc = auto\n"), ContainsSubstring("target.c"));
  CHECK_THAT(config_error("[game]\nmode = guaranteed\nr = 3\n[target]\nc = auto\n"), ContainsSubstring("game.r"));
  CHECK_THAT(config_error("[game]\nmode = guaranteed\neta = 0.3\n[target]\nc = auto\n"),
             ContainsSubstring("game.eta"));
  CHECK_THAT(config_error("[analysis]\nprune = maybe\n"), ContainsSubstring("analysis.prune"));
  CHECK_THAT(config_error("[analysis]\nproduct_depth = 3\nscales = 0.01\n"), ContainsSubstring("analysis.scales"));
  CHECK_THAT(config_error("[game]\nb = 3\nb = 4\n"), ContainsSubstring("duplicate"));
}

TEST_CASE("csv quoting", "[config]") {
  CHECK(csv_field("plain") == "plain");
  CHECK(csv_field("a,b") == "\"a,b\"");
  CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(csv_row({"x", "y z", "1,2"}) == "x,y z,\"1,2\"\r\n");
}

TEST_CASE("output root override", "[config]") {
  auto c = parse("[run]\noutput = results\n");
  unsetenv("SCHMIDT_OUTPUT_ROOT");
  CHECK(output_dir(c) == std::filesystem::path("results"));
  setenv("SCHMIDT_OUTPUT_ROOT", "/tmp/elsewhere", 1);
  CHECK(output_dir(c) == std::filesystem::path("/tmp/elsewhere/results"));
  unsetenv("SCHMIDT_OUTPUT_ROOT");
}

TEST_CASE("run writes artifacts and reruns identically", "[config][cli]") {
  OutputRoot root("schmidt-config-test");
  auto c = parse(kTiny);
  std::ostringstream log;
  REQUIRE(run_experiment(c, "tiny.ini", log) == 0);
  const auto out = root.dir / "tiny";
  for (const char* f : {"ledger.csv", "games.csv", "properties.csv", "dimension.csv", "manifest.txt",
                        "transcripts/center-1.txt", "transcripts/hugging-2.txt"})
    CHECK(std::filesystem::exists(out / f));
  const auto dim = slurp(out / "dimension.csv");
  CHECK(dim.rfind("model,a,b,depth,c_a,eps,closed_form_bound,box_estimate,oracle\r\n", 0) == 0);
  CHECK(slurp(out / "manifest.txt").find("game_seeds 1..2") != std::string::npos);

  auto single = c;
  single.threads = 1;
  std::filesystem::rename(out, root.dir / "first");
  REQUIRE(run_experiment(single, "tiny.ini", log) == 0);
  for (const char* f : {"ledger.csv", "games.csv", "properties.csv", "dimension.csv"})
    CHECK(slurp(out / f) == slurp(root.dir / "first" / f));
}

TEST_CASE("verify reports tampering and shallow tilings", "[config][cli]") {
  OutputRoot root("schmidt-verify-test");
  auto c = parse(kTiny);
  std::ostringstream log;
  REQUIRE(run_experiment(c, "tiny.ini", log) == 0);
  std::ostringstream table;
  CHECK(verify_experiment(c, table) == 0);
  CHECK(table.str().find("all checks pass") != std::string::npos);

  const auto path = root.dir / "tiny" / "transcripts" / "center-1.txt";
  auto body = slurp(path);
  // Shift Alice's first atom key.
  auto line = body.find("move 1 alice");
  REQUIRE(line != std::string::npos);
  auto key = body.find(' ', body.find(' ', line + 13) + 1);
  body.insert(key + 1, "7");
  std::ofstream(path, std::ios::binary) << body;
  std::ostringstream bad;
  CHECK(verify_experiment(c, bad) == 2);
  CHECK(bad.str().find("center-1.txt") != std::string::npos);
  CHECK(bad.str().find("ReplayMismatch") != std::string::npos);

  auto shallow = c;
  shallow.depth = 2;
  std::filesystem::remove_all(root.dir / "tiny" / "transcripts");
  std::ostringstream diag;
  CHECK(verify_experiment(shallow, diag) == 0);
  CHECK(diag.str().find("insufficient depth") != std::string::npos);
}

TEST_CASE("module errors leave a structured record", "[config][cli]") {
  OutputRoot root("schmidt-error-test");
  auto c = parse(kTiny);
  c.product_depth = 1;
  c.scales = {1e-6, 2e-6, 3e-6};
  std::ostringstream log;
  try {
    dim_experiment(c, "tiny.ini", log);
    FAIL("expected WindowTooSmall");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::WindowTooSmall);
    write_error(output_dir(c), e);
  }
  CHECK(slurp(root.dir / "tiny" / "error.txt").rfind("code WindowTooSmall\n", 0) == 0);
}
