#include <iostream>
#include <string>

#include <CLI11.hpp>

#include <schmidt/runner.hpp>

using namespace schmidt;

int main(int argc, char** argv) {
  CLI::App app{"Modified Schmidt games on unstable leaves of toral automorphisms"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);
  std::string config;
  for (auto [name, help] : {std::pair{"run", "full batch: ledger, games, properties, dimension CSV, manifest"},
                            std::pair{"verify", "invariant suites only, printed as a table"},
                            std::pair{"tile", "dump the tiling levels 0..depth"},
                            std::pair{"play", "a single game with the first Bob kind and seed"},
                            std::pair{"dim", "dimension analysis only"}}) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("config", config, "experiment config")->required()->check(CLI::ExistingFile);
  }
  CLI11_PARSE(app, argc, argv);
  const std::string cmd = app.get_subcommands().front()->get_name();

  ExperimentConfig cfg;
  try {
    cfg = load_config(config);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  try {
    if (cmd == "run") return run_experiment(cfg, config, std::cout);
    if (cmd == "verify") return verify_experiment(cfg, std::cout);
    if (cmd == "tile") return tile_experiment(cfg, std::cout);
    if (cmd == "play") return play_experiment(cfg, std::cout);
    return dim_experiment(cfg, config, std::cout);
  } catch (const Error& e) {
    write_error(output_dir(cfg), e);
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
