#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "synlearn/cli.hpp"

using namespace synlearn;

int main(int argc, char** argv) {
  CLI::App app{"Bayesian learning from differentially private synthetic data"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string scale;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int jobs = 0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "experiment config (JSON)")->required();
    cmd->add_option("--seed", seed, "master seed override")
        ->each([&](const std::string&) { seed_set = true; });
    cmd->add_option("--jobs", jobs, "worker threads (output is identical for any value)");
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--scale", scale, "desk or paper grid presets")
        ->check(CLI::IsMember({"desk", "paper"}));
  };

  CLI::App* generate = app.add_subcommand("generate", "privatise real data via the Laplace mechanism");
  CLI::App* fit = app.add_subcommand("fit", "sample one posterior and summarise it");
  CLI::App* trajectory = app.add_subcommand("trajectory", "run the full learning-trajectory sweep");
  CLI::App* mhat = app.add_subcommand("mhat", "estimate the optimal synthetic quantity");
  CLI::App* neff = app.add_subcommand("neff", "bootstrap effective real-sample gains");
  CLI::App* test = app.add_subcommand("test", "p-value test for using synthetic data");
  for (CLI::App* cmd : {generate, fit, trajectory, mhat, neff, test}) add_common(cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    ExperimentConfig cfg = load_config(config_path);
    if (seed_set) cfg.seed = seed;
    if (jobs > 0) cfg.jobs = jobs;
    if (!scale.empty()) {
      cfg.scale = scale == "paper" ? Scale::Paper : Scale::Desk;
    }
    if (!out_dir.empty()) {
      cfg.out_dir = out_dir;
    } else if (const char* env = std::getenv("SYNLEARN_OUT");
               env != nullptr && cfg.out_dir == ".") {
      cfg.out_dir = env;
    }

    if (app.got_subcommand(generate)) return cmd_generate(cfg);
    if (app.got_subcommand(fit)) return cmd_fit(cfg);
    if (app.got_subcommand(trajectory)) return cmd_trajectory(cfg);
    if (app.got_subcommand(mhat)) return cmd_mhat(cfg);
    if (app.got_subcommand(neff)) return cmd_neff(cfg);
    if (app.got_subcommand(test)) return cmd_test(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
