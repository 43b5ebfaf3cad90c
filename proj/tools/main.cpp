#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "acre/config.hpp"
#include "acre/plot.hpp"
#include "acre/trainer.hpp"
#include "acre/verify.hpp"

// Exit codes: 0 success, 1 runtime failure, 2 usage error.
int main(int argc, char** argv) {
  CLI::App app{"acre: a compact actor-critic reinforcement learning engine"};
  app.require_subcommand(1);

  std::string config_path, resume_path;
  CLI::App* train = app.add_subcommand("train", "Run the training loop from a config file");
  train->add_option("--config", config_path, "run config (JSON)")->required();
  train->add_option("--resume", resume_path, "checkpoint to resume from");

  std::string ckpt_path, summary_path = "eval_summary.json";
  int episodes = 0;
  bool deterministic = false;
  CLI::App* eval = app.add_subcommand("eval", "Roll out a checkpointed policy");
  eval->add_option("--ckpt", ckpt_path, "checkpoint file")->required();
  eval->add_option("--episodes", episodes, "episode count")->required();
  eval->add_flag("--deterministic", deterministic, "mean/argmax action instead of sampling");
  eval->add_option("--out", summary_path, "summary JSON path");

  std::string suite;
  CLI::App* verify = app.add_subcommand("verify", "Run the oracle and gradient-check suites");
  verify->add_option("--suite", suite, "gradcheck | identities | unbiasedness | all")
      ->required();

  std::string csv_in, img_out;
  int window = 10;
  CLI::App* plot = app.add_subcommand("plot", "Render a learning curve from a metrics CSV");
  plot->add_option("--in", csv_in, "metrics CSV")->required();
  plot->add_option("--out", img_out, "output image (BMP)")->required();
  plot->add_option("--window", window, "moving-average window");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*train) return acre::run_training(acre::load_run_config(config_path), resume_path);
    if (*eval) return acre::run_eval(ckpt_path, episodes, deterministic, summary_path);
    if (*verify) return acre::run_verify(suite);
    if (*plot) return acre::run_plot(csv_in, img_out, window);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
