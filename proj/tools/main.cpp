// arrival: train, predict, evaluate, generate.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "arrival/cli.hpp"

namespace {

void add_common(CLI::App* sub, arrival::cli::Overrides& ov, std::uint64_t& seed) {
  sub->add_option("--config", ov.config, "key = value config file");
  sub->add_option("--checkpoint", ov.checkpoint, "checkpoint path");
  sub->add_option("--out", ov.out, "output path");
  sub->add_option("--seed", seed, "random seed");
}

}  // namespace

int main(int argc, char** argv) {
  using namespace arrival::cli;
  CLI::App app{"Censored arrival-time forecasting with recurrent Weibull models"};
  app.require_subcommand(1);
  Overrides ov;
  std::uint64_t seed = 0;
  auto* train = app.add_subcommand("train", "fit a model and write a checkpoint");
  auto* predict = app.add_subcommand("predict", "per-subject hit probabilities and point estimates");
  auto* evaluate = app.add_subcommand("evaluate", "ROC-AUC and error metrics on a holdout");
  auto* gen = app.add_subcommand("generate", "synthetic transactions with known truth");
  for (auto* sub : {train, predict, evaluate, gen}) add_common(sub, ov, seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalidInput;
  }
  for (auto* sub : {train, predict, evaluate, gen}) {
    if (sub->count("--seed") > 0) ov.seed = seed;
  }

  RunConfig rc;
  try {
    rc = resolve_config(ov);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalidInput;
  }
  if (*train) return cmd_train(rc);
  if (*predict) return cmd_predict(rc);
  if (*evaluate) return cmd_evaluate(rc);
  return cmd_generate(rc);
}
