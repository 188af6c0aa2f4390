// SPDX-License-Identifier: Apache-2.0
//
// csrank: generate -> train -> sweep -> simulate-ab on a synthetic
// marketplace. Exit codes: 0 ok, 2 config or path error, 3 degenerate data,
// 4 numeric failure.
#include <CLI11.hpp>

#include <iostream>
#include <sstream>

#include "csrank/errors.hpp"
#include "csrank/pipeline.hpp"

namespace {

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      grid.push_back(csrank::parse_double(item, "--alpha-grid"));
    } catch (const csrank::DataError& e) {
      throw csrank::ConfigError(e.what());
    }
  }
  if (grid.empty()) throw csrank::ConfigError("--alpha-grid: no values");
  return grid;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Predict customer-support need and fold it into search ranking"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out;
  std::string alpha_grid;
  std::string loss;
  bool quiet = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON run config (defaults apply when omitted)");
    cmd->add_option("--seed", seed, "global seed");
    cmd->add_option("--out", out, "output directory");
    cmd->add_flag("--quiet", quiet, "suppress progress output");
  };

  auto* generate = app.add_subcommand("generate", "world, bookings, labeled train/eval files");
  auto* train = app.add_subcommand("train", "fit, calibrate and evaluate the CS-need model");
  auto* sweep = app.add_subcommand("sweep", "offline alpha sweep of DCGB vs DCGC for both penalty forms");
  auto* ab = app.add_subcommand("simulate-ab", "simulated cohort experiment over alphas");
  auto* run = app.add_subcommand("run", "all stages in order");
  for (auto* c : {generate, train, sweep, ab, run}) add_common(c);
  for (auto* c : {train, run}) c->add_option("--loss", loss, "auc or ce")->check(CLI::IsMember({"auc", "ce"}));
  for (auto* c : {sweep, ab, run})
    c->add_option("--alpha-grid", alpha_grid, "comma-separated alphas (sweep grid, or A/B cohort alphas)");

  auto* mults = app.add_subcommand("mults", "multiplications per scored example for a layer stack");
  int input_dim = 0;
  std::vector<int> layers;
  mults->add_option("--input-dim", input_dim, "model input width")->required();
  mults->add_option("--layers", layers, "hidden layer widths")->required()->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (mults->parsed()) {
      csrank::ModelSpec spec;
      spec.continuous_dim = input_dim;
      spec.hidden_layers = layers;
      std::cout << csrank::multiplication_count(spec) << '\n';
      return 0;
    }

    csrank::RunConfig config = config_path.empty() ? csrank::RunConfig{} : csrank::load_run_config(config_path);
    CLI::App* active = app.get_subcommands().front();
    if (active->count("--seed")) {
      config.seed = seed;
      config.propagate_seed();
    }
    if (!out.empty()) config.out = out;
    if (!loss.empty()) config.train.loss.kind = csrank::loss_kind_from_string(loss);
    if (!alpha_grid.empty()) {
      const auto grid = parse_grid(alpha_grid);
      if (active == sweep || active == run) config.sweep.log_grid = config.sweep.raw_grid = grid;
      if (active == ab || active == run) config.ab.alphas = grid;
    }
    config.validate();

    const csrank::CommandContext ctx{quiet, &std::cerr};
    if (active == generate) csrank::cmd_generate(config, ctx);
    else if (active == train) csrank::cmd_train(config, ctx);
    else if (active == sweep) csrank::cmd_sweep(config, ctx);
    else if (active == ab) csrank::cmd_simulate_ab(config, ctx);
    else csrank::cmd_run(config, ctx);
    return 0;
  } catch (const csrank::ConfigError& e) {
    std::cerr << "csrank: " << e.what() << '\n';
    return 2;
  } catch (const csrank::DataError& e) {
    std::cerr << "csrank: " << e.what() << '\n';
    return 3;
  } catch (const csrank::NumericError& e) {
    std::cerr << "csrank: " << e.what() << '\n';
    return 4;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "csrank: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "csrank: internal error: " << e.what() << '\n';
    return 1;
  }
}
