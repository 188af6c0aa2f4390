// SPDX-License-Identifier: Apache-2.0
//
// The end-to-end run: generate -> train (+ calibrate, evaluate) -> sweep ->
// simulate-ab, driven by one JSON config. Each command reads what the
// previous one wrote under the output directory.
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "csrank/calibration.hpp"
#include "csrank/io.hpp"
#include "csrank/marketplace.hpp"
#include "csrank/metrics.hpp"
#include "csrank/nn.hpp"
#include "csrank/ranking.hpp"
#include "csrank/trainer.hpp"

namespace csrank {

inline constexpr const char* kToolVersion = "0.1.0";

enum class LabelMode { window, shuffled };

struct DataConfig {
  int n_bookings = 200000;
  int n_days = 180;
  int window_days = 30;
  int eval_days = 21;
  int train_days = 129;
  // shuffled: labels permuted across examples, a null-signal control
  LabelMode label_mode = LabelMode::window;
  // share of the eval span held out from early stopping and Platt fitting
  double test_fraction = 0.5;

  void validate() const;
};

struct SweepConfig {
  int n_sessions = 20000;
  std::vector<double> log_grid = default_alpha_grid();
  std::vector<double> raw_grid = default_alpha_grid();
  DcgConfig dcg;
  bool write_sessions = true;

  void validate() const;
};

struct RunConfig {
  WorldConfig world;
  DataConfig data;
  FeatureSchema skeleton = default_schema_skeleton();
  ModelSpec model; // continuous_dim and embeddings come from the fitted schema
  TrainConfig train;
  PlattConfig platt;
  RankingConfig ranking;
  SweepConfig sweep;
  AbConfig ab;
  int reliability_bins = 10;
  std::uint64_t seed = 1;
  std::filesystem::path out = "csrank-out";

  RunConfig();
  // Pushes the global seed into every module seed.
  void propagate_seed();
  void validate() const;
};

json to_json(const RunConfig& c);
// ConfigError on unknown keys or invalid values.
RunConfig run_config_from_json(const json& j);
RunConfig load_run_config(const std::filesystem::path& path);

// Stage helpers, shared by the commands and the acceptance suite.
struct PreparedData {
  World world;
  Dataset train;
  Dataset eval;
  std::size_t n_bookings = 0;
  std::size_t excluded = 0;
  std::size_t outside_span = 0;
};
PreparedData prepare_data(const RunConfig& config);

struct TrainedModel {
  ModelBundle model;
  TrainResult result;
  double train_auc = 0.0;
  double validation_auc = 0.0;
  double test_auc = 0.0;
  double test_auc_calibrated = 0.0;
  double bayes_auc = -1.0; // on the test rows, when the oracle column exists
  ReliabilityReport test_reliability;
  PlattFit platt_fit;
  std::vector<std::string> warnings;
  std::size_t n_validation = 0;
  std::size_t n_test = 0;
};
TrainedModel train_model(const RunConfig& config, const Dataset& train, const Dataset& eval);

// Calibrated p for each candidate.
CsScorer make_scorer(const ModelBundle& model);
Eigen::VectorXd score_dataset(const ModelBundle& model, const Dataset& data, bool calibrated);

struct CommandContext {
  bool quiet = false;
  std::ostream* log = nullptr; // progress and warnings; nullptr for silence
};

void cmd_generate(const RunConfig& config, const CommandContext& ctx);
void cmd_train(const RunConfig& config, const CommandContext& ctx);
void cmd_sweep(const RunConfig& config, const CommandContext& ctx);
void cmd_simulate_ab(const RunConfig& config, const CommandContext& ctx);
void cmd_run(const RunConfig& config, const CommandContext& ctx);

} // namespace csrank
