// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "csrank/nn.hpp"

namespace csrank {

struct TrainConfig {
  int batch_size = 5000;
  double initial_lr = 1e-3;
  AdamConfig adam;
  SchedulerConfig scheduler;
  int max_epochs = 20;
  LossConfig loss;
  int eval_every = 25; // optimizer steps between validation evaluations

  void validate() const;
};

struct LabeledBatch {
  FeatureBatch<double> features;
  Eigen::VectorXd labels;

  Eigen::Index size() const { return features.size(); }
};

struct TrainLogEntry {
  std::int64_t step = 0;
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0; // mean over the steps since the previous entry
  double validation_auc = 0.0;
  std::int64_t skipped_batches = 0; // cumulative
};

struct TrainResult {
  ModelWeights<double> weights; // best-validation-AUC checkpoint
  std::vector<TrainLogEntry> log;
  double best_validation_auc = 0.0;
  std::int64_t best_step = 0;
  std::int64_t skipped_batches = 0;
};

// Mini-batch Adam with reduce-on-plateau scheduling on validation AUC.
// Single-threaded; the result is a pure function of (spec, data, config).
TrainResult train(const ModelSpec& spec, const LabeledBatch& train_set,
                  const LabeledBatch& validation_set, const TrainConfig& config);

// Logits for a large batch, evaluated in column chunks.
Eigen::VectorXd score_logits(const ModelWeights<double>& weights, const ModelSpec& spec,
                             const FeatureBatch<double>& batch,
                             Eigen::Index chunk = 8192);

} // namespace csrank
