// SPDX-License-Identifier: Apache-2.0
#include "csrank/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "csrank/metrics.hpp"

namespace csrank {

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (!(initial_lr > 0.0)) throw ConfigError("train: initial_lr must be > 0");
  if (max_epochs < 1) throw ConfigError("train: max_epochs must be >= 1");
  if (eval_every < 1) throw ConfigError("train: eval_every must be >= 1");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0))
    throw ConfigError("train: adam betas must lie in [0, 1)");
  if (!(adam.epsilon > 0.0)) throw ConfigError("train: adam epsilon must be > 0");
  scheduler.validate();
}

Eigen::VectorXd score_logits(const ModelWeights<double>& weights, const ModelSpec& spec,
                             const FeatureBatch<double>& batch, Eigen::Index chunk) {
  const Eigen::Index n = batch.size();
  Eigen::VectorXd out(n);
  for (Eigen::Index start = 0; start < n; start += chunk) {
    const Eigen::Index len = std::min(chunk, n - start);
    FeatureBatch<double> part;
    part.continuous = batch.continuous.middleCols(start, len);
    part.categorical = batch.categorical.middleCols(start, len);
    out.segment(start, len) = forward(weights, spec, part);
  }
  return out;
}

TrainResult train(const ModelSpec& spec, const LabeledBatch& train_set,
                  const LabeledBatch& validation_set, const TrainConfig& config) {
  spec.validate();
  config.validate();
  if (train_set.size() == 0) throw DataError("train: empty training set");
  if (validation_set.size() == 0) throw DataError("train: empty validation set");
  if (train_set.labels.size() != train_set.size() ||
      validation_set.labels.size() != validation_set.size())
    throw DataError("train: labels do not match the feature batch size");
  {
    const double pos = validation_set.labels.sum();
    if (pos == 0.0 || pos == double(validation_set.size()))
      throw DataError("train: validation AUC is undefined, validation set has a single class");
  }

  TrainResult result;
  ModelWeights<double> weights = init_weights<double>(spec);
  auto adam = AdamState<double>::fresh(weights);
  PlateauScheduler scheduler(config.initial_lr, config.scheduler);
  std::mt19937_64 rng(spec.seed ^ 0x5eed5eed5eed5eedULL);

  std::vector<int> order(static_cast<std::size_t>(train_set.size()));
  std::iota(order.begin(), order.end(), 0);

  result.best_validation_auc = -1.0;
  std::int64_t step = 0;
  CompensatedSum loss_since_eval;
  int steps_since_eval = 0;

  auto evaluate = [&](int epoch) {
    const Eigen::VectorXd logits = score_logits(weights, spec, validation_set.features);
    const double auc = exact_auc(logits, validation_set.labels);
    TrainLogEntry e;
    e.step = step;
    e.epoch = epoch;
    e.lr = scheduler.lr();
    e.train_loss = steps_since_eval ? loss_since_eval.value() / steps_since_eval : 0.0;
    e.validation_auc = auc;
    e.skipped_batches = result.skipped_batches;
    result.log.push_back(e);
    if (auc > result.best_validation_auc) {
      result.best_validation_auc = auc;
      result.best_step = step;
      result.weights = weights;
    }
    scheduler.update(auc);
    loss_since_eval = CompensatedSum();
    steps_since_eval = 0;
  };

  const auto batch = std::size_t(config.batch_size);
  int epoch = 0;
  for (epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      const std::vector<int> cols(order.begin() + std::ptrdiff_t(start),
                                  order.begin() + std::ptrdiff_t(end));
      const auto features = train_set.features.gather(cols);
      Eigen::VectorXd labels(Eigen::Index(cols.size()));
      for (std::size_t j = 0; j < cols.size(); ++j) labels(Eigen::Index(j)) = train_set.labels(cols[j]);

      auto g = backward(weights, spec, features, labels, config.loss);
      if (!g) {
        ++result.skipped_batches;
        continue;
      }
      if (!std::isfinite(g->loss))
        throw NumericError("train: non-finite loss at step " + std::to_string(step + 1));
      adam_step(weights, adam, std::move(g->grad), scheduler.lr(), config.adam);
      ++step;
      loss_since_eval.add(g->loss);
      ++steps_since_eval;
      if (step % config.eval_every == 0) evaluate(epoch);
    }
  }
  if (steps_since_eval > 0 || result.log.empty()) evaluate(config.max_epochs);
  return result;
}

} // namespace csrank
