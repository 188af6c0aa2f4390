// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <random>

#include "csrank/metrics.hpp"
#include "csrank/nn.hpp"
#include "csrank/trainer.hpp"
#include "oracles.hpp"

using namespace csrank;

namespace {

ModelSpec tiny_spec(int cont, std::vector<int> layers, std::vector<EmbeddingSpec> emb = {}) {
  ModelSpec s;
  s.continuous_dim = cont;
  s.hidden_layers = std::move(layers);
  s.embeddings = std::move(emb);
  s.l2_coefficient = 0.0;
  return s;
}

FeatureBatch<double> random_batch(const ModelSpec& spec, int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  FeatureBatch<double> b;
  b.continuous.resize(spec.continuous_dim, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < spec.continuous_dim; ++i) b.continuous(i, j) = g(rng);
  b.categorical.resize(Eigen::Index(spec.embeddings.size()), n);
  for (std::size_t k = 0; k < spec.embeddings.size(); ++k)
    for (int j = 0; j < n; ++j)
      b.categorical(Eigen::Index(k), j) =
          std::uniform_int_distribution<int>(0, spec.embeddings[k].vocab_size - 1)(rng);
  return b;
}

double total_loss(const ModelWeights<double>& w, const ModelSpec& spec, const FeatureBatch<double>& b,
                  const Eigen::VectorXd& y, const LossConfig& lc) {
  return backward(w, spec, b, y, lc)->loss;
}

// Checks every parameter entry against a central difference of the full loss.
int gradient_mismatches(ModelWeights<double> w, const ModelSpec& spec, const FeatureBatch<double>& b,
                        const Eigen::VectorXd& y, const LossConfig& lc, double* worst) {
  const auto g = backward(w, spec, b, y, lc);
  REQUIRE(g.has_value());
  ModelWeights<double> analytic = g->grad;
  int bad = 0;
  *worst = 0.0;
  auto check = [&](Tensor<double>& param, const Tensor<double>& grad) {
    for (Eigen::Index i = 0; i < param.size(); ++i) {
      const double orig = param(i);
      const double fd = oracle::central_difference(
          [&](double v) {
            param(i) = v;
            const double l = total_loss(w, spec, b, y, lc);
            param(i) = orig;
            return l;
          },
          orig, 1e-6);
      const double an = grad(i);
      const double err = std::abs(fd - an);
      const double rel = err / std::max(std::abs(fd), std::abs(an));
      if (!(err <= 1e-7 || rel <= 1e-5)) ++bad;
      if (err > 1e-7) *worst = std::max(*worst, rel);
    }
  };
  for (std::size_t l = 0; l < w.weights.size(); ++l) {
    check(w.weights[l], analytic.weights[l]);
    check(w.biases[l], analytic.biases[l]);
  }
  for (std::size_t k = 0; k < w.embeddings.size(); ++k) check(w.embeddings[k], analytic.embeddings[k]);
  return bad;
}

} // namespace

TEST_SUITE("core-nn") {

TEST_CASE("multiplication counts reproduce the published layer stacks") {
  ModelSpec s;
  s.continuous_dim = 209;
  s.hidden_layers = {128, 64, 32};
  CHECK(multiplication_count(s) == 36992);
  s.hidden_layers = {64, 32};
  CHECK(multiplication_count(s) == 15424);
  s.hidden_layers = {512, 256, 64, 32};
  CHECK(multiplication_count(s) == 256512);
}

TEST_CASE("input_dim sums continuous and embedding widths") {
  const ModelSpec s = tiny_spec(5, {4}, {{10, 3}, {4, 2}});
  CHECK(s.input_dim() == 10);
  CHECK(multiplication_count(s) == 40);
}

TEST_CASE("spec validation") {
  ModelSpec s = tiny_spec(2, {});
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s.hidden_layers = {3, 0};
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s.hidden_layers = {3};
  s.activation = {Activation::Kind::leaky_relu, 1.5};
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s.activation = {Activation::Kind::leaky_relu, 0.01};
  CHECK_NOTHROW(s.validate());
  s.l2_coefficient = -1;
  CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("forward on hand-built nets") {
  const ModelSpec s = tiny_spec(1, {1});
  ModelWeights<double> w = init_weights(s).zeros_like();
  Vec<double> x(1);
  x << 2.0;
  CHECK(forward(w, s, x) == 0.0);

  w.weights[0](0, 0) = 1.0;
  w.weights[1](0, 0) = 1.0;
  CHECK(forward(w, s, x) == 2.0);
  x << -2.0;
  CHECK(forward(w, s, x) == 0.0);
}

TEST_CASE("relu net with zero biases maps zero input to zero logit") {
  ModelSpec s = tiny_spec(6, {8, 4});
  s.seed = 3;
  const auto w = init_weights(s);
  CHECK(forward(w, s, Vec<double>(Vec<double>::Zero(6))) == 0.0);
}

TEST_CASE("forward errors name the offending layer or feature") {
  const ModelSpec s = tiny_spec(2, {3}, {{4, 2}});
  auto w = init_weights(s);
  FeatureBatch<double> b;
  b.continuous = Tensor<double>::Zero(3, 1);
  b.categorical = Eigen::MatrixXi::Zero(1, 1);
  CHECK_THROWS_WITH_AS(forward(w, s, b), doctest::Contains("continuous"), DataError);

  b.continuous = Tensor<double>::Zero(2, 1);
  b.categorical(0, 0) = 4;
  CHECK_THROWS_WITH_AS(forward(w, s, b), doctest::Contains("categorical feature 0"), DataError);

  b.categorical(0, 0) = 1;
  w.weights[1] = Tensor<double>::Zero(1, 5);
  CHECK_THROWS_WITH_AS(forward(w, s, b), doctest::Contains("output"), DataError);
}

TEST_CASE("init is deterministic and within the Glorot bound") {
  ModelSpec s = tiny_spec(10, {6, 3}, {{5, 2}});
  s.seed = 42;
  const auto a = init_weights(s), b = init_weights(s);
  for (std::size_t l = 0; l < a.weights.size(); ++l) {
    CHECK(a.weights[l] == b.weights[l]);
    CHECK(a.biases[l].isZero());
  }
  const double limit = std::sqrt(6.0 / (12 + 6));
  CHECK(a.weights[0].cwiseAbs().maxCoeff() <= limit);
  CHECK(a.embeddings[0].cwiseAbs().maxCoeff() <= 0.05);
}

TEST_CASE("gradients match central differences on a 2-4-1 net") {
  std::mt19937_64 rng(5);
  ModelSpec s = tiny_spec(2, {4});
  s.seed = 11;
  s.l2_coefficient = 0.01;
  const auto w = init_weights(s);
  const auto b = random_batch(s, 5, rng);
  Eigen::VectorXd y(5);
  y << 1, 0, 0, 1, 0;
  for (auto kind : {LossKind::auc_surrogate, LossKind::cross_entropy}) {
    double worst = 0;
    CHECK(gradient_mismatches(w, s, b, y, {kind, PairReduction::mean_over_pairs}, &worst) == 0);
  }
  double worst = 0;
  CHECK(gradient_mismatches(w, s, b, y, {LossKind::auc_surrogate, PairReduction::sum}, &worst) == 0);
}

TEST_CASE("gradients match central differences on random nets with embeddings") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    std::uniform_int_distribution<int> width(1, 8);
    ModelSpec s = tiny_spec(width(rng), {width(rng), width(rng)}, {{width(rng) + 1, width(rng) % 3 + 1}});
    if (trial % 2) s.hidden_layers.push_back(std::uniform_int_distribution<int>(1, 4)(rng));
    s.activation = trial % 3 == 0 ? Activation{Activation::Kind::leaky_relu, 0.1} : Activation{};
    s.seed = std::uint64_t(100 + trial);
    s.l2_coefficient = trial % 2 ? 0.005 : 0.0;
    // zero biases behind a dead layer would sit exactly on the ReLU kink
    auto w = init_weights(s);
    std::normal_distribution<double> bias(0.0, 0.2);
    for (auto& t : w.biases)
      for (Eigen::Index i = 0; i < t.size(); ++i) t(i) = bias(rng);
    const auto b = random_batch(s, 7, rng);
    Eigen::VectorXd y(7);
    y << 1, 0, 1, 0, 0, 0, 1;
    for (auto kind : {LossKind::auc_surrogate, LossKind::cross_entropy}) {
      double worst = 0;
      CAPTURE(trial);
      CHECK(gradient_mismatches(w, s, b, y, {kind, PairReduction::mean_over_pairs}, &worst) == 0);
    }
  }
}

TEST_CASE("l2 gradient is 2cw on weights only") {
  ModelSpec s = tiny_spec(3, {4}, {{3, 2}});
  s.seed = 8;
  s.l2_coefficient = 0.25;
  auto w = init_weights(s);
  for (auto& b : w.biases) b.setConstant(0.3);
  // zero output weights make the data loss constant in every other parameter
  w.weights.back().setZero();
  std::mt19937_64 rng(1);
  const auto batch = random_batch(s, 4, rng);
  Eigen::VectorXd y(4);
  y << 1, 0, 1, 0;
  const auto g = backward(w, s, batch, y, {LossKind::auc_surrogate, PairReduction::mean_over_pairs});
  REQUIRE(g);
  CHECK((g->grad.weights[0] - 2 * 0.25 * w.weights[0]).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  CHECK(g->grad.biases[0].isZero());
  CHECK(g->grad.embeddings[0].isZero());
  CHECK(g->loss == doctest::Approx(g->data_loss + 0.25 * w.weights[0].squaredNorm()));

  s.l2_coefficient = 0;
  const auto g0 = backward(w, s, batch, y, {LossKind::auc_surrogate, PairReduction::mean_over_pairs});
  CHECK(g0->loss == g0->data_loss);
}

TEST_CASE("embedding gradients land only on looked-up rows") {
  ModelSpec s = tiny_spec(1, {3}, {{6, 2}});
  s.seed = 4;
  const auto w = init_weights(s);
  FeatureBatch<double> b;
  b.continuous = Tensor<double>::Ones(1, 3);
  b.categorical.resize(1, 3);
  b.categorical << 1, 4, 1;
  Eigen::VectorXd y(3);
  y << 1, 0, 0;
  const auto g = backward(w, s, b, y, {LossKind::cross_entropy, PairReduction::mean_over_pairs});
  for (int r : {0, 2, 3, 5}) CHECK(g->grad.embeddings[0].row(r).isZero());
}

TEST_CASE("single-class batch is skippable under the AUC surrogate") {
  const ModelSpec s = tiny_spec(2, {2});
  const auto w = init_weights(s);
  std::mt19937_64 rng(2);
  const auto b = random_batch(s, 4, rng);
  const Eigen::VectorXd y = Eigen::VectorXd::Zero(4);
  CHECK_FALSE(backward(w, s, b, y, {LossKind::auc_surrogate, PairReduction::mean_over_pairs}).has_value());
  CHECK(backward(w, s, b, y, {LossKind::cross_entropy, PairReduction::mean_over_pairs}).has_value());
}

TEST_CASE("adam matches a scalar hand computation") {
  const ModelSpec s = tiny_spec(1, {1});
  auto w = init_weights(s).zeros_like();
  auto state = AdamState<double>::fresh(w);
  adam_step(w, state, w.zeros_like(), 0.1);
  CHECK(w.weights[0].isZero());
  CHECK(state.step == 1);

  auto g = w.zeros_like();
  g.weights[0](0, 0) = 1.0;
  for (int i = 0; i < 3; ++i) {
    const double before = w.weights[0](0, 0);
    adam_step(w, state, g, 0.1);
    CHECK(w.weights[0](0, 0) < before);
  }
  // the zero-gradient first step advanced only the counter
  oracle::ScalarAdam ref2;
  double q = ref2.step(0.0, 0.0, 0.1);
  for (int i = 0; i < 3; ++i) q = ref2.step(q, 1.0, 0.1);
  CHECK(w.weights[0](0, 0) == doctest::Approx(q).epsilon(1e-14));

  auto w1 = init_weights(s).zeros_like();
  auto st1 = AdamState<double>::fresh(w1);
  adam_step(w1, st1, g, 0.1);
  CHECK(w1.weights[0](0, 0) == doctest::Approx(-0.1 / (1 + 1e-8)).epsilon(1e-14));
}

TEST_CASE("adam refuses non-finite gradients before updating") {
  const ModelSpec s = tiny_spec(2, {2});
  auto w = init_weights(s);
  const auto before = w.weights[0];
  auto state = AdamState<double>::fresh(w);
  auto g = w.zeros_like();
  g.weights[1](0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_WITH_AS(adam_step(w, state, g, 0.1), doctest::Contains("output.weight"), NumericError);
  CHECK(w.weights[0] == before);
  CHECK(state.step == 0);
}

TEST_CASE("plateau scheduler") {
  SchedulerConfig c;
  c.patience_evals = 2;
  c.min_delta = 0.0;
  PlateauScheduler s(0.001, c);
  s.update(0.70);
  s.update(0.70);
  CHECK(s.lr() == 0.001);
  s.update(0.70);
  CHECK(s.lr() == 0.0005);

  PlateauScheduler up(0.01, c);
  for (double m : {0.5, 0.6, 0.7, 0.8}) up.update(m);
  CHECK(up.lr() == 0.01);

  c.min_lr = 0.01;
  PlateauScheduler floor(0.01, c);
  for (int i = 0; i < 10; ++i) floor.update(0.5);
  CHECK(floor.lr() == 0.01);

  c.factor = 1.0;
  CHECK_THROWS_AS(PlateauScheduler(0.1, c), ConfigError);
}

TEST_CASE("training separates a linearly separable toy set") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  auto make = [&](int n) {
    LabeledBatch b;
    b.features.continuous.resize(2, n);
    b.features.categorical.resize(0, n);
    b.labels.resize(n);
    for (int j = 0; j < n; ++j) {
      const double x0 = g(rng), x1 = g(rng);
      b.features.continuous(0, j) = x0;
      b.features.continuous(1, j) = x1;
      b.labels(j) = x0 + 0.5 * x1 > 0.3 ? 1 : 0;
    }
    return b;
  };
  const auto train_set = make(200), val = make(200);
  ModelSpec s = tiny_spec(2, {8, 4});
  s.seed = 1;
  TrainConfig c;
  c.batch_size = 50;
  c.initial_lr = 0.01;
  c.max_epochs = 50;
  c.eval_every = 4;
  const auto r = train(s, train_set, val, c);
  CHECK(r.best_validation_auc >= 0.99);
  CHECK(exact_auc(score_logits(r.weights, s, val.features), val.labels) == r.best_validation_auc);

  const auto again = train(s, train_set, val, c);
  for (std::size_t l = 0; l < r.weights.weights.size(); ++l) CHECK(again.weights.weights[l] == r.weights.weights[l]);
  CHECK(again.log.size() == r.log.size());
}

TEST_CASE("training rejects a single-class validation set") {
  LabeledBatch t, v;
  t.features.continuous = Tensor<double>::Random(1, 10);
  t.features.categorical.resize(0, 10);
  t.labels = Eigen::VectorXd::Zero(10);
  t.labels(0) = 1;
  v = t;
  v.labels.setZero();
  CHECK_THROWS_AS(train(tiny_spec(1, {2}), t, v, TrainConfig{}), DataError);
}

TEST_CASE("float scoring follows double scoring") {
  ModelSpec s = tiny_spec(4, {8, 4}, {{3, 2}});
  s.seed = 21;
  const auto w = init_weights(s);
  std::mt19937_64 rng(3);
  const auto b = random_batch(s, 16, rng);
  const Vec<double> d = forward(w, s, b);
  const Vec<float> f = forward(w.cast<float>(), s, b.cast<float>());
  CHECK((d - f.cast<double>()).cwiseAbs().maxCoeff() < 1e-4);
}

}
