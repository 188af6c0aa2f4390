// SPDX-License-Identifier: Apache-2.0
//
// Feed-forward scorer f(x): categorical embeddings concatenated with the
// continuous features, a stack of dense hidden layers, and one linear output
// unit producing a logit. Everything here is templated on the scalar type so
// that training runs in double while scoring may use float.
#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "csrank/errors.hpp"
#include "csrank/losses.hpp"

namespace csrank {

template <typename Scalar>
using Tensor = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

struct Activation {
  enum class Kind { relu, leaky_relu };
  Kind kind = Kind::relu;
  double slope = 0.01; // leaky_relu only
};

struct EmbeddingSpec {
  int vocab_size = 1;
  int embed_dim = 1;
};

struct ModelSpec {
  int continuous_dim = 0;
  std::vector<int> hidden_layers{128, 64, 32};
  Activation activation;
  std::vector<EmbeddingSpec> embeddings;
  double l2_coefficient = 0.0005;
  std::uint64_t seed = 0;

  // continuous_dim plus the summed embedding widths.
  int input_dim() const {
    int d = continuous_dim;
    for (const auto& e : embeddings) d += e.embed_dim;
    return d;
  }

  void validate() const {
    if (continuous_dim < 0) throw ConfigError("model: continuous_dim < 0");
    if (hidden_layers.empty())
      throw ConfigError("model: hidden_layers must be non-empty");
    for (int h : hidden_layers)
      if (h < 1) throw ConfigError("model: hidden layer width must be >= 1");
    if (activation.kind == Activation::Kind::leaky_relu &&
        !(activation.slope > 0.0 && activation.slope < 1.0))
      throw ConfigError("model: leaky_relu slope must lie in (0, 1)");
    for (const auto& e : embeddings)
      if (e.vocab_size < 1 || e.embed_dim < 1)
        throw ConfigError("model: embedding vocab_size and embed_dim must be >= 1");
    if (input_dim() < 1) throw ConfigError("model: input_dim must be >= 1");
    if (!(l2_coefficient >= 0.0))
      throw ConfigError("model: l2_coefficient must be non-negative");
  }

  std::size_t n_dense() const { return hidden_layers.size() + 1; }
};

// Multiplications per scored example, counting input->hidden and
// hidden->hidden products only. The final hidden->output dot product is not
// counted.
inline std::int64_t multiplication_count(const ModelSpec& spec) {
  spec.validate();
  std::int64_t count =
      std::int64_t(spec.input_dim()) * spec.hidden_layers.front();
  for (std::size_t i = 0; i + 1 < spec.hidden_layers.size(); ++i)
    count += std::int64_t(spec.hidden_layers[i]) * spec.hidden_layers[i + 1];
  return count;
}

// Column-per-example batch. continuous is continuous_dim x n, categorical is
// n_categorical x n.
template <typename Scalar>
struct FeatureBatch {
  Tensor<Scalar> continuous;
  Eigen::MatrixXi categorical;

  Eigen::Index size() const { return continuous.cols(); }

  FeatureBatch gather(const std::vector<int>& columns) const {
    FeatureBatch out;
    out.continuous.resize(continuous.rows(), Eigen::Index(columns.size()));
    out.categorical.resize(categorical.rows(), Eigen::Index(columns.size()));
    for (std::size_t j = 0; j < columns.size(); ++j) {
      out.continuous.col(Eigen::Index(j)) = continuous.col(columns[j]);
      out.categorical.col(Eigen::Index(j)) = categorical.col(columns[j]);
    }
    return out;
  }

  template <typename Other>
  FeatureBatch<Other> cast() const {
    return {continuous.template cast<Other>(), categorical};
  }
};

// Dense weights are stored out x in; biases are out x 1; embedding tables
// are vocab x dim. The last dense layer is the output unit (1 x last_hidden).
template <typename Scalar>
struct ModelWeights {
  std::vector<Tensor<Scalar>> weights;
  std::vector<Tensor<Scalar>> biases;
  std::vector<Tensor<Scalar>> embeddings;
  std::string version = "csrank-mlp-1";

  static std::string dense_name(std::size_t layer, std::size_t n_dense) {
    return layer + 1 == n_dense ? std::string("output")
                                : "dense_" + std::to_string(layer);
  }
  static std::string embedding_name(std::size_t k) {
    return "embedding_" + std::to_string(k);
  }

  ModelWeights zeros_like() const {
    ModelWeights z;
    z.version = version;
    for (const auto& w : weights) z.weights.push_back(Tensor<Scalar>::Zero(w.rows(), w.cols()));
    for (const auto& b : biases) z.biases.push_back(Tensor<Scalar>::Zero(b.rows(), b.cols()));
    for (const auto& e : embeddings) z.embeddings.push_back(Tensor<Scalar>::Zero(e.rows(), e.cols()));
    return z;
  }

  template <typename Other>
  ModelWeights<Other> cast() const {
    ModelWeights<Other> out;
    out.version = version;
    for (const auto& w : weights) out.weights.push_back(w.template cast<Other>());
    for (const auto& b : biases) out.biases.push_back(b.template cast<Other>());
    for (const auto& e : embeddings) out.embeddings.push_back(e.template cast<Other>());
    return out;
  }

  // Visits every parameter tensor with its name, in a fixed order.
  template <typename Fn>
  void for_each(Fn&& fn) {
    const std::size_t n = weights.size();
    for (std::size_t l = 0; l < n; ++l) {
      fn(dense_name(l, n) + ".weight", weights[l]);
      fn(dense_name(l, n) + ".bias", biases[l]);
    }
    for (std::size_t k = 0; k < embeddings.size(); ++k)
      fn(embedding_name(k), embeddings[k]);
  }

  // Visits matching tensors of two same-shaped weight sets.
  template <typename Fn>
  void for_each_with(const ModelWeights& other, Fn&& fn) {
    const std::size_t n = weights.size();
    for (std::size_t l = 0; l < n; ++l) {
      fn(dense_name(l, n) + ".weight", weights[l], other.weights[l]);
      fn(dense_name(l, n) + ".bias", biases[l], other.biases[l]);
    }
    for (std::size_t k = 0; k < embeddings.size(); ++k)
      fn(embedding_name(k), embeddings[k], other.embeddings[k]);
  }
};

// Throws DataError naming the first tensor whose shape breaks the chain
// input_dim -> hidden... -> 1.
template <typename Scalar>
void check_shapes(const ModelWeights<Scalar>& w, const ModelSpec& spec) {
  const std::size_t n = spec.n_dense();
  if (w.weights.size() != n || w.biases.size() != n)
    throw DataError("weights: expected " + std::to_string(n) +
                    " dense layers, got " + std::to_string(w.weights.size()));
  int fan_in = spec.input_dim();
  for (std::size_t l = 0; l < n; ++l) {
    const int fan_out = l + 1 == n ? 1 : spec.hidden_layers[l];
    const auto name = ModelWeights<Scalar>::dense_name(l, n);
    if (w.weights[l].rows() != fan_out || w.weights[l].cols() != fan_in)
      throw DataError("layer " + name + ": expected weight " +
                      std::to_string(fan_out) + "x" + std::to_string(fan_in) +
                      ", got " + std::to_string(w.weights[l].rows()) + "x" +
                      std::to_string(w.weights[l].cols()));
    if (w.biases[l].rows() != fan_out || w.biases[l].cols() != 1)
      throw DataError("layer " + name + ": expected bias of length " +
                      std::to_string(fan_out));
    fan_in = fan_out;
  }
  if (w.embeddings.size() != spec.embeddings.size())
    throw DataError("weights: expected " +
                    std::to_string(spec.embeddings.size()) +
                    " embedding tables, got " +
                    std::to_string(w.embeddings.size()));
  for (std::size_t k = 0; k < spec.embeddings.size(); ++k)
    if (w.embeddings[k].rows() != spec.embeddings[k].vocab_size ||
        w.embeddings[k].cols() != spec.embeddings[k].embed_dim)
      throw DataError("layer " + ModelWeights<Scalar>::embedding_name(k) +
                      ": table shape does not match spec");
}

// Glorot-uniform dense weights, zero biases, embeddings uniform(-0.05, 0.05).
// Draw order: dense layers first (row-major within a layer), then tables.
template <typename Scalar = double>
ModelWeights<Scalar> init_weights(const ModelSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  ModelWeights<Scalar> w;
  const std::size_t n = spec.n_dense();
  int fan_in = spec.input_dim();
  for (std::size_t l = 0; l < n; ++l) {
    const int fan_out = l + 1 == n ? 1 : spec.hidden_layers[l];
    const double limit = std::sqrt(6.0 / double(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-limit, limit);
    Tensor<Scalar> m(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r)
      for (int c = 0; c < fan_in; ++c) m(r, c) = Scalar(u(rng));
    w.weights.push_back(std::move(m));
    w.biases.push_back(Tensor<Scalar>::Zero(fan_out, 1));
    fan_in = fan_out;
  }
  std::uniform_real_distribution<double> ue(-0.05, 0.05);
  for (const auto& e : spec.embeddings) {
    Tensor<Scalar> t(e.vocab_size, e.embed_dim);
    for (int r = 0; r < e.vocab_size; ++r)
      for (int c = 0; c < e.embed_dim; ++c) t(r, c) = Scalar(ue(rng));
    w.embeddings.push_back(std::move(t));
  }
  return w;
}

namespace detail {

template <typename Scalar>
Tensor<Scalar> assemble_input(const ModelWeights<Scalar>& w,
                              const ModelSpec& spec,
                              const FeatureBatch<Scalar>& batch) {
  const Eigen::Index n = batch.size();
  if (batch.continuous.rows() != spec.continuous_dim)
    throw DataError("layer input: expected " +
                    std::to_string(spec.continuous_dim) +
                    " continuous features, got " +
                    std::to_string(batch.continuous.rows()));
  if (batch.categorical.rows() != Eigen::Index(spec.embeddings.size()) ||
      (batch.categorical.rows() > 0 && batch.categorical.cols() != n))
    throw DataError("layer input: expected " +
                    std::to_string(spec.embeddings.size()) +
                    " categorical features per example, got " +
                    std::to_string(batch.categorical.rows()));
  Tensor<Scalar> input(spec.input_dim(), n);
  input.topRows(spec.continuous_dim) = batch.continuous;
  Eigen::Index offset = spec.continuous_dim;
  for (std::size_t k = 0; k < spec.embeddings.size(); ++k) {
    const int vocab = spec.embeddings[k].vocab_size;
    const int dim = spec.embeddings[k].embed_dim;
    for (Eigen::Index j = 0; j < n; ++j) {
      const int id = batch.categorical(Eigen::Index(k), j);
      if (id < 0 || id >= vocab)
        throw DataError("categorical feature " + std::to_string(k) + ": id " +
                        std::to_string(id) + " outside vocabulary of size " +
                        std::to_string(vocab));
      input.block(offset, j, dim, 1) = w.embeddings[k].row(id).transpose();
    }
    offset += dim;
  }
  return input;
}

template <typename Scalar>
void activate(Tensor<Scalar>& z, const Activation& act) {
  if (act.kind == Activation::Kind::relu) {
    z = z.cwiseMax(Scalar(0));
  } else {
    const Scalar slope = Scalar(act.slope);
    z = (z.array() > Scalar(0)).select(z, slope * z);
  }
}

template <typename Scalar>
Tensor<Scalar> activation_grad(const Tensor<Scalar>& pre, const Activation& act) {
  const Scalar low = act.kind == Activation::Kind::relu ? Scalar(0) : Scalar(act.slope);
  return (pre.array() > Scalar(0)).select(Tensor<Scalar>::Ones(pre.rows(), pre.cols()),
                                          Tensor<Scalar>::Constant(pre.rows(), pre.cols(), low));
}

} // namespace detail

// Logits for every example in the batch. Pure; safe to call concurrently on
// shared weights.
template <typename Scalar>
Vec<Scalar> forward(const ModelWeights<Scalar>& w, const ModelSpec& spec,
                    const FeatureBatch<Scalar>& batch) {
  check_shapes(w, spec);
  Tensor<Scalar> a = detail::assemble_input(w, spec, batch);
  const std::size_t n = spec.n_dense();
  for (std::size_t l = 0; l + 1 < n; ++l) {
    Tensor<Scalar> z = w.weights[l] * a;
    z.colwise() += w.biases[l].col(0);
    detail::activate(z, spec.activation);
    a = std::move(z);
  }
  Tensor<Scalar> out = w.weights.back() * a;
  out.colwise() += w.biases.back().col(0);
  return out.row(0).transpose();
}

// Single-example convenience overload.
template <typename Scalar>
Scalar forward(const ModelWeights<Scalar>& w, const ModelSpec& spec,
               const Vec<Scalar>& continuous,
               const Eigen::VectorXi& categorical = Eigen::VectorXi()) {
  FeatureBatch<Scalar> b;
  b.continuous = continuous;
  b.categorical = categorical.size() ? Eigen::MatrixXi(categorical)
                                     : Eigen::MatrixXi(0, 1);
  return forward(w, spec, b)(0);
}

template <typename Scalar>
Scalar l2_penalty(const ModelWeights<Scalar>& w, const ModelSpec& spec) {
  Scalar s(0);
  for (const auto& m : w.weights) s += m.squaredNorm();
  return Scalar(spec.l2_coefficient) * s;
}

template <typename Scalar>
struct Gradient {
  ModelWeights<Scalar> grad;
  Scalar data_loss{0};
  Scalar loss{0}; // data_loss + l2 penalty
};

// Gradients of (loss + l2 * sum ||W||^2) over dense weight matrices. Biases
// and embedding tables are not penalized. nullopt signals a single-class
// batch under the AUC surrogate.
template <typename Scalar, typename DerivedY>
std::optional<Gradient<Scalar>>
backward(const ModelWeights<Scalar>& w, const ModelSpec& spec,
         const FeatureBatch<Scalar>& batch,
         const Eigen::MatrixBase<DerivedY>& labels, const LossConfig& loss) {
  check_shapes(w, spec);
  if (batch.size() == 0) throw DataError("backward: empty batch");
  const std::size_t n = spec.n_dense();

  std::vector<Tensor<Scalar>> acts; // acts[l] is the input to dense layer l
  std::vector<Tensor<Scalar>> pres; // pre-activations of hidden layers
  acts.push_back(detail::assemble_input(w, spec, batch));
  for (std::size_t l = 0; l + 1 < n; ++l) {
    Tensor<Scalar> z = w.weights[l] * acts.back();
    z.colwise() += w.biases[l].col(0);
    pres.push_back(z);
    detail::activate(z, spec.activation);
    acts.push_back(std::move(z));
  }
  Tensor<Scalar> out = w.weights.back() * acts.back();
  out.colwise() += w.biases.back().col(0);
  const Vec<Scalar> logits = out.row(0).transpose();

  const auto lv = compute_loss(logits, labels, loss);
  if (!lv) return std::nullopt;

  Gradient<Scalar> g;
  g.grad = w.zeros_like();
  g.data_loss = lv->loss;
  g.loss = lv->loss + l2_penalty(w, spec);

  Tensor<Scalar> delta = lv->grad.transpose(); // 1 x n
  for (std::size_t l = n; l-- > 0;) {
    g.grad.weights[l].noalias() = delta * acts[l].transpose();
    g.grad.biases[l] = delta.rowwise().sum();
    if (l == 0 && spec.embeddings.empty()) break;
    Tensor<Scalar> back = w.weights[l].transpose() * delta;
    if (l > 0)
      delta = back.cwiseProduct(detail::activation_grad(pres[l - 1], spec.activation));
    else
      delta = std::move(back);
  }
  const Scalar two_c = Scalar(2 * spec.l2_coefficient);
  for (std::size_t l = 0; l < n; ++l) g.grad.weights[l] += two_c * w.weights[l];

  // delta is now d loss / d input; scatter embedding slices into table rows.
  Eigen::Index offset = spec.continuous_dim;
  for (std::size_t k = 0; k < spec.embeddings.size(); ++k) {
    const int dim = spec.embeddings[k].embed_dim;
    for (Eigen::Index j = 0; j < batch.size(); ++j) {
      const int id = batch.categorical(Eigen::Index(k), j);
      g.grad.embeddings[k].row(id) += delta.block(offset, j, dim, 1).transpose();
    }
    offset += dim;
  }
  return g;
}

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename Scalar>
struct AdamState {
  ModelWeights<Scalar> m;
  ModelWeights<Scalar> v;
  std::int64_t step = 0;

  static AdamState fresh(const ModelWeights<Scalar>& like) {
    return {like.zeros_like(), like.zeros_like(), 0};
  }
};

// One bias-corrected Adam update. Throws NumericError before touching any
// parameter if a gradient entry is not finite.
template <typename Scalar>
void adam_step(ModelWeights<Scalar>& w, AdamState<Scalar>& state,
               ModelWeights<Scalar> grads, double lr,
               const AdamConfig& cfg = {}) {
  grads.for_each([](const std::string& name, Tensor<Scalar>& g) {
    if (!g.allFinite()) {
      const Scalar max_abs = g.size() ? g.cwiseAbs().maxCoeff() : Scalar(0);
      throw NumericError("adam_step: non-finite gradient in " + name +
                         " (max |g| = " + std::to_string(double(max_abs)) + ")");
    }
  });
  state.step += 1;
  const Scalar b1 = Scalar(cfg.beta1), b2 = Scalar(cfg.beta2);
  const Scalar c1 = Scalar(1) - Scalar(std::pow(cfg.beta1, double(state.step)));
  const Scalar c2 = Scalar(1) - Scalar(std::pow(cfg.beta2, double(state.step)));
  const Scalar eps = Scalar(cfg.epsilon);
  const Scalar rate = Scalar(lr);

  auto update = [&](Tensor<Scalar>& param, Tensor<Scalar>& m, Tensor<Scalar>& v,
                    const Tensor<Scalar>& g) {
    m = b1 * m + (Scalar(1) - b1) * g;
    v = b2 * v + (Scalar(1) - b2) * g.cwiseAbs2();
    param.array() -= rate * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };
  for (std::size_t l = 0; l < w.weights.size(); ++l) {
    update(w.weights[l], state.m.weights[l], state.v.weights[l], grads.weights[l]);
    update(w.biases[l], state.m.biases[l], state.v.biases[l], grads.biases[l]);
  }
  for (std::size_t k = 0; k < w.embeddings.size(); ++k)
    update(w.embeddings[k], state.m.embeddings[k], state.v.embeddings[k],
           grads.embeddings[k]);
}

struct SchedulerConfig {
  int patience_evals = 3;
  double factor = 0.5;
  double min_delta = 1e-4;
  double min_lr = 1e-6;

  void validate() const {
    if (patience_evals < 1) throw ConfigError("scheduler: patience_evals must be >= 1");
    if (!(factor > 0.0 && factor < 1.0))
      throw ConfigError("scheduler: factor must lie in (0, 1)");
    if (!(min_delta >= 0.0)) throw ConfigError("scheduler: min_delta must be >= 0");
    if (!(min_lr > 0.0)) throw ConfigError("scheduler: min_lr must be > 0");
  }
};

// Reduce-on-plateau for a higher-is-better metric (validation AUC).
class PlateauScheduler {
public:
  PlateauScheduler(double initial_lr, SchedulerConfig cfg)
      : lr_(std::max(initial_lr, cfg.min_lr)), cfg_(cfg) {
    cfg_.validate();
  }

  double update(double metric) {
    if (metric > best_ + cfg_.min_delta) {
      best_ = metric;
      bad_evals_ = 0;
      return lr_;
    }
    if (++bad_evals_ >= cfg_.patience_evals) {
      lr_ = std::max(lr_ * cfg_.factor, cfg_.min_lr);
      bad_evals_ = 0;
    }
    return lr_;
  }

  double lr() const { return lr_; }
  double best() const { return best_; }
  int bad_evals() const { return bad_evals_; }

private:
  double lr_;
  SchedulerConfig cfg_;
  double best_ = -std::numeric_limits<double>::infinity();
  int bad_evals_ = 0;
};

} // namespace csrank
