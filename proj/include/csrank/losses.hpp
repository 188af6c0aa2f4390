// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <cmath>
#include <optional>
#include <string>

#include "csrank/errors.hpp"

namespace csrank {

enum class LossKind { auc_surrogate, cross_entropy };
enum class PairReduction { sum, mean_over_pairs };

struct LossConfig {
  LossKind kind = LossKind::auc_surrogate;
  PairReduction reduction = PairReduction::mean_over_pairs;
};

// "auc" / "ce", also accepting the enumerator names.
inline LossKind loss_kind_from_string(const std::string& s) {
  if (s == "auc" || s == "auc_surrogate") return LossKind::auc_surrogate;
  if (s == "ce" || s == "cross_entropy") return LossKind::cross_entropy;
  throw ConfigError("unknown loss '" + s + "' (expected auc or ce)");
}
inline std::string to_string(LossKind k) { return k == LossKind::auc_surrogate ? "auc" : "ce"; }

template <typename Scalar>
struct LossValue {
  Scalar loss{0};
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> grad; // d loss / d logits
};

template <typename Scalar>
inline Scalar sigmoid(Scalar x) {
  if (x >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-x));
  const Scalar e = std::exp(x);
  return e / (Scalar(1) + e);
}

// log(1 + exp(x)) without overflow.
template <typename Scalar>
inline Scalar softplus(Scalar x) {
  return std::max(x, Scalar(0)) + std::log1p(std::exp(-std::abs(x)));
}

// -log sigma(d) for one positive/negative pair with logit difference d.
template <typename Scalar>
inline Scalar pair_loss(Scalar d) {
  return softplus(-d);
}

namespace detail {

template <typename Derived>
auto softplus_array(const Eigen::ArrayBase<Derived>& x) {
  return x.max(0) + (-x.abs()).exp().log1p();
}

template <typename Derived>
void check_labels(const Eigen::MatrixBase<Derived>& labels, Eigen::Index n) {
  if (labels.size() != n)
    throw DataError("loss: logits and labels differ in length (" +
                    std::to_string(n) + " vs " +
                    std::to_string(labels.size()) + ")");
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto y = labels(i);
    if (y != 0 && y != 1)
      throw DataError("loss: label at index " + std::to_string(i) +
                      " is not 0 or 1");
  }
}

} // namespace detail

// Pairwise sigmoid AUC surrogate:
//   L = -sum_{i in pos} sum_{j in neg} log sigma(f_i - f_j)
// optionally divided by |pos|*|neg|. Returns nullopt when the batch holds a
// single class; the caller skips such batches.
template <typename DerivedL, typename DerivedY>
std::optional<LossValue<typename DerivedL::Scalar>>
auc_surrogate_loss(const Eigen::MatrixBase<DerivedL>& logits,
                   const Eigen::MatrixBase<DerivedY>& labels,
                   PairReduction reduction = PairReduction::mean_over_pairs) {
  using Scalar = typename DerivedL::Scalar;
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  const Eigen::Index n = logits.size();
  detail::check_labels(labels, n);

  Eigen::Index n_pos = 0;
  for (Eigen::Index i = 0; i < n; ++i) n_pos += labels(i) == 1;
  const Eigen::Index n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;

  Array pos(n_pos), neg(n_neg);
  Eigen::VectorXi pos_idx(n_pos), neg_idx(n_neg);
  for (Eigen::Index i = 0, p = 0, q = 0; i < n; ++i) {
    if (labels(i) == 1) {
      pos(p) = logits(i);
      pos_idx(p++) = static_cast<int>(i);
    } else {
      neg(q) = logits(i);
      neg_idx(q++) = static_cast<int>(i);
    }
  }

  const Scalar scale = reduction == PairReduction::sum
                           ? Scalar(1)
                           : Scalar(1) / (Scalar(n_pos) * Scalar(n_neg));
  Scalar total(0);
  Array neg_grad = Array::Zero(n_neg);
  LossValue<Scalar> out;
  out.grad = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(n);
  for (Eigen::Index p = 0; p < n_pos; ++p) {
    const Array minus_d = neg - pos(p); // -(f_i - f_j)
    total += detail::softplus_array(minus_d).sum();
    // d/dd softplus(-d) = -sigma(-d)
    const Array s = Scalar(1) / (Scalar(1) + (-minus_d).exp());
    out.grad(pos_idx(p)) = -s.sum() * scale;
    neg_grad += s;
  }
  for (Eigen::Index q = 0; q < n_neg; ++q)
    out.grad(neg_idx(q)) = neg_grad(q) * scale;
  out.loss = total * scale;
  return out;
}

// Mean binary cross entropy on logits, computed through softplus.
template <typename DerivedL, typename DerivedY>
LossValue<typename DerivedL::Scalar>
cross_entropy_loss(const Eigen::MatrixBase<DerivedL>& logits,
                   const Eigen::MatrixBase<DerivedY>& labels) {
  using Scalar = typename DerivedL::Scalar;
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  const Eigen::Index n = logits.size();
  if (n == 0) throw DataError("cross_entropy_loss: empty batch");
  detail::check_labels(labels, n);

  const Array f = logits.derived().array();
  const Array y = labels.derived().template cast<Scalar>().array();
  const Array per = y * detail::softplus_array(-f) +
                    (Scalar(1) - y) * detail::softplus_array(f);
  LossValue<Scalar> out;
  out.loss = per.sum() / Scalar(n);
  const Array s = Scalar(1) / (Scalar(1) + (-f).exp());
  out.grad = ((s - y) / Scalar(n)).matrix();
  return out;
}

template <typename DerivedL, typename DerivedY>
std::optional<LossValue<typename DerivedL::Scalar>>
compute_loss(const Eigen::MatrixBase<DerivedL>& logits,
             const Eigen::MatrixBase<DerivedY>& labels,
             const LossConfig& config) {
  if (config.kind == LossKind::auc_surrogate)
    return auc_surrogate_loss(logits, labels, config.reduction);
  return cross_entropy_loss(logits, labels);
}

} // namespace csrank
