// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "csrank/errors.hpp"

namespace csrank {

// Neumaier-compensated running sum; result does not depend on how the
// inputs were sharded as long as they are added in the same order.
class CompensatedSum {
public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Exact AUC by sorting: (#correctly ordered pairs + 0.5 * #tied pairs) /
// (|pos| * |neg|). Integer pair counts keep the result exactly reproducible.
template <typename DerivedS, typename DerivedY>
double exact_auc(const Eigen::MatrixBase<DerivedS>& scores,
                 const Eigen::MatrixBase<DerivedY>& labels) {
  const Eigen::Index n = scores.size();
  if (labels.size() != n) throw DataError("exact_auc: scores and labels differ in length");
  std::int64_t n_pos = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (labels(i) != 0 && labels(i) != 1)
      throw DataError("exact_auc: labels must be 0 or 1");
    if (std::isnan(double(scores(i)))) throw DataError("exact_auc: NaN score");
    n_pos += labels(i) == 1;
  }
  const std::int64_t n_neg = std::int64_t(n) - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw DataError("exact_auc: undefined for a single-class set (" +
                    std::to_string(n_pos) + " positives, " +
                    std::to_string(n_neg) + " negatives)");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index(0));
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return scores(a) < scores(b);
  });

  // twice the credited pair count: 2 per win, 1 per tie
  std::int64_t credit2 = 0;
  std::int64_t neg_below = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::int64_t g_pos = 0, g_neg = 0;
    while (j < order.size() && scores(order[j]) == scores(order[i])) {
      (labels(order[j]) == 1 ? g_pos : g_neg) += 1;
      ++j;
    }
    credit2 += 2 * g_pos * neg_below + g_pos * g_neg;
    neg_below += g_neg;
    i = j;
  }
  return double(credit2) / (2.0 * double(n_pos) * double(n_neg));
}

// Discount 1 / log_base(offset + position), position counted from 0.
struct DcgConfig {
  double offset = 2.4;
  double log_base = 0.0; // 0 selects the natural log

  double discount(int position) const {
    const double l = std::log(offset + position);
    return log_base > 0.0 ? std::log(log_base) / l : 1.0 / l;
  }
};

// One logged search session. Candidate arrays are in displayed order.
struct RankedSession {
  std::vector<int> candidate_ids;
  std::vector<double> base_scores;
  std::vector<double> p_cs; // calibrated p(CS need | candidate booked)
  int booked = -1;          // index into the candidate arrays, -1 if none

  std::size_t size() const { return candidate_ids.size(); }
};

// Candidate indices, rank 0 first.
using Ordering = std::vector<int>;

enum class DcgKind { booking, reliability };

Ordering identity_ordering(std::size_t n);

double dcgb(const RankedSession& s, const Ordering& order, const DcgConfig& cfg = {});
double dcgc(const RankedSession& s, const Ordering& order, const DcgConfig& cfg = {});

// DCG divided by the DCG of the ideal ordering. nullopt when the ideal value
// is 0 (no booking for DCGB; every p equal to 1 for DCGC); callers exclude
// such sessions and count them.
std::optional<double> normalized_dcg(const RankedSession& s, const Ordering& order,
                                     DcgKind kind, const DcgConfig& cfg = {});

struct ReliabilityBin {
  double center = 0.0;
  double mean_predicted = 0.0;
  double observed_rate = 0.0;
  std::int64_t count = 0;
};

struct ReliabilityReport {
  std::vector<ReliabilityBin> bins;
  double ece = 0.0;
};

// Equal-width bins over [0, 1]; ECE = sum (count / total) |mean_pred - rate|.
ReliabilityReport reliability_bins(std::span<const double> probs,
                                   std::span<const double> labels, int n_bins);

} // namespace csrank
