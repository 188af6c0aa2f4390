// SPDX-License-Identifier: Apache-2.0
#include "csrank/metrics.hpp"

#include <functional>

namespace csrank {
namespace {

void check_ordering(const RankedSession& s, const Ordering& order) {
  if (order.size() != s.size())
    throw DataError("ordering: expected " + std::to_string(s.size()) +
                    " positions, got " + std::to_string(order.size()));
  std::vector<char> seen(s.size(), 0);
  for (int idx : order) {
    if (idx < 0 || std::size_t(idx) >= s.size() || seen[std::size_t(idx)])
      throw DataError("ordering: not a permutation of the session candidates");
    seen[std::size_t(idx)] = 1;
  }
}

void check_probs(const RankedSession& s) {
  if (s.p_cs.size() != s.size())
    throw DataError("dcgc: session is missing per-candidate probabilities");
  for (double p : s.p_cs)
    if (!(p >= 0.0 && p <= 1.0))
      throw DataError("dcgc: probability outside [0, 1]: " + std::to_string(p));
}

double discounted(const std::vector<double>& gains_in_rank_order,
                  const DcgConfig& cfg) {
  CompensatedSum sum;
  for (std::size_t i = 0; i < gains_in_rank_order.size(); ++i)
    if (gains_in_rank_order[i] != 0.0)
      sum.add(gains_in_rank_order[i] * cfg.discount(int(i)));
  return sum.value();
}

std::vector<double> gains(const RankedSession& s, DcgKind kind) {
  std::vector<double> g(s.size(), 0.0);
  if (kind == DcgKind::booking) {
    if (s.booked >= 0) g.at(std::size_t(s.booked)) = 1.0;
  } else {
    for (std::size_t i = 0; i < s.size(); ++i) g[i] = 1.0 - s.p_cs[i];
  }
  return g;
}

double dcg(const RankedSession& s, const Ordering& order, DcgKind kind,
           const DcgConfig& cfg) {
  check_ordering(s, order);
  if (kind == DcgKind::reliability) check_probs(s);
  const auto g = gains(s, kind);
  std::vector<double> ranked(order.size());
  for (std::size_t r = 0; r < order.size(); ++r) ranked[r] = g[std::size_t(order[r])];
  return discounted(ranked, cfg);
}

} // namespace

Ordering identity_ordering(std::size_t n) {
  Ordering o(n);
  std::iota(o.begin(), o.end(), 0);
  return o;
}

double dcgb(const RankedSession& s, const Ordering& order, const DcgConfig& cfg) {
  return dcg(s, order, DcgKind::booking, cfg);
}

double dcgc(const RankedSession& s, const Ordering& order, const DcgConfig& cfg) {
  return dcg(s, order, DcgKind::reliability, cfg);
}

std::optional<double> normalized_dcg(const RankedSession& s, const Ordering& order,
                                     DcgKind kind, const DcgConfig& cfg) {
  const double actual = dcg(s, order, kind, cfg);
  auto ideal_gains = gains(s, kind);
  std::sort(ideal_gains.begin(), ideal_gains.end(), std::greater<>());
  const double ideal = discounted(ideal_gains, cfg);
  if (!(ideal > 0.0)) return std::nullopt;
  // the ideal is an upper bound; rounding must not push the ratio above 1
  return std::min(actual / ideal, 1.0);
}

ReliabilityReport reliability_bins(std::span<const double> probs,
                                   std::span<const double> labels, int n_bins) {
  if (probs.empty()) throw DataError("reliability_bins: empty input");
  if (probs.size() != labels.size())
    throw DataError("reliability_bins: probs and labels differ in length");
  if (n_bins < 2) throw DataError("reliability_bins: n_bins must be >= 2");

  std::vector<CompensatedSum> pred(static_cast<std::size_t>(n_bins)), obs(static_cast<std::size_t>(n_bins));
  std::vector<std::int64_t> count(std::size_t(n_bins), 0);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = probs[i];
    if (!(p >= 0.0 && p <= 1.0))
      throw DataError("reliability_bins: probability outside [0, 1]");
    const auto b = std::size_t(std::min(int(p * n_bins), n_bins - 1));
    pred[b].add(p);
    obs[b].add(labels[i]);
    count[b] += 1;
  }

  ReliabilityReport report;
  CompensatedSum ece;
  const double total = double(probs.size());
  for (std::size_t b = 0; b < std::size_t(n_bins); ++b) {
    ReliabilityBin bin;
    bin.center = (double(b) + 0.5) / n_bins;
    bin.count = count[b];
    if (count[b] > 0) {
      bin.mean_predicted = pred[b].value() / double(count[b]);
      bin.observed_rate = obs[b].value() / double(count[b]);
      ece.add(double(count[b]) / total *
              std::abs(bin.mean_predicted - bin.observed_rate));
    }
    report.bins.push_back(bin);
  }
  report.ece = ece.value();
  return report;
}

} // namespace csrank
