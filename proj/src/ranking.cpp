// SPDX-License-Identifier: Apache-2.0
#include "csrank/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "csrank/errors.hpp"

namespace csrank {

std::string to_string(PenaltyForm form) {
  return form == PenaltyForm::log_one_minus_p ? "log_one_minus_p" : "one_minus_p";
}

PenaltyForm penalty_form_from_string(const std::string& s) {
  if (s == "log_one_minus_p" || s == "log") return PenaltyForm::log_one_minus_p;
  if (s == "one_minus_p" || s == "raw") return PenaltyForm::one_minus_p;
  throw ConfigError("unknown penalty form: " + s);
}

void RankingConfig::validate() const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("ranking: alpha must be finite and >= 0");
  if (!(p_clamp > 0.0 && p_clamp < 0.5)) throw ConfigError("ranking: p_clamp must lie in (0, 0.5)");
}

double combined_score(double base, double p_cs, const RankingConfig& config) {
  if (!std::isfinite(base)) throw DataError("combined_score: non-finite base score");
  if (!(p_cs >= 0.0 && p_cs <= 1.0))
    throw DataError("combined_score: p_cs outside [0, 1]: " + std::to_string(p_cs));
  if (config.alpha == 0.0) return base;
  const double p = std::min(p_cs, 1.0 - config.p_clamp);
  if (config.penalty_form == PenaltyForm::log_one_minus_p)
    return base + config.alpha * std::log1p(-p);
  return base + config.alpha * (1.0 - p);
}

Ordering rank_session(std::span<const int> candidate_ids, std::span<const double> base_scores,
                      std::span<const double> p_cs, const RankingConfig& config) {
  const std::size_t n = candidate_ids.size();
  if (n == 0) throw DataError("rank_session: session has no candidates");
  if (base_scores.size() != n || p_cs.size() != n)
    throw DataError("rank_session: candidate arrays differ in length");
  std::vector<double> score(n);
  for (std::size_t i = 0; i < n; ++i) score[i] = combined_score(base_scores[i], p_cs[i], config);
  Ordering order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (score[std::size_t(a)] != score[std::size_t(b)])
      return score[std::size_t(a)] > score[std::size_t(b)];
    return candidate_ids[std::size_t(a)] < candidate_ids[std::size_t(b)];
  });
  return order;
}

Ordering rank_session(const RankedSession& session, const RankingConfig& config) {
  return rank_session(session.candidate_ids, session.base_scores, session.p_cs, config);
}

std::vector<double> default_alpha_grid() {
  std::vector<double> grid(16);
  for (int i = 0; i < 16; ++i) grid[std::size_t(i)] = std::pow(10.0, -3.0 + 4.0 * i / 15.0);
  return grid;
}

std::vector<SweepPoint> sweep_alpha(std::span<const RankedSession> sessions,
                                    std::span<const double> alpha_grid, PenaltyForm form,
                                    const DcgConfig& dcg, double p_clamp) {
  if (alpha_grid.empty()) throw ConfigError("sweep_alpha: empty alpha grid");
  if (!std::is_sorted(alpha_grid.begin(), alpha_grid.end()))
    throw ConfigError("sweep_alpha: alpha grid must be ascending");

  std::vector<SweepPoint> out;
  for (double alpha : alpha_grid) {
    RankingConfig cfg{alpha, form, p_clamp};
    cfg.validate();
    CompensatedSum sum_b, sum_c;
    SweepPoint pt;
    pt.alpha = alpha;
    for (const auto& s : sessions) {
      const Ordering order = rank_session(s, cfg);
      if (auto b = normalized_dcg(s, order, DcgKind::booking, dcg)) {
        sum_b.add(*b);
        ++pt.sessions_b;
      }
      if (auto c = normalized_dcg(s, order, DcgKind::reliability, dcg)) {
        sum_c.add(*c);
        ++pt.sessions_c;
      }
    }
    if (pt.sessions_b == 0 || pt.sessions_c == 0)
      throw DataError("sweep_alpha: no valid session for DCGB or DCGC");
    pt.mean_norm_dcgb = sum_b.value() / double(pt.sessions_b);
    pt.mean_norm_dcgc = sum_c.value() / double(pt.sessions_c);
    out.push_back(pt);
  }
  return out;
}

namespace {

// Frontier as (dcgb, dcgc) sorted by dcgb; duplicate dcgb keep the best dcgc.
std::vector<std::pair<double, double>> curve(const std::vector<SweepPoint>& pts) {
  std::vector<std::pair<double, double>> c;
  for (const auto& p : pts) c.emplace_back(p.mean_norm_dcgb, p.mean_norm_dcgc);
  std::sort(c.begin(), c.end());
  std::vector<std::pair<double, double>> out;
  for (const auto& p : c) {
    if (!out.empty() && out.back().first == p.first)
      out.back().second = std::max(out.back().second, p.second);
    else
      out.push_back(p);
  }
  return out;
}

double interpolate(const std::vector<std::pair<double, double>>& c, double x) {
  if (c.size() == 1 || x <= c.front().first) return c.front().second;
  if (x >= c.back().first) return c.back().second;
  const auto hi = std::lower_bound(c.begin(), c.end(), std::make_pair(x, -1e300));
  if (hi->first == x) return hi->second;
  const auto lo = hi - 1;
  const double t = (x - lo->first) / (hi->first - lo->first);
  return lo->second + t * (hi->second - lo->second);
}

} // namespace

DominanceReport compare_frontiers(std::vector<SweepPoint> log_frontier,
                                  std::vector<SweepPoint> raw_frontier) {
  if (log_frontier.empty() || raw_frontier.empty())
    throw DataError("compare_penalty_forms: empty frontier");
  DominanceReport report;
  const auto lc = curve(log_frontier);
  const auto rc = curve(raw_frontier);
  report.log_frontier = std::move(log_frontier);
  report.raw_frontier = std::move(raw_frontier);

  const double lo = std::max(lc.front().first, rc.front().first);
  const double hi = std::min(lc.back().first, rc.back().first);
  if (lo > hi) {
    report.warnings.push_back("compare_penalty_forms: DCGB ranges of the two frontiers do not overlap");
    return report;
  }
  std::vector<double> xs;
  for (const auto& p : lc)
    if (p.first >= lo && p.first <= hi) xs.push_back(p.first);
  for (const auto& p : rc)
    if (p.first >= lo && p.first <= hi) xs.push_back(p.first);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

  int wins = 0;
  for (double x : xs) {
    DominanceLevel lvl;
    lvl.norm_dcgb = x;
    lvl.dcgc_log = interpolate(lc, x);
    lvl.dcgc_raw = interpolate(rc, x);
    lvl.delta = lvl.dcgc_log - lvl.dcgc_raw;
    wins += lvl.delta > 0.0;
    report.levels.push_back(lvl);
  }
  report.dominance_fraction = double(wins) / double(report.levels.size());
  return report;
}

DominanceReport compare_penalty_forms(std::span<const RankedSession> sessions,
                                      std::span<const double> log_grid,
                                      std::span<const double> raw_grid,
                                      const DcgConfig& dcg, double p_clamp) {
  return compare_frontiers(
      sweep_alpha(sessions, log_grid, PenaltyForm::log_one_minus_p, dcg, p_clamp),
      sweep_alpha(sessions, raw_grid, PenaltyForm::one_minus_p, dcg, p_clamp));
}

} // namespace csrank
