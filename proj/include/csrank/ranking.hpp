// SPDX-License-Identifier: Apache-2.0
//
// Ranking combiner base + alpha * penalty(p_cs) and the offline alpha sweep
// over logged sessions.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "csrank/metrics.hpp"

namespace csrank {

enum class PenaltyForm { log_one_minus_p, one_minus_p };

std::string to_string(PenaltyForm form);
PenaltyForm penalty_form_from_string(const std::string& s);

struct RankingConfig {
  double alpha = 0.0;
  PenaltyForm penalty_form = PenaltyForm::log_one_minus_p;
  double p_clamp = 1e-6; // p is capped at 1 - p_clamp before the log

  void validate() const;
};

// base + alpha * log(1 - p) or base + alpha * (1 - p).
double combined_score(double base, double p_cs, const RankingConfig& config);

// Descending combined score; ties broken by ascending candidate id.
Ordering rank_session(std::span<const int> candidate_ids, std::span<const double> base_scores,
                      std::span<const double> p_cs, const RankingConfig& config);
Ordering rank_session(const RankedSession& session, const RankingConfig& config);

struct SweepPoint {
  double alpha = 0.0;
  double mean_norm_dcgb = 0.0;
  double mean_norm_dcgc = 0.0;
  std::int64_t sessions_b = 0; // sessions with a booking
  std::int64_t sessions_c = 0; // sessions with a positive ideal DCGC
};

// 16 log-spaced values from 1e-3 to 1e1.
std::vector<double> default_alpha_grid();

// Reranks every session at each alpha and averages the per-session
// normalized DCGB and DCGC. The grid must be non-empty and ascending.
std::vector<SweepPoint> sweep_alpha(std::span<const RankedSession> sessions,
                                    std::span<const double> alpha_grid, PenaltyForm form,
                                    const DcgConfig& dcg = {}, double p_clamp = 1e-6);

struct DominanceLevel {
  double norm_dcgb = 0.0;
  double dcgc_log = 0.0;
  double dcgc_raw = 0.0;
  double delta = 0.0; // dcgc_log - dcgc_raw
};

struct DominanceReport {
  std::vector<SweepPoint> log_frontier;
  std::vector<SweepPoint> raw_frontier;
  std::vector<DominanceLevel> levels;
  double dominance_fraction = 0.0; // share of levels with delta > 0
  std::vector<std::string> warnings;
};

// Compares two frontiers at every DCGB level reached by both, interpolating
// DCGC linearly in DCGB.
DominanceReport compare_frontiers(std::vector<SweepPoint> log_frontier,
                                  std::vector<SweepPoint> raw_frontier);

DominanceReport compare_penalty_forms(std::span<const RankedSession> sessions,
                                      std::span<const double> log_grid,
                                      std::span<const double> raw_grid,
                                      const DcgConfig& dcg = {}, double p_clamp = 1e-6);

} // namespace csrank
