// SPDX-License-Identifier: Apache-2.0
//
// Synthetic two-sided marketplace: guests, hosts and listings with latent
// attributes; bookings whose CS need follows a known logistic ground truth
// with geometric delays; attribution-window labeling; time-based splits;
// search sessions with a position-biased choice model; and a cohort-based
// A/B harness over ranking alphas.
#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "csrank/features.hpp"
#include "csrank/metrics.hpp"
#include "csrank/ranking.hpp"

namespace csrank {

// Coefficients of the ground-truth CS-risk logit. Every term is centered at
// a reference value so that with all coefficients zero the CS probability
// is exactly base_cs_rate.
struct RiskCoefficients {
  double new_guest = 0.6;
  double new_host = 1.0;
  double new_guest_x_new_host = 1.0;
  double same_day = 0.8;
  double log_lead_days = -0.1;
  double host_response_rate = -4.0;
  double log_response_hours = 0.15;
  double listing_rating = -1.5;
  double log_nights = 0.35;
  double occupancy = 0.6;
  double region_sd = 0.25;
  std::array<double, 3> device{0.0, 0.1, 0.2};
  std::array<double, 3> room_type{0.0, 0.15, 0.4};

  static RiskCoefficients zero() {
    RiskCoefficients c;
    c.new_guest = c.new_host = c.new_guest_x_new_host = c.same_day = 0.0;
    c.log_lead_days = c.host_response_rate = c.log_response_hours = 0.0;
    c.listing_rating = c.log_nights = c.occupancy = c.region_sd = 0.0;
    c.device = {0.0, 0.0, 0.0};
    c.room_type = {0.0, 0.0, 0.0};
    return c;
  }
};

struct WorldConfig {
  int n_guests = 50000;
  int n_hosts = 8000;
  int n_listings = 10000;
  int n_regions = 20;

  double base_cs_rate = 0.027;
  RiskCoefficients risk;

  // population marginals
  double new_guest_fraction = 0.3;
  double new_host_fraction = 0.2;
  double mean_guest_bookings = 4.0; // returning guests, >= 1
  double mean_host_bookings = 30.0; // established hosts, >= 1
  std::array<double, 3> device_probs{0.45, 0.35, 0.20};
  std::array<double, 3> room_type_probs{0.65, 0.30, 0.05};
  double response_rate_alpha = 6.0; // Beta(alpha, beta)
  double response_rate_beta = 1.2;
  double rating_mean = 4.6;
  double rating_sd = 0.3;
  double price_log_mean = 4.8;
  double price_log_sd = 0.5;

  // trip parameters
  double same_day_fraction = 0.08;
  double mean_lead_days = 30.0; // non-same-day bookings, >= 1
  double mean_nights = 3.0;     // >= 1

  // delay from booking to CS need: geometric on {1, 2, ...}
  double delay_mean_days = 8.0;
  double host_cancel_fraction = 0.3;

  // search and choice model
  int candidates_per_session = 12;
  double appeal_sd = 0.5;
  double base_score_noise = 0.3;
  double taste_sd = 0.5;
  double choice_temperature = 1.0;
  double position_bias = 0.7; // utility penalty per log(1 + rank)
  double no_booking_utility = 1.5;

  std::uint64_t seed = 1;

  void validate() const;
};

inline constexpr std::array<const char*, 3> kDeviceNames{"ios", "android", "web"};
inline constexpr std::array<const char*, 3> kRoomTypeNames{"entire_home", "private_room",
                                                           "shared_room"};
std::string region_name(int region);

struct Guest {
  int id = 0;
  double tenure_days = 0.0;
  int past_bookings = 0;
  int device = 0;
};

struct Host {
  int id = 0;
  double tenure_days = 0.0;
  int past_bookings = 0;
  double response_rate = 1.0;
  double response_hours = 1.0;
};

struct Listing {
  int id = 0;
  int host = 0;
  int region = 0;
  int capacity = 1;
  double price = 100.0;
  double rating = 4.6;
  int review_count = 0;
  int room_type = 0;
  double appeal = 0.0;
};

struct World {
  WorldConfig config;
  std::vector<Guest> guests;
  std::vector<Host> hosts;
  std::vector<Listing> listings;
  std::vector<double> region_effect;
  std::vector<std::vector<int>> listings_by_region;

  bool empty() const { return guests.empty() || listings.empty(); }
};

// Everything the scorer may see about a (guest, listing, trip) match.
struct BookingFeatures {
  int guest = 0;
  int listing = 0;
  int host = 0;
  double guest_tenure_days = 0.0;
  int guest_past_bookings = 0;
  double host_tenure_days = 0.0;
  int host_past_bookings = 0;
  double host_response_rate = 1.0;
  double host_response_hours = 1.0;
  double listing_rating = 4.6;
  int listing_review_count = 0;
  double listing_price = 100.0;
  int listing_capacity = 1;
  int lead_days = 0;
  int nights = 1;
  int party_size = 1;
  int region = 0;
  int device = 0;
  int room_type = 0;
};

struct Trip {
  int lead_days = 0;
  int nights = 1;
  int party_size = 1;
};

struct Booking {
  BookingFeatures features;
  int booking_day = 0;
  double true_p = 0.0;
  std::optional<int> cs_delay_days; // absent: no CS need ever
  bool host_cancellation = false;
};

struct LabeledExample {
  BookingFeatures features;
  int label = 0;
  int booking_day = 0;
  double true_p = 0.0;
};

struct LabeledSet {
  std::vector<LabeledExample> examples;
  std::size_t excluded = 0; // immature labels
};

// Deterministic per config.seed. n_listings = 0 yields an empty world.
World generate_world(const WorldConfig& config);

BookingFeatures make_features(const World& world, int guest, int listing, const Trip& trip);
double true_cs_logit(const World& world, const BookingFeatures& f);
double true_cs_probability(const World& world, const BookingFeatures& f);

// n_bookings spread evenly over days [0, n_days). Distinct streams give
// independent booking samples from the same world.
std::vector<Booking> simulate_bookings(const World& world, int n_bookings, int n_days,
                                       std::uint64_t stream = 0);

// Drops bookings whose label is not yet fixed (booking_day + window_days >
// as_of_day); label 1 iff a CS need arrived within window_days.
LabeledSet label_with_window(std::span<const Booking> bookings, int window_days, int as_of_day);

// eval: the final eval_days of labeled data; train: the train_days before.
std::pair<std::vector<LabeledExample>, std::vector<LabeledExample>>
time_split(std::span<const LabeledExample> examples, int eval_days, int train_days);

// Raw-table view in the column layout the feature pipeline consumes.
std::vector<std::string> numeric_feature_names();
std::vector<std::string> categorical_feature_names();
RawTable to_raw_table(std::span<const BookingFeatures> rows);
// Carries the generator probability in Dataset::oracle_p; it is not a feature.
Dataset to_dataset(std::span<const LabeledExample> examples);
FeatureSchema default_schema_skeleton();

// Calibrated p(CS need | booked) for each candidate.
using CsScorer = std::function<Eigen::VectorXd(std::span<const BookingFeatures>)>;

struct SessionRecord {
  std::int64_t session_id = 0;
  int guest = 0;
  RankedSession ranked; // candidates in displayed order
  bool cs_need = false;
  bool host_cancellation = false;
};

struct SessionBatch {
  std::vector<SessionRecord> sessions;
  std::int64_t skipped = 0; // no matching candidates
};

// One query per session: a guest (from guest_pool when given), region and
// trip; up to candidates_per_session matching listings ordered by the
// combined ranking function; at most one booking drawn from the
// position-biased softmax choice model; CS need drawn from the ground truth.
// scorer may be empty when config.alpha == 0, in which case p_cs is 0.
SessionBatch generate_sessions(const World& world, const CsScorer& scorer,
                               const RankingConfig& config, int n_sessions,
                               std::uint64_t stream, std::span<const int> guest_pool = {});

struct AbConfig {
  std::vector<double> alphas;
  double control_alpha = 0.0;
  int sessions_per_cohort = 100000;
  PenaltyForm penalty_form = PenaltyForm::log_one_minus_p;
  double p_clamp = 1e-6;
  std::uint64_t seed = 1;
};

struct MetricDelta {
  double control_rate = 0.0; // per session
  double cohort_rate = 0.0;
  double rel_delta = 0.0;
  double z = 0.0; // two-sample binomial z
};

struct CohortResult {
  double alpha = 0.0;
  bool control = false;
  std::int64_t n_sessions = 0;
  std::int64_t n_bookings = 0;
  std::int64_t n_cs_bookings = 0;
  std::int64_t n_host_cancellations = 0;
  MetricDelta bookings;
  MetricDelta cs_bookings;
  MetricDelta host_cancellations;
};

// Guests are split into 1 + alphas.size() disjoint cohorts by a seeded hash;
// cohort 0 is the control. Throws DataError when the control books nothing.
std::vector<CohortResult> run_ab(const World& world, const CsScorer& scorer,
                                 const AbConfig& config);

MetricDelta compare_rates(std::int64_t control_count, std::int64_t control_n,
                          std::int64_t cohort_count, std::int64_t cohort_n);

// splitmix64-based seed derivation for independent streams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

} // namespace csrank
