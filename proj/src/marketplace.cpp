// SPDX-License-Identifier: Apache-2.0
#include "csrank/marketplace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

#include "csrank/errors.hpp"
#include "csrank/losses.hpp"

namespace csrank {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

using Rng = std::mt19937_64;

bool bernoulli(Rng& rng, double p) { return std::bernoulli_distribution(p)(rng); }

double normal(Rng& rng, double mean, double sd) {
  if (sd <= 0.0) return mean;
  return std::normal_distribution<double>(mean, sd)(rng);
}

// 1 + geometric, so the support is {1, 2, ...} and the mean is `mean`.
int geometric_from_one(Rng& rng, double mean) {
  return 1 + std::geometric_distribution<int>(1.0 / mean)(rng);
}

double beta(Rng& rng, double a, double b) {
  const double x = std::gamma_distribution<double>(a, 1.0)(rng);
  const double y = std::gamma_distribution<double>(b, 1.0)(rng);
  return x / (x + y);
}

template <std::size_t N>
int categorical(Rng& rng, const std::array<double, N>& probs) {
  return std::discrete_distribution<int>(probs.begin(), probs.end())(rng);
}

int uniform_int(Rng& rng, int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); }

Trip sample_trip(Rng& rng, const WorldConfig& c, int party_size) {
  Trip t;
  t.lead_days = bernoulli(rng, c.same_day_fraction) ? 0 : geometric_from_one(rng, c.mean_lead_days);
  t.nights = geometric_from_one(rng, c.mean_nights);
  t.party_size = party_size;
  return t;
}

template <std::size_t N>
double weighted_mean(const std::array<double, N>& v, const std::array<double, N>& w) {
  double s = 0.0, t = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    s += v[i] * w[i];
    t += w[i];
  }
  return s / t;
}

} // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(splitmix64(seed) ^ a) ^ b);
}

std::string region_name(int region) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "r%02d", region);
  return buf;
}

void WorldConfig::validate() const {
  if (n_guests < 0 || n_hosts < 0 || n_listings < 0) throw ConfigError("world: population sizes must be >= 0");
  if (n_listings > 0 && n_hosts < 1) throw ConfigError("world: listings need at least one host");
  if (n_regions < 1) throw ConfigError("world: n_regions must be >= 1");
  if (!(base_cs_rate > 0.0 && base_cs_rate < 0.5)) throw ConfigError("world: base_cs_rate must lie in (0, 0.5)");
  auto fraction = [](double x, const char* name) {
    if (!(x >= 0.0 && x <= 1.0)) throw ConfigError(std::string("world: ") + name + " must lie in [0, 1]");
  };
  fraction(new_guest_fraction, "new_guest_fraction");
  fraction(new_host_fraction, "new_host_fraction");
  fraction(same_day_fraction, "same_day_fraction");
  fraction(host_cancel_fraction, "host_cancel_fraction");
  auto at_least_one = [](double x, const char* name) {
    if (!(x >= 1.0)) throw ConfigError(std::string("world: ") + name + " must be >= 1");
  };
  at_least_one(mean_guest_bookings, "mean_guest_bookings");
  at_least_one(mean_host_bookings, "mean_host_bookings");
  at_least_one(mean_lead_days, "mean_lead_days");
  at_least_one(mean_nights, "mean_nights");
  at_least_one(delay_mean_days, "delay_mean_days");
  if (!(response_rate_alpha > 0.0 && response_rate_beta > 0.0))
    throw ConfigError("world: response-rate beta parameters must be > 0");
  if (!(rating_sd >= 0.0 && price_log_sd >= 0.0 && appeal_sd >= 0.0 && base_score_noise >= 0.0 &&
        taste_sd >= 0.0 && risk.region_sd >= 0.0))
    throw ConfigError("world: standard deviations must be >= 0");
  if (!(choice_temperature > 0.0)) throw ConfigError("world: choice_temperature must be > 0");
  if (!(position_bias >= 0.0)) throw ConfigError("world: position_bias must be >= 0");
  if (candidates_per_session < 1) throw ConfigError("world: candidates_per_session must be >= 1");
}

World generate_world(const WorldConfig& config) {
  config.validate();
  World w;
  w.config = config;
  Rng rng(derive_seed(config.seed, 1));

  w.guests.reserve(std::size_t(config.n_guests));
  for (int i = 0; i < config.n_guests; ++i) {
    Guest g;
    g.id = i;
    const bool is_new = bernoulli(rng, config.new_guest_fraction);
    g.past_bookings = is_new ? 0 : geometric_from_one(rng, config.mean_guest_bookings);
    g.tenure_days = std::exponential_distribution<double>(is_new ? 1.0 / 60.0 : 1.0 / 900.0)(rng);
    g.device = categorical(rng, config.device_probs);
    w.guests.push_back(g);
  }

  w.hosts.reserve(std::size_t(config.n_hosts));
  for (int i = 0; i < config.n_hosts; ++i) {
    Host h;
    h.id = i;
    const bool is_new = bernoulli(rng, config.new_host_fraction);
    h.past_bookings = is_new ? 0 : geometric_from_one(rng, config.mean_host_bookings);
    h.tenure_days = std::exponential_distribution<double>(is_new ? 1.0 / 45.0 : 1.0 / 1200.0)(rng);
    h.response_rate = beta(rng, config.response_rate_alpha, config.response_rate_beta);
    h.response_hours = std::exp(normal(rng, std::log(2.0), 1.0));
    w.hosts.push_back(h);
  }

  w.region_effect.resize(std::size_t(config.n_regions));
  for (auto& e : w.region_effect) e = normal(rng, 0.0, config.risk.region_sd);

  w.listings_by_region.resize(std::size_t(config.n_regions));
  w.listings.reserve(std::size_t(config.n_listings));
  for (int i = 0; i < config.n_listings; ++i) {
    Listing l;
    l.id = i;
    l.host = uniform_int(rng, config.n_hosts);
    l.region = uniform_int(rng, config.n_regions);
    l.capacity = 1 + std::binomial_distribution<int>(7, 0.35)(rng);
    l.price = std::exp(normal(rng, config.price_log_mean, config.price_log_sd));
    l.rating = std::clamp(normal(rng, config.rating_mean, config.rating_sd), 3.0, 5.0);
    l.review_count = std::binomial_distribution<int>(w.hosts[std::size_t(l.host)].past_bookings, 0.7)(rng);
    l.room_type = categorical(rng, config.room_type_probs);
    l.appeal = normal(rng, 0.0, config.appeal_sd) + 0.5 * (l.rating - config.rating_mean) -
               0.3 * (std::log(l.price) - config.price_log_mean);
    w.listings_by_region[std::size_t(l.region)].push_back(i);
    w.listings.push_back(l);
  }
  return w;
}

BookingFeatures make_features(const World& world, int guest, int listing, const Trip& trip) {
  const Guest& g = world.guests.at(std::size_t(guest));
  const Listing& l = world.listings.at(std::size_t(listing));
  const Host& h = world.hosts.at(std::size_t(l.host));
  BookingFeatures f;
  f.guest = g.id;
  f.listing = l.id;
  f.host = h.id;
  f.guest_tenure_days = g.tenure_days;
  f.guest_past_bookings = g.past_bookings;
  f.host_tenure_days = h.tenure_days;
  f.host_past_bookings = h.past_bookings;
  f.host_response_rate = h.response_rate;
  f.host_response_hours = h.response_hours;
  f.listing_rating = l.rating;
  f.listing_review_count = l.review_count;
  f.listing_price = l.price;
  f.listing_capacity = l.capacity;
  f.lead_days = trip.lead_days;
  f.nights = trip.nights;
  f.party_size = trip.party_size;
  f.region = l.region;
  f.device = g.device;
  f.room_type = l.room_type;
  return f;
}

double true_cs_logit(const World& world, const BookingFeatures& f) {
  const WorldConfig& c = world.config;
  const RiskCoefficients& k = c.risk;
  const double new_guest = f.guest_past_bookings == 0 ? 1.0 : 0.0;
  const double new_host = f.host_past_bookings == 0 ? 1.0 : 0.0;
  const double same_day = f.lead_days == 0 ? 1.0 : 0.0;
  const double rr_mean = c.response_rate_alpha / (c.response_rate_alpha + c.response_rate_beta);

  double z = std::log(c.base_cs_rate / (1.0 - c.base_cs_rate));
  z += k.new_guest * (new_guest - c.new_guest_fraction);
  z += k.new_host * (new_host - c.new_host_fraction);
  z += k.new_guest_x_new_host * (new_guest * new_host - c.new_guest_fraction * c.new_host_fraction);
  z += k.same_day * (same_day - c.same_day_fraction);
  z += k.log_lead_days * (std::log1p(double(f.lead_days)) - std::log1p(c.mean_lead_days));
  z += k.host_response_rate * (f.host_response_rate - rr_mean);
  z += k.log_response_hours * (std::log1p(f.host_response_hours) - std::log1p(2.0));
  z += k.listing_rating * (f.listing_rating - c.rating_mean);
  z += k.log_nights * (std::log1p(double(f.nights)) - std::log1p(c.mean_nights));
  z += k.occupancy * (double(f.party_size) / double(f.listing_capacity) - 0.5);
  z += world.region_effect.at(std::size_t(f.region));
  z += k.device.at(std::size_t(f.device)) - weighted_mean(k.device, c.device_probs);
  z += k.room_type.at(std::size_t(f.room_type)) - weighted_mean(k.room_type, c.room_type_probs);
  return z;
}

double true_cs_probability(const World& world, const BookingFeatures& f) {
  return sigmoid(true_cs_logit(world, f));
}

std::vector<Booking> simulate_bookings(const World& world, int n_bookings, int n_days,
                                       std::uint64_t stream) {
  if (world.empty()) throw DataError("simulate_bookings: world has no guests or listings");
  if (n_bookings < 0 || n_days < 1) throw ConfigError("simulate_bookings: need n_bookings >= 0 and n_days >= 1");
  const WorldConfig& c = world.config;
  std::vector<Booking> out;
  out.reserve(std::size_t(n_bookings));
  for (int day = 0; day < n_days; ++day) {
    const auto lo = std::int64_t(day) * n_bookings / n_days;
    const auto hi = std::int64_t(day + 1) * n_bookings / n_days;
    Rng rng(derive_seed(c.seed, 0x100 + stream, std::uint64_t(day)));
    for (auto i = lo; i < hi; ++i) {
      const int guest = uniform_int(rng, int(world.guests.size()));
      const int listing = uniform_int(rng, int(world.listings.size()));
      const int capacity = world.listings[std::size_t(listing)].capacity;
      const int party = 1 + std::binomial_distribution<int>(capacity - 1, 0.4)(rng);
      const Trip trip = sample_trip(rng, c, party);
      Booking b;
      b.features = make_features(world, guest, listing, trip);
      b.booking_day = day;
      b.true_p = true_cs_probability(world, b.features);
      if (bernoulli(rng, b.true_p)) {
        b.cs_delay_days = geometric_from_one(rng, c.delay_mean_days);
        b.host_cancellation = bernoulli(rng, c.host_cancel_fraction);
      }
      out.push_back(b);
    }
  }
  return out;
}

LabeledSet label_with_window(std::span<const Booking> bookings, int window_days, int as_of_day) {
  if (window_days < 1) throw ConfigError("label_with_window: window_days must be >= 1");
  LabeledSet out;
  for (const auto& b : bookings) {
    if (b.booking_day + window_days > as_of_day) {
      ++out.excluded;
      continue;
    }
    LabeledExample e;
    e.features = b.features;
    e.booking_day = b.booking_day;
    e.true_p = b.true_p;
    e.label = b.cs_delay_days && *b.cs_delay_days <= window_days ? 1 : 0;
    out.examples.push_back(e);
  }
  return out;
}

std::pair<std::vector<LabeledExample>, std::vector<LabeledExample>>
time_split(std::span<const LabeledExample> examples, int eval_days, int train_days) {
  if (eval_days < 1 || train_days < 1) throw ConfigError("time_split: eval_days and train_days must be >= 1");
  if (examples.empty()) throw DataError("time_split: no labeled examples");
  int max_day = std::numeric_limits<int>::min();
  for (const auto& e : examples) max_day = std::max(max_day, e.booking_day);
  const int eval_start = max_day - eval_days + 1;
  const int train_start = eval_start - train_days;
  std::vector<LabeledExample> train, eval;
  for (const auto& e : examples) {
    if (e.booking_day >= eval_start)
      eval.push_back(e);
    else if (e.booking_day >= train_start)
      train.push_back(e);
  }
  if (train.empty()) throw DataError("time_split: empty training split");
  if (eval.empty()) throw DataError("time_split: empty evaluation split");
  return {std::move(train), std::move(eval)};
}

std::vector<std::string> numeric_feature_names() {
  return {"guest_tenure_days",   "guest_past_bookings", "host_tenure_days",
          "host_past_bookings",  "host_response_rate",  "host_response_hours",
          "listing_rating",      "listing_review_count", "listing_price",
          "listing_capacity",    "lead_days",           "nights",
          "party_size"};
}

std::vector<std::string> categorical_feature_names() { return {"region", "device", "room_type"}; }

RawTable to_raw_table(std::span<const BookingFeatures> rows) {
  RawTable t;
  t.numeric_names = numeric_feature_names();
  t.categorical_names = categorical_feature_names();
  t.numeric.resize(Eigen::Index(rows.size()), Eigen::Index(t.numeric_names.size()));
  t.categorical.assign(3, {});
  for (auto& col : t.categorical) col.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& f = rows[i];
    t.numeric.row(Eigen::Index(i)) << f.guest_tenure_days, double(f.guest_past_bookings),
        f.host_tenure_days, double(f.host_past_bookings), f.host_response_rate,
        f.host_response_hours, f.listing_rating, double(f.listing_review_count), f.listing_price,
        double(f.listing_capacity), double(f.lead_days), double(f.nights), double(f.party_size);
    t.categorical[0].push_back(region_name(f.region));
    t.categorical[1].push_back(kDeviceNames.at(std::size_t(f.device)));
    t.categorical[2].push_back(kRoomTypeNames.at(std::size_t(f.room_type)));
  }
  return t;
}

Dataset to_dataset(std::span<const LabeledExample> examples) {
  std::vector<BookingFeatures> rows;
  rows.reserve(examples.size());
  for (const auto& e : examples) rows.push_back(e.features);
  Dataset d;
  d.raw = to_raw_table(rows);
  d.labels.resize(Eigen::Index(examples.size()));
  d.oracle_p.resize(Eigen::Index(examples.size()));
  for (std::size_t i = 0; i < examples.size(); ++i) {
    d.labels(Eigen::Index(i)) = examples[i].label;
    d.oracle_p(Eigen::Index(i)) = examples[i].true_p;
    d.booking_day.push_back(examples[i].booking_day);
  }
  return d;
}

FeatureSchema default_schema_skeleton() {
  FeatureSchema s;
  s.continuous = {{"guest_tenure_days", true},    {"guest_past_bookings", true},
                  {"host_tenure_days", true},     {"host_past_bookings", true},
                  {"host_response_rate", false},  {"host_response_hours", true},
                  {"listing_rating", false},      {"listing_review_count", true},
                  {"listing_price", true},        {"listing_capacity", false},
                  {"lead_days", true},            {"nights", true},
                  {"party_size", false}};
  s.categorical = {{"region", {}, 4}, {"device", {}, 2}, {"room_type", {}, 2}};
  return s;
}

namespace {

template <typename Fn>
std::int64_t for_each_session(const World& world, const CsScorer& scorer,
                              const RankingConfig& config, int n_sessions, std::uint64_t stream,
                              std::span<const int> guest_pool, Fn&& fn) {
  if (world.empty()) throw DataError("generate_sessions: world has no guests or listings");
  config.validate();
  if (config.alpha > 0.0 && !scorer)
    throw ConfigError("generate_sessions: alpha > 0 requires a CS scorer");
  const WorldConfig& c = world.config;
  const auto K = std::size_t(c.candidates_per_session);
  std::int64_t skipped = 0;

  std::vector<int> matches;
  std::vector<BookingFeatures> feats;
  std::vector<double> base, taste, true_p;
  for (int s = 0; s < n_sessions; ++s) {
    Rng rng(derive_seed(c.seed, splitmix64(stream) ^ 0x5e55, std::uint64_t(s)));
    const int guest = guest_pool.empty() ? uniform_int(rng, int(world.guests.size()))
                                         : guest_pool[std::size_t(uniform_int(rng, int(guest_pool.size())))];
    const int region = uniform_int(rng, c.n_regions);
    const int party = 1 + std::binomial_distribution<int>(5, 0.3)(rng);
    const Trip trip = sample_trip(rng, c, party);

    matches.clear();
    for (int id : world.listings_by_region[std::size_t(region)])
      if (world.listings[std::size_t(id)].capacity >= party) matches.push_back(id);
    if (matches.empty()) {
      ++skipped;
      continue;
    }
    const std::size_t k = std::min(K, matches.size());
    for (std::size_t i = 0; i < k; ++i) {
      const auto j = i + std::size_t(uniform_int(rng, int(matches.size() - i)));
      std::swap(matches[i], matches[j]);
    }

    feats.clear();
    base.clear();
    taste.clear();
    true_p.clear();
    std::vector<int> ids(matches.begin(), matches.begin() + std::ptrdiff_t(k));
    for (int id : ids) {
      feats.push_back(make_features(world, guest, id, trip));
      const double appeal = world.listings[std::size_t(id)].appeal;
      base.push_back(appeal + normal(rng, 0.0, c.base_score_noise));
      taste.push_back(appeal + normal(rng, 0.0, c.taste_sd));
      true_p.push_back(true_cs_probability(world, feats.back()));
    }
    std::vector<double> p(k, 0.0);
    if (scorer) {
      const Eigen::VectorXd scored = scorer(feats);
      if (std::size_t(scored.size()) != k) throw DataError("generate_sessions: scorer returned wrong length");
      for (std::size_t i = 0; i < k; ++i) p[i] = scored(Eigen::Index(i));
    }
    const Ordering order = rank_session(ids, base, p, config);

    // position-biased multinomial logit with an outside (no booking) option
    std::vector<double> u(k + 1);
    u[k] = c.no_booking_utility / c.choice_temperature;
    for (std::size_t r = 0; r < k; ++r) {
      const double bias = r == 0 ? 0.0 : c.position_bias * std::log1p(double(r));
      u[r] = (taste[std::size_t(order[r])] - bias) / c.choice_temperature;
    }
    const double top = *std::max_element(u.begin(), u.end());
    for (auto& x : u) x = std::exp(x - top);
    const int choice = std::discrete_distribution<int>(u.begin(), u.end())(rng);

    SessionRecord rec;
    rec.session_id = s;
    rec.guest = guest;
    for (std::size_t r = 0; r < k; ++r) {
      const auto i = std::size_t(order[r]);
      rec.ranked.candidate_ids.push_back(ids[i]);
      rec.ranked.base_scores.push_back(base[i]);
      rec.ranked.p_cs.push_back(p[i]);
    }
    if (std::size_t(choice) < k) {
      rec.ranked.booked = choice;
      rec.cs_need = bernoulli(rng, true_p[std::size_t(order[std::size_t(choice)])]);
      rec.host_cancellation = rec.cs_need && bernoulli(rng, c.host_cancel_fraction);
    }
    fn(std::move(rec));
  }
  return skipped;
}

} // namespace

SessionBatch generate_sessions(const World& world, const CsScorer& scorer,
                               const RankingConfig& config, int n_sessions, std::uint64_t stream,
                               std::span<const int> guest_pool) {
  SessionBatch out;
  out.skipped = for_each_session(world, scorer, config, n_sessions, stream, guest_pool,
                                 [&](SessionRecord&& r) { out.sessions.push_back(std::move(r)); });
  return out;
}

MetricDelta compare_rates(std::int64_t control_count, std::int64_t control_n,
                          std::int64_t cohort_count, std::int64_t cohort_n) {
  MetricDelta d;
  d.control_rate = control_n ? double(control_count) / double(control_n) : 0.0;
  d.cohort_rate = cohort_n ? double(cohort_count) / double(cohort_n) : 0.0;
  d.rel_delta = d.control_rate > 0.0 ? d.cohort_rate / d.control_rate - 1.0 : 0.0;
  const double var = (control_n ? d.control_rate * (1.0 - d.control_rate) / double(control_n) : 0.0) +
                     (cohort_n ? d.cohort_rate * (1.0 - d.cohort_rate) / double(cohort_n) : 0.0);
  d.z = var > 0.0 ? (d.cohort_rate - d.control_rate) / std::sqrt(var) : 0.0;
  return d;
}

std::vector<CohortResult> run_ab(const World& world, const CsScorer& scorer, const AbConfig& config) {
  if (world.empty()) throw DataError("run_ab: world has no guests or listings");
  if (config.sessions_per_cohort < 1) throw ConfigError("run_ab: sessions_per_cohort must be >= 1");
  const std::size_t n_cohorts = 1 + config.alphas.size();
  std::vector<std::vector<int>> pools(n_cohorts);
  for (const auto& g : world.guests)
    pools[derive_seed(config.seed, 0xab, std::uint64_t(g.id)) % n_cohorts].push_back(g.id);
  for (std::size_t k = 0; k < n_cohorts; ++k)
    if (pools[k].empty()) throw DataError("run_ab: cohort " + std::to_string(k) + " has no guests");

  std::vector<CohortResult> out(n_cohorts);
  for (std::size_t k = 0; k < n_cohorts; ++k) {
    CohortResult& r = out[k];
    r.control = k == 0;
    r.alpha = k == 0 ? config.control_alpha : config.alphas[k - 1];
    const RankingConfig rc{r.alpha, config.penalty_form, config.p_clamp};
    const CsScorer& use = r.alpha > 0.0 ? scorer : CsScorer{};
    for_each_session(world, use, rc, config.sessions_per_cohort,
                     derive_seed(config.seed, 0xc0, k), pools[k], [&](SessionRecord&& s) {
                       r.n_sessions += 1;
                       r.n_bookings += s.ranked.booked >= 0;
                       r.n_cs_bookings += s.cs_need;
                       r.n_host_cancellations += s.host_cancellation;
                     });
  }
  const CohortResult& c = out.front();
  if (c.n_bookings == 0) throw DataError("run_ab: control cohort recorded zero bookings");
  for (auto& r : out) {
    r.bookings = compare_rates(c.n_bookings, c.n_sessions, r.n_bookings, r.n_sessions);
    r.cs_bookings = compare_rates(c.n_cs_bookings, c.n_sessions, r.n_cs_bookings, r.n_sessions);
    r.host_cancellations =
        compare_rates(c.n_host_cancellations, c.n_sessions, r.n_host_cancellations, r.n_sessions);
  }
  return out;
}

} // namespace csrank
