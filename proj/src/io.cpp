// SPDX-License-Identifier: Apache-2.0
#include "csrank/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

namespace csrank {

namespace fs = std::filesystem;

void write_atomic(const fs::path& path, std::string_view content) {
  std::error_code ec;
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw ConfigError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  fs::path partial = path;
  partial += ".partial";
  {
    std::ofstream out(partial, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + partial.string());
    out.write(content.data(), std::streamsize(content.size()));
    out.flush();
    if (!out) throw ConfigError("write failed: " + partial.string());
  }
  fs::rename(partial, path, ec);
  if (ec) throw ConfigError("cannot rename " + partial.string() + ": " + ec.message());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string format_double(double x) {
  if (!std::isfinite(x)) throw NumericError("cannot serialize non-finite value");
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

double parse_double(std::string_view text, const std::string& context) {
  double x = 0.0;
  const auto r = std::from_chars(text.data(), text.data() + text.size(), x);
  if (r.ec != std::errc() || r.ptr != text.data() + text.size() || !std::isfinite(x))
    throw DataError(context + ": not a finite number: '" + std::string(text) + "'");
  return x;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

ConfigReader::ConfigReader(const json& object, std::string context)
    : object_(object), context_(std::move(context)) {
  if (!object_.is_object()) throw ConfigError(context_ + ": expected a JSON object");
}

const json* ConfigReader::child(const char* key) {
  seen_.insert(key);
  if (!object_.contains(key)) return nullptr;
  return &object_.at(key);
}

void ConfigReader::finish() const {
  for (const auto& item : object_.items())
    if (!seen_.count(item.key())) throw ConfigError(context_ + ": unknown key '" + item.key() + "'");
}

// ---- configs --------------------------------------------------------------

namespace {

json risk_to_json(const RiskCoefficients& r) {
  return {{"new_guest", r.new_guest},
          {"new_host", r.new_host},
          {"new_guest_x_new_host", r.new_guest_x_new_host},
          {"same_day", r.same_day},
          {"log_lead_days", r.log_lead_days},
          {"host_response_rate", r.host_response_rate},
          {"log_response_hours", r.log_response_hours},
          {"listing_rating", r.listing_rating},
          {"log_nights", r.log_nights},
          {"occupancy", r.occupancy},
          {"region_sd", r.region_sd},
          {"device", r.device},
          {"room_type", r.room_type}};
}

void risk_from_json(const json& j, RiskCoefficients& r, const std::string& ctx) {
  ConfigReader in(j, ctx);
  in.get("new_guest", r.new_guest);
  in.get("new_host", r.new_host);
  in.get("new_guest_x_new_host", r.new_guest_x_new_host);
  in.get("same_day", r.same_day);
  in.get("log_lead_days", r.log_lead_days);
  in.get("host_response_rate", r.host_response_rate);
  in.get("log_response_hours", r.log_response_hours);
  in.get("listing_rating", r.listing_rating);
  in.get("log_nights", r.log_nights);
  in.get("occupancy", r.occupancy);
  in.get("region_sd", r.region_sd);
  in.get("device", r.device);
  in.get("room_type", r.room_type);
  in.finish();
}

std::string activation_name(const Activation& a) {
  return a.kind == Activation::Kind::relu ? "relu" : "leaky_relu";
}

} // namespace

json to_json(const WorldConfig& c) {
  return {{"n_guests", c.n_guests},
          {"n_hosts", c.n_hosts},
          {"n_listings", c.n_listings},
          {"n_regions", c.n_regions},
          {"base_cs_rate", c.base_cs_rate},
          {"risk", risk_to_json(c.risk)},
          {"new_guest_fraction", c.new_guest_fraction},
          {"new_host_fraction", c.new_host_fraction},
          {"mean_guest_bookings", c.mean_guest_bookings},
          {"mean_host_bookings", c.mean_host_bookings},
          {"device_probs", c.device_probs},
          {"room_type_probs", c.room_type_probs},
          {"response_rate_alpha", c.response_rate_alpha},
          {"response_rate_beta", c.response_rate_beta},
          {"rating_mean", c.rating_mean},
          {"rating_sd", c.rating_sd},
          {"price_log_mean", c.price_log_mean},
          {"price_log_sd", c.price_log_sd},
          {"same_day_fraction", c.same_day_fraction},
          {"mean_lead_days", c.mean_lead_days},
          {"mean_nights", c.mean_nights},
          {"delay_mean_days", c.delay_mean_days},
          {"host_cancel_fraction", c.host_cancel_fraction},
          {"candidates_per_session", c.candidates_per_session},
          {"appeal_sd", c.appeal_sd},
          {"base_score_noise", c.base_score_noise},
          {"taste_sd", c.taste_sd},
          {"choice_temperature", c.choice_temperature},
          {"position_bias", c.position_bias},
          {"no_booking_utility", c.no_booking_utility}};
}

void from_json(const json& j, WorldConfig& c, const std::string& ctx) {
  ConfigReader in(j, ctx);
  in.get("n_guests", c.n_guests);
  in.get("n_hosts", c.n_hosts);
  in.get("n_listings", c.n_listings);
  in.get("n_regions", c.n_regions);
  in.get("base_cs_rate", c.base_cs_rate);
  if (const json* r = in.child("risk")) risk_from_json(*r, c.risk, ctx + ".risk");
  in.get("new_guest_fraction", c.new_guest_fraction);
  in.get("new_host_fraction", c.new_host_fraction);
  in.get("mean_guest_bookings", c.mean_guest_bookings);
  in.get("mean_host_bookings", c.mean_host_bookings);
  in.get("device_probs", c.device_probs);
  in.get("room_type_probs", c.room_type_probs);
  in.get("response_rate_alpha", c.response_rate_alpha);
  in.get("response_rate_beta", c.response_rate_beta);
  in.get("rating_mean", c.rating_mean);
  in.get("rating_sd", c.rating_sd);
  in.get("price_log_mean", c.price_log_mean);
  in.get("price_log_sd", c.price_log_sd);
  in.get("same_day_fraction", c.same_day_fraction);
  in.get("mean_lead_days", c.mean_lead_days);
  in.get("mean_nights", c.mean_nights);
  in.get("delay_mean_days", c.delay_mean_days);
  in.get("host_cancel_fraction", c.host_cancel_fraction);
  in.get("candidates_per_session", c.candidates_per_session);
  in.get("appeal_sd", c.appeal_sd);
  in.get("base_score_noise", c.base_score_noise);
  in.get("taste_sd", c.taste_sd);
  in.get("choice_temperature", c.choice_temperature);
  in.get("position_bias", c.position_bias);
  in.get("no_booking_utility", c.no_booking_utility);
  in.finish();
}

json to_json(const ModelSpec& s) {
  json emb = json::array();
  for (const auto& e : s.embeddings) emb.push_back({{"vocab_size", e.vocab_size}, {"embed_dim", e.embed_dim}});
  return {{"continuous_dim", s.continuous_dim},
          {"hidden_layers", s.hidden_layers},
          {"activation", activation_name(s.activation)},
          {"leaky_slope", s.activation.slope},
          {"embeddings", emb},
          {"l2_coefficient", s.l2_coefficient},
          {"seed", s.seed}};
}

void from_json(const json& j, ModelSpec& s, const std::string& ctx) {
  ConfigReader in(j, ctx);
  in.get("continuous_dim", s.continuous_dim);
  in.get("hidden_layers", s.hidden_layers);
  std::string act;
  if (in.get("activation", act)) {
    if (act == "relu")
      s.activation.kind = Activation::Kind::relu;
    else if (act == "leaky_relu")
      s.activation.kind = Activation::Kind::leaky_relu;
    else
      throw ConfigError(ctx + ".activation: unknown activation '" + act + "'");
  }
  in.get("leaky_slope", s.activation.slope);
  if (const json* emb = in.child("embeddings")) {
    if (!emb->is_array()) throw ConfigError(ctx + ".embeddings: expected an array");
    s.embeddings.clear();
    for (const auto& e : *emb) {
      ConfigReader er(e, ctx + ".embeddings[]");
      EmbeddingSpec spec;
      er.get("vocab_size", spec.vocab_size);
      er.get("embed_dim", spec.embed_dim);
      er.finish();
      s.embeddings.push_back(spec);
    }
  }
  in.get("l2_coefficient", s.l2_coefficient);
  in.get("seed", s.seed);
  in.finish();
}

json to_json(const TrainConfig& c) {
  return {{"batch_size", c.batch_size},
          {"initial_lr", c.initial_lr},
          {"adam_beta1", c.adam.beta1},
          {"adam_beta2", c.adam.beta2},
          {"adam_epsilon", c.adam.epsilon},
          {"plateau_patience", c.scheduler.patience_evals},
          {"plateau_factor", c.scheduler.factor},
          {"plateau_min_delta", c.scheduler.min_delta},
          {"min_lr", c.scheduler.min_lr},
          {"max_epochs", c.max_epochs},
          {"loss", to_string(c.loss.kind)},
          {"pair_reduction", std::string(c.loss.reduction == PairReduction::sum ? "sum" : "mean_over_pairs")},
          {"eval_every", c.eval_every}};
}

void from_json(const json& j, TrainConfig& c, const std::string& ctx) {
  ConfigReader in(j, ctx);
  in.get("batch_size", c.batch_size);
  in.get("initial_lr", c.initial_lr);
  in.get("adam_beta1", c.adam.beta1);
  in.get("adam_beta2", c.adam.beta2);
  in.get("adam_epsilon", c.adam.epsilon);
  in.get("plateau_patience", c.scheduler.patience_evals);
  in.get("plateau_factor", c.scheduler.factor);
  in.get("plateau_min_delta", c.scheduler.min_delta);
  in.get("min_lr", c.scheduler.min_lr);
  in.get("max_epochs", c.max_epochs);
  std::string s;
  if (in.get("loss", s)) c.loss.kind = loss_kind_from_string(s);
  if (in.get("pair_reduction", s)) {
    if (s == "sum")
      c.loss.reduction = PairReduction::sum;
    else if (s == "mean_over_pairs")
      c.loss.reduction = PairReduction::mean_over_pairs;
    else
      throw ConfigError(ctx + ".pair_reduction: expected sum or mean_over_pairs");
  }
  in.get("eval_every", c.eval_every);
  in.finish();
}

json to_json(const PlattConfig& c) {
  return {{"max_iterations", c.max_iterations},
          {"tolerance", c.tolerance},
          {"max_abs_w", c.max_abs_w},
          {"smoothed_targets", c.smoothed_targets},
          {"recommended_min_examples", c.recommended_min_examples}};
}

void from_json(const json& j, PlattConfig& c, const std::string& ctx) {
  ConfigReader in(j, ctx);
  in.get("max_iterations", c.max_iterations);
  in.get("tolerance", c.tolerance);
  in.get("max_abs_w", c.max_abs_w);
  in.get("smoothed_targets", c.smoothed_targets);
  in.get("recommended_min_examples", c.recommended_min_examples);
  in.finish();
}

json to_json(const FeatureSchema& s) {
  json cont = json::array(), cat = json::array();
  for (const auto& f : s.continuous)
    cont.push_back({{"name", f.name}, {"skewed", f.skewed}, {"mean", f.mean}, {"std", f.std}});
  for (const auto& f : s.categorical)
    cat.push_back({{"name", f.name}, {"vocab", f.vocab}, {"embed_dim", f.embed_dim}});
  return {{"continuous", cont}, {"categorical", cat}, {"fitted", s.fitted}};
}

FeatureSchema schema_from_json(const json& j, const std::string& ctx) {
  FeatureSchema s;
  ConfigReader in(j, ctx);
  if (const json* cont = in.child("continuous")) {
    for (const auto& f : *cont) {
      ConfigReader r(f, ctx + ".continuous[]");
      ContinuousFeature c;
      r.get("name", c.name);
      r.get("skewed", c.skewed);
      r.get("mean", c.mean);
      r.get("std", c.std);
      r.finish();
      s.continuous.push_back(c);
    }
  }
  if (const json* cat = in.child("categorical")) {
    for (const auto& f : *cat) {
      ConfigReader r(f, ctx + ".categorical[]");
      CategoricalFeature c;
      r.get("name", c.name);
      r.get("vocab", c.vocab);
      r.get("embed_dim", c.embed_dim);
      r.finish();
      s.categorical.push_back(c);
    }
  }
  in.get("fitted", s.fitted);
  in.finish();
  return s;
}

// ---- model ----------------------------------------------------------------

namespace {

json tensor_to_json(const Tensor<double>& t) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < t.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < t.cols(); ++c) row.push_back(t(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Tensor<double> tensor_from_json(const json& j, const std::string& name) {
  if (!j.is_array()) throw DataError("model: tensor " + name + " is not an array of rows");
  const Eigen::Index rows = Eigen::Index(j.size());
  const Eigen::Index cols = rows ? Eigen::Index(j.front().size()) : 0;
  Tensor<double> t(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j[std::size_t(r)];
    if (!row.is_array() || Eigen::Index(row.size()) != cols)
      throw DataError("model: tensor " + name + " has ragged rows");
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (!row[std::size_t(c)].is_number()) throw DataError("model: tensor " + name + " holds a non-number");
      t(r, c) = row[std::size_t(c)].get<double>();
    }
  }
  return t;
}

} // namespace

std::string model_to_json(const ModelBundle& m) {
  json layers = json::array();
  const std::size_t n = m.weights.weights.size();
  for (std::size_t l = 0; l < n; ++l)
    layers.push_back({{"name", ModelWeights<double>::dense_name(l, n)},
                      {"weight", tensor_to_json(m.weights.weights[l])},
                      {"bias", tensor_to_json(m.weights.biases[l])}});
  json emb = json::array();
  for (std::size_t k = 0; k < m.weights.embeddings.size(); ++k)
    emb.push_back({{"name", ModelWeights<double>::embedding_name(k)},
                   {"table", tensor_to_json(m.weights.embeddings[k])}});
  json out = {{"format_version", kModelFormat},
              {"weights_version", m.weights.version},
              {"precision", "f64"},
              {"spec", to_json(m.spec)},
              {"schema", to_json(m.schema)},
              {"layers", layers},
              {"embeddings", emb},
              {"platt", {{"w", m.platt.w}, {"b", m.platt.b}, {"fitted_on", m.platt.fitted_on}}}};
  return out.dump(1) + "\n";
}

ModelBundle model_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("model: invalid JSON: ") + e.what());
  }
  try {
    ModelBundle m;
    ConfigReader in(j, "model");
    std::string format, precision;
    in.get("format_version", format);
    if (format != kModelFormat) throw DataError("model: unsupported format_version '" + format + "'");
    in.get("precision", precision);
    if (precision != "f64") throw DataError("model: unsupported precision '" + precision + "'");
    in.get("weights_version", m.weights.version);
    if (const json* s = in.child("spec")) from_json(*s, m.spec, "model.spec");
    if (const json* s = in.child("schema")) m.schema = schema_from_json(*s, "model.schema");
    if (const json* layers = in.child("layers")) {
      for (const auto& layer : *layers) {
        const std::string name = layer.value("name", std::string("?"));
        m.weights.weights.push_back(tensor_from_json(layer.at("weight"), name + ".weight"));
        m.weights.biases.push_back(tensor_from_json(layer.at("bias"), name + ".bias"));
      }
    }
    if (const json* emb = in.child("embeddings"))
      for (const auto& e : *emb)
        m.weights.embeddings.push_back(tensor_from_json(e.at("table"), e.value("name", std::string("?"))));
    if (const json* p = in.child("platt")) {
      ConfigReader pr(*p, "model.platt");
      pr.get("w", m.platt.w);
      pr.get("b", m.platt.b);
      pr.get("fitted_on", m.platt.fitted_on);
      pr.finish();
    }
    in.finish();
    m.spec.validate();
    check_shapes(m.weights, m.spec);
    return m;
  } catch (const ConfigError& e) {
    throw DataError(e.what());
  } catch (const json::exception& e) {
    throw DataError(std::string("model: ") + e.what());
  }
}

// ---- delimited text -------------------------------------------------------

namespace {

constexpr const char* kOracleColumn = "true_cs_probability";

std::vector<std::string_view> split_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

void check_token(const std::string& value, const std::string& column) {
  if (value.find_first_of(",\n\r") != std::string::npos)
    throw DataError("dataset: value in column " + column + " contains a delimiter");
}

} // namespace

std::string dataset_to_csv(const Dataset& d) {
  const RawTable& t = d.raw;
  std::string out;
  bool first = true;
  auto sep = [&] {
    if (!first) out += ',';
    first = false;
  };
  for (const auto& n : t.numeric_names) {
    sep();
    out += n + ":num";
  }
  for (const auto& n : t.categorical_names) {
    sep();
    out += n + ":cat";
  }
  sep();
  out += "label,booking_day";
  const bool oracle = d.oracle_p.size() == d.rows();
  if (oracle) out += std::string(",") + kOracleColumn;
  out += '\n';
  for (Eigen::Index r = 0; r < t.rows(); ++r) {
    first = true;
    for (Eigen::Index c = 0; c < t.numeric.cols(); ++c) {
      sep();
      out += format_double(t.numeric(r, c));
    }
    for (std::size_t c = 0; c < t.categorical.size(); ++c) {
      sep();
      const std::string& v = t.categorical[c][std::size_t(r)];
      check_token(v, t.categorical_names[c]);
      out += v;
    }
    sep();
    out += d.labels(r) == 1.0 ? "1" : "0";
    out += ',';
    out += std::to_string(d.booking_day[std::size_t(r)]);
    if (oracle) {
      out += ',';
      out += format_double(d.oracle_p(r));
    }
    out += '\n';
  }
  return out;
}

Dataset dataset_from_csv(std::string_view text, const std::string& source) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) lines.push_back(line);
    start = nl + 1;
  }
  if (lines.empty()) throw DataError(source + ": empty file");

  enum class Kind { num, cat, label, day, oracle };
  std::vector<Kind> kinds;
  Dataset d;
  for (auto col : split_line(lines[0])) {
    const std::string name(col);
    if (name == "label") {
      kinds.push_back(Kind::label);
    } else if (name == "booking_day") {
      kinds.push_back(Kind::day);
    } else if (name == kOracleColumn) {
      kinds.push_back(Kind::oracle);
    } else if (name.size() > 4 && name.ends_with(":num")) {
      kinds.push_back(Kind::num);
      d.raw.numeric_names.push_back(name.substr(0, name.size() - 4));
    } else if (name.size() > 4 && name.ends_with(":cat")) {
      kinds.push_back(Kind::cat);
      d.raw.categorical_names.push_back(name.substr(0, name.size() - 4));
    } else {
      throw DataError(source + ": column '" + name + "' is neither name:num, name:cat, label, booking_day nor " +
                      kOracleColumn);
    }
  }
  const auto count = [&](Kind k) { return std::count(kinds.begin(), kinds.end(), k); };
  if (count(Kind::label) != 1 || count(Kind::day) != 1)
    throw DataError(source + ": header needs exactly one label and one booking_day column");
  const bool oracle = count(Kind::oracle) == 1;

  const Eigen::Index n = Eigen::Index(lines.size() - 1);
  d.raw.numeric.resize(n, Eigen::Index(d.raw.numeric_names.size()));
  d.raw.categorical.assign(d.raw.categorical_names.size(), {});
  d.labels.resize(n);
  if (oracle) d.oracle_p.resize(n);
  d.booking_day.reserve(std::size_t(n));
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto cells = split_line(lines[std::size_t(r) + 1]);
    const std::string where = source + " line " + std::to_string(r + 2);
    if (cells.size() != kinds.size())
      throw DataError(where + ": expected " + std::to_string(kinds.size()) + " fields, got " +
                      std::to_string(cells.size()));
    Eigen::Index num = 0;
    std::size_t cat = 0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      switch (kinds[c]) {
      case Kind::num:
        d.raw.numeric(r, num) = parse_double(cells[c], where + " column " + d.raw.numeric_names[std::size_t(num)]);
        ++num;
        break;
      case Kind::cat:
        d.raw.categorical[cat++].emplace_back(cells[c]);
        break;
      case Kind::label:
        if (cells[c] != "0" && cells[c] != "1") throw DataError(where + ": label must be 0 or 1");
        d.labels(r) = cells[c] == "1" ? 1.0 : 0.0;
        break;
      case Kind::day: {
        int day = 0;
        const auto res = std::from_chars(cells[c].data(), cells[c].data() + cells[c].size(), day);
        if (res.ec != std::errc() || res.ptr != cells[c].data() + cells[c].size())
          throw DataError(where + ": booking_day is not an integer");
        d.booking_day.push_back(day);
        break;
      }
      case Kind::oracle:
        d.oracle_p(r) = parse_double(cells[c], where + " column " + kOracleColumn);
        break;
      }
    }
  }
  return d;
}

std::string sessions_to_csv(std::span<const SessionRecord> sessions) {
  std::string out = "session_id,position,candidate_id,base_score,p_cs,booked\n";
  for (const auto& s : sessions) {
    const auto& r = s.ranked;
    for (std::size_t i = 0; i < r.candidate_ids.size(); ++i) {
      out += std::to_string(s.session_id) + ',' + std::to_string(i) + ',' + std::to_string(r.candidate_ids[i]) +
             ',' + format_double(r.base_scores[i]) + ',' + format_double(r.p_cs[i]) + ',' +
             (r.booked == int(i) ? "1" : "0") + '\n';
    }
  }
  return out;
}

std::string sweep_to_csv(std::span<const SweepPoint> points) {
  std::string out = "alpha,norm_dcgb,norm_dcgc,sessions_b,sessions_c\n";
  for (const auto& p : points)
    out += format_double(p.alpha) + ',' + format_double(p.mean_norm_dcgb) + ',' + format_double(p.mean_norm_dcgc) +
           ',' + std::to_string(p.sessions_b) + ',' + std::to_string(p.sessions_c) + '\n';
  return out;
}

std::string sweep_metrics_to_csv(std::span<const SweepPoint> points, const std::string& label, bool header) {
  std::string out = header ? "alpha,metric,value,session_count\n" : "";
  for (const auto& p : points) {
    out += format_double(p.alpha) + ',' + label + ".norm_dcgb," + format_double(p.mean_norm_dcgb) + ',' +
           std::to_string(p.sessions_b) + '\n';
    out += format_double(p.alpha) + ',' + label + ".norm_dcgc," + format_double(p.mean_norm_dcgc) + ',' +
           std::to_string(p.sessions_c) + '\n';
  }
  return out;
}

std::string cohorts_to_csv(std::span<const CohortResult> cohorts) {
  std::string out =
      "alpha,role,sessions,bookings,cs_bookings,host_cancellations,"
      "bookings_rel_delta,bookings_z,cs_rel_delta,cs_z,hc_rel_delta,hc_z\n";
  for (const auto& c : cohorts)
    out += format_double(c.alpha) + ',' + (c.control ? "control" : "treatment") + ',' +
           std::to_string(c.n_sessions) + ',' + std::to_string(c.n_bookings) + ',' +
           std::to_string(c.n_cs_bookings) + ',' + std::to_string(c.n_host_cancellations) + ',' +
           format_double(c.bookings.rel_delta) + ',' + format_double(c.bookings.z) + ',' +
           format_double(c.cs_bookings.rel_delta) + ',' + format_double(c.cs_bookings.z) + ',' +
           format_double(c.host_cancellations.rel_delta) + ',' + format_double(c.host_cancellations.z) + '\n';
  return out;
}

std::string train_log_to_csv(std::span<const TrainLogEntry> log) {
  std::string out = "step,epoch,lr,train_loss,validation_auc,skipped_batches\n";
  for (const auto& e : log)
    out += std::to_string(e.step) + ',' + std::to_string(e.epoch) + ',' + format_double(e.lr) + ',' +
           format_double(e.train_loss) + ',' + format_double(e.validation_auc) + ',' +
           std::to_string(e.skipped_batches) + '\n';
  return out;
}

std::string reliability_to_csv(const ReliabilityReport& report) {
  std::string out = "bin_center,mean_predicted,observed_rate,count\n";
  for (const auto& b : report.bins)
    out += format_double(b.center) + ',' + format_double(b.mean_predicted) + ',' + format_double(b.observed_rate) +
           ',' + std::to_string(b.count) + '\n';
  return out;
}

json world_snapshot(const World& w) {
  std::int64_t new_guests = 0, new_hosts = 0;
  for (const auto& g : w.guests) new_guests += g.past_bookings == 0;
  for (const auto& h : w.hosts) new_hosts += h.past_bookings == 0;
  return {{"config", to_json(w.config)},
          {"seed", w.config.seed},
          {"summary",
           {{"guests", w.guests.size()},
            {"hosts", w.hosts.size()},
            {"listings", w.listings.size()},
            {"new_guests", new_guests},
            {"new_hosts", new_hosts},
            {"region_effect", w.region_effect}}}};
}

WorldConfig world_config_from_snapshot(const json& snapshot, const std::string& ctx) {
  ConfigReader in(snapshot, ctx);
  WorldConfig c;
  const json* cfg = in.child("config");
  if (!cfg) throw DataError(ctx + ": missing config");
  try {
    from_json(*cfg, c, ctx + ".config");
  } catch (const ConfigError& e) {
    throw DataError(e.what());
  }
  in.get("seed", c.seed);
  in.child("summary");
  in.finish();
  return c;
}

} // namespace csrank
