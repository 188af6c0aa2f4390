// SPDX-License-Identifier: Apache-2.0
#include "csrank/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <ostream>
#include <random>

#include "csrank/errors.hpp"
#include "csrank/features.hpp"

namespace csrank {

namespace fs = std::filesystem;

void DataConfig::validate() const {
  if (n_bookings < 1) throw ConfigError("data: n_bookings must be >= 1");
  if (n_days < 1) throw ConfigError("data: n_days must be >= 1");
  if (window_days < 1) throw ConfigError("data: window_days must be >= 1");
  if (eval_days < 1 || train_days < 1) throw ConfigError("data: eval_days and train_days must be >= 1");
  if (window_days >= n_days) throw ConfigError("data: window_days must be shorter than n_days");
  if (!(test_fraction >= 0.0 && test_fraction <= 0.9)) throw ConfigError("data: test_fraction must lie in [0, 0.9]");
}

void SweepConfig::validate() const {
  if (n_sessions < 1) throw ConfigError("sweep: n_sessions must be >= 1");
  for (const auto* grid : {&log_grid, &raw_grid}) {
    if (grid->empty()) throw ConfigError("sweep: alpha grid is empty");
    if (!std::is_sorted(grid->begin(), grid->end())) throw ConfigError("sweep: alpha grid must be ascending");
    for (double a : *grid)
      if (!(a >= 0.0) || !std::isfinite(a)) throw ConfigError("sweep: alphas must be finite and >= 0");
  }
  if (!(dcg.offset > 1.0)) throw ConfigError("sweep: dcg offset must be > 1");
  if (dcg.log_base < 0.0 || dcg.log_base == 1.0) throw ConfigError("sweep: dcg log_base must be 0 (natural) or > 0 and != 1");
}

RunConfig::RunConfig() {
  ab.alphas = {0.0, 0.3, 1.0, 3.0, 1000.0};
  ab.sessions_per_cohort = 300000;
  propagate_seed();
}

void RunConfig::propagate_seed() {
  world.seed = derive_seed(seed, 1);
  model.seed = derive_seed(seed, 2);
  ab.seed = derive_seed(seed, 3);
  ab.penalty_form = ranking.penalty_form;
  ab.p_clamp = ranking.p_clamp;
}

void RunConfig::validate() const {
  world.validate();
  data.validate();
  if (skeleton.continuous.empty() && skeleton.categorical.empty())
    throw ConfigError("features: no features declared");
  for (const auto& f : skeleton.categorical)
    if (f.embed_dim < 1) throw ConfigError("features: embed_dim of " + f.name + " must be >= 1");
  ModelSpec probe = model;
  probe.continuous_dim = std::max<int>(1, int(skeleton.continuous.size()));
  probe.embeddings.clear();
  probe.validate();
  train.validate();
  if (platt.max_iterations < 1 || !(platt.max_abs_w > 0.0) || !(platt.tolerance > 0.0))
    throw ConfigError("platt: max_iterations, max_abs_w and tolerance must be positive");
  ranking.validate();
  sweep.validate();
  if (ab.alphas.empty()) throw ConfigError("ab: alphas is empty");
  for (double a : ab.alphas)
    if (!(a >= 0.0) || !std::isfinite(a)) throw ConfigError("ab: alphas must be finite and >= 0");
  if (!(ab.control_alpha >= 0.0) || !std::isfinite(ab.control_alpha))
    throw ConfigError("ab: control_alpha must be finite and >= 0");
  if (ab.sessions_per_cohort < 1) throw ConfigError("ab: sessions_per_cohort must be >= 1");
  if (reliability_bins < 2) throw ConfigError("reliability_bins must be >= 2");
  if (out.empty()) throw ConfigError("out: output directory is empty");
}

// ---- config file ----------------------------------------------------------

namespace {

json skeleton_to_json(const FeatureSchema& s) {
  json cont = json::array(), cat = json::array();
  for (const auto& f : s.continuous) cont.push_back({{"name", f.name}, {"skewed", f.skewed}});
  for (const auto& f : s.categorical) cat.push_back({{"name", f.name}, {"embed_dim", f.embed_dim}});
  return {{"continuous", cont}, {"categorical", cat}};
}

FeatureSchema skeleton_from_json(const json& j) {
  FeatureSchema s;
  ConfigReader in(j, "features");
  if (const json* cont = in.child("continuous")) {
    for (const auto& f : *cont) {
      ConfigReader r(f, "features.continuous[]");
      ContinuousFeature c;
      r.get("name", c.name);
      r.get("skewed", c.skewed);
      r.finish();
      if (c.name.empty()) throw ConfigError("features.continuous[]: missing name");
      s.continuous.push_back(c);
    }
  }
  if (const json* cat = in.child("categorical")) {
    for (const auto& f : *cat) {
      ConfigReader r(f, "features.categorical[]");
      CategoricalFeature c;
      r.get("name", c.name);
      r.get("embed_dim", c.embed_dim);
      r.finish();
      if (c.name.empty()) throw ConfigError("features.categorical[]: missing name");
      s.categorical.push_back(c);
    }
  }
  in.finish();
  return s;
}

} // namespace

json to_json(const RunConfig& c) {
  return {
      {"seed", c.seed},
      {"out", c.out.string()},
      {"world", to_json(c.world)},
      {"data",
       {{"n_bookings", c.data.n_bookings},
        {"n_days", c.data.n_days},
        {"window_days", c.data.window_days},
        {"eval_days", c.data.eval_days},
        {"train_days", c.data.train_days},
        {"label_mode", c.data.label_mode == LabelMode::window ? "window" : "shuffled"},
        {"test_fraction", c.data.test_fraction}}},
      {"features", skeleton_to_json(c.skeleton)},
      {"model",
       {{"hidden_layers", c.model.hidden_layers},
        {"activation", c.model.activation.kind == Activation::Kind::relu ? "relu" : "leaky_relu"},
        {"leaky_slope", c.model.activation.slope},
        {"l2_coefficient", c.model.l2_coefficient}}},
      {"train", to_json(c.train)},
      {"platt", to_json(c.platt)},
      {"ranking",
       {{"alpha", c.ranking.alpha},
        {"penalty_form", to_string(c.ranking.penalty_form)},
        {"p_clamp", c.ranking.p_clamp}}},
      {"sweep",
       {{"n_sessions", c.sweep.n_sessions},
        {"log_grid", c.sweep.log_grid},
        {"raw_grid", c.sweep.raw_grid},
        {"dcg_offset", c.sweep.dcg.offset},
        {"dcg_log_base", c.sweep.dcg.log_base},
        {"write_sessions", c.sweep.write_sessions}}},
      {"ab",
       {{"alphas", c.ab.alphas},
        {"control_alpha", c.ab.control_alpha},
        {"sessions_per_cohort", c.ab.sessions_per_cohort}}},
      {"reliability_bins", c.reliability_bins}};
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  ConfigReader in(j, "config");
  in.get("seed", c.seed);
  std::string out;
  if (in.get("out", out)) c.out = out;
  if (const json* w = in.child("world")) from_json(*w, c.world, "world");
  if (const json* d = in.child("data")) {
    ConfigReader r(*d, "data");
    r.get("n_bookings", c.data.n_bookings);
    r.get("n_days", c.data.n_days);
    r.get("window_days", c.data.window_days);
    r.get("eval_days", c.data.eval_days);
    r.get("train_days", c.data.train_days);
    std::string mode;
    if (r.get("label_mode", mode)) {
      if (mode == "window")
        c.data.label_mode = LabelMode::window;
      else if (mode == "shuffled")
        c.data.label_mode = LabelMode::shuffled;
      else
        throw ConfigError("data.label_mode: expected window or shuffled");
    }
    r.get("test_fraction", c.data.test_fraction);
    r.finish();
  }
  if (const json* f = in.child("features")) c.skeleton = skeleton_from_json(*f);
  if (const json* m = in.child("model")) {
    ConfigReader r(*m, "model");
    r.get("hidden_layers", c.model.hidden_layers);
    std::string act;
    if (r.get("activation", act)) {
      if (act == "relu")
        c.model.activation.kind = Activation::Kind::relu;
      else if (act == "leaky_relu")
        c.model.activation.kind = Activation::Kind::leaky_relu;
      else
        throw ConfigError("model.activation: expected relu or leaky_relu");
    }
    r.get("leaky_slope", c.model.activation.slope);
    r.get("l2_coefficient", c.model.l2_coefficient);
    r.finish();
  }
  if (const json* t = in.child("train")) from_json(*t, c.train, "train");
  if (const json* p = in.child("platt")) from_json(*p, c.platt, "platt");
  if (const json* rk = in.child("ranking")) {
    ConfigReader r(*rk, "ranking");
    r.get("alpha", c.ranking.alpha);
    std::string form;
    if (r.get("penalty_form", form)) c.ranking.penalty_form = penalty_form_from_string(form);
    r.get("p_clamp", c.ranking.p_clamp);
    r.finish();
  }
  if (const json* s = in.child("sweep")) {
    ConfigReader r(*s, "sweep");
    r.get("n_sessions", c.sweep.n_sessions);
    r.get("log_grid", c.sweep.log_grid);
    r.get("raw_grid", c.sweep.raw_grid);
    r.get("dcg_offset", c.sweep.dcg.offset);
    r.get("dcg_log_base", c.sweep.dcg.log_base);
    r.get("write_sessions", c.sweep.write_sessions);
    r.finish();
  }
  if (const json* a = in.child("ab")) {
    ConfigReader r(*a, "ab");
    r.get("alphas", c.ab.alphas);
    r.get("control_alpha", c.ab.control_alpha);
    r.get("sessions_per_cohort", c.ab.sessions_per_cohort);
    r.finish();
  }
  in.get("reliability_bins", c.reliability_bins);
  in.finish();
  c.propagate_seed();
  c.validate();
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  const std::string text = read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": invalid JSON: " + e.what());
  }
  return run_config_from_json(j);
}

// ---- stages ---------------------------------------------------------------

namespace {

void note(const CommandContext& ctx, const std::string& msg) {
  if (!ctx.quiet && ctx.log) *ctx.log << msg << '\n';
}

void warn(const CommandContext& ctx, const std::string& msg) {
  if (ctx.log) *ctx.log << "warning: " << msg << '\n';
}

std::string fixed(double x, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

std::string config_hash(const RunConfig& c) {
  json j = to_json(c);
  j.erase("out");
  return hex64(fnv1a64(j.dump()));
}

// Writes the files then a manifest naming them with content hashes.
void write_outputs(const RunConfig& config, const std::string& command,
                   const std::vector<std::pair<std::string, std::string>>& files, json counts) {
  json hashes = json::object();
  for (const auto& [name, content] : files) {
    write_atomic(config.out / name, content);
    hashes[name] = hex64(fnv1a64(content));
  }
  json manifest = {{"command", command},
                   {"version", kToolVersion},
                   {"seed", config.seed},
                   {"config_hash", config_hash(config)},
                   {"counts", std::move(counts)},
                   {"files", hashes}};
  write_atomic(config.out / (command + "_manifest.json"), manifest.dump(1) + "\n");
}

// Fails early, before any computation, if out cannot hold files.
void ensure_output_dir(const fs::path& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw ConfigError("cannot create output directory " + out.string() + ": " + ec.message());
  const fs::path probe = out / ".csrank-write-probe";
  write_atomic(probe, "");
  fs::remove(probe, ec);
}

fs::path require_file(const fs::path& p) {
  if (!fs::exists(p)) throw ConfigError("missing input file " + p.string() + " (run the previous stage first)");
  return p;
}

} // namespace

PreparedData prepare_data(const RunConfig& config) {
  PreparedData d;
  d.world = generate_world(config.world);
  const auto bookings = simulate_bookings(d.world, config.data.n_bookings, config.data.n_days);
  LabeledSet labeled = label_with_window(bookings, config.data.window_days, config.data.n_days);
  if (config.data.label_mode == LabelMode::shuffled) {
    std::vector<int> labels;
    for (const auto& e : labeled.examples) labels.push_back(e.label);
    std::mt19937_64 rng(derive_seed(config.seed, 5));
    std::shuffle(labels.begin(), labels.end(), rng);
    for (std::size_t i = 0; i < labels.size(); ++i) labeled.examples[i].label = labels[i];
  }
  auto [tr, ev] = time_split(labeled.examples, config.data.eval_days, config.data.train_days);
  d.n_bookings = bookings.size();
  d.excluded = labeled.excluded;
  d.outside_span = labeled.examples.size() - tr.size() - ev.size();
  d.train = to_dataset(tr);
  d.eval = to_dataset(ev);
  return d;
}

Eigen::VectorXd score_dataset(const ModelBundle& m, const Dataset& data, bool calibrated) {
  const FeatureBatch<double> batch = FeatureTransformer(m.schema).transform(data.raw);
  Eigen::VectorXd f = score_logits(m.weights, m.spec, batch);
  if (calibrated)
    for (auto& x : f) x = calibrate(m.platt, x);
  return f;
}

TrainedModel train_model(const RunConfig& config, const Dataset& train_data, const Dataset& eval_data) {
  TrainedModel t;
  const FeatureSchema schema = fit_schema(train_data.raw, config.skeleton);
  const FeatureTransformer ft(schema);

  // eval rows split at random into validation (early stopping, Platt) and test
  std::vector<int> rows(static_cast<std::size_t>(eval_data.rows()));
  std::iota(rows.begin(), rows.end(), 0);
  std::mt19937_64 rng(derive_seed(config.seed, 6));
  std::shuffle(rows.begin(), rows.end(), rng);
  const auto n_test = std::size_t(std::llround(config.data.test_fraction * double(rows.size())));
  std::vector<int> test_rows(rows.begin(), rows.begin() + std::ptrdiff_t(n_test));
  std::vector<int> val_rows(rows.begin() + std::ptrdiff_t(n_test), rows.end());
  std::sort(test_rows.begin(), test_rows.end());
  std::sort(val_rows.begin(), val_rows.end());
  if (test_rows.empty()) test_rows = val_rows;
  const Dataset val = eval_data.select_rows(val_rows);
  const Dataset test = eval_data.select_rows(test_rows);
  t.n_validation = std::size_t(val.rows());
  t.n_test = std::size_t(test.rows());

  ModelSpec spec = config.model;
  spec.continuous_dim = schema.continuous_dim();
  spec.embeddings = schema.embedding_specs();

  const LabeledBatch btr{ft.transform(train_data.raw), train_data.labels};
  const LabeledBatch bval{ft.transform(val.raw), val.labels};
  t.result = train(spec, btr, bval, config.train);

  t.model.spec = spec;
  t.model.weights = t.result.weights;
  t.model.schema = schema;

  const Eigen::VectorXd val_logits = score_logits(t.model.weights, spec, bval.features);
  t.platt_fit = fit_platt(std::span<const double>(val_logits.data(), std::size_t(val_logits.size())),
                          std::span<const double>(val.labels.data(), std::size_t(val.labels.size())),
                          config.platt);
  t.model.platt = t.platt_fit.scaler;
  t.model.platt.fitted_on = "validation";
  for (const auto& w : t.platt_fit.warnings) t.warnings.push_back(w);

  t.train_auc = exact_auc(score_logits(t.model.weights, spec, btr.features), train_data.labels);
  t.validation_auc = exact_auc(val_logits, val.labels);
  const Eigen::VectorXd test_logits = score_logits(t.model.weights, spec, ft.transform(test.raw));
  t.test_auc = exact_auc(test_logits, test.labels);
  std::vector<double> probs(static_cast<std::size_t>(test_logits.size()));
  for (std::size_t i = 0; i < probs.size(); ++i) probs[i] = calibrate(t.model.platt, test_logits(Eigen::Index(i)));
  t.test_auc_calibrated = exact_auc(Eigen::Map<const Eigen::VectorXd>(probs.data(), Eigen::Index(probs.size())), test.labels);
  t.test_reliability = reliability_bins(probs, std::span<const double>(test.labels.data(), std::size_t(test.labels.size())),
                                        config.reliability_bins);
  if (test.oracle_p.size() == test.rows()) t.bayes_auc = exact_auc(test.oracle_p, test.labels);
  if (t.validation_auc < 0.55)
    t.warnings.push_back("validation AUC " + fixed(t.validation_auc) +
                         " is close to chance: the labels carry little learnable signal");
  return t;
}

CsScorer make_scorer(const ModelBundle& model) {
  auto m = std::make_shared<const ModelBundle>(model);
  auto ft = std::make_shared<const FeatureTransformer>(model.schema);
  return [m, ft](std::span<const BookingFeatures> candidates) {
    const FeatureBatch<double> batch = ft->transform(to_raw_table(candidates));
    Eigen::VectorXd p = forward(m->weights, m->spec, batch);
    for (auto& x : p) x = calibrate(m->platt, x);
    return p;
  };
}

// ---- commands -------------------------------------------------------------

void cmd_generate(const RunConfig& config, const CommandContext& ctx) {
  config.validate();
  ensure_output_dir(config.out);
  note(ctx, "generate: world and " + std::to_string(config.data.n_bookings) + " bookings");
  const PreparedData d = prepare_data(config);
  const auto positives = [](const Dataset& x) { return std::int64_t(x.labels.sum()); };
  json counts = {{"bookings", d.n_bookings},
                 {"excluded_immature", d.excluded},
                 {"outside_split", d.outside_span},
                 {"train_rows", d.train.rows()},
                 {"eval_rows", d.eval.rows()},
                 {"train_positives", positives(d.train)},
                 {"eval_positives", positives(d.eval)}};
  json resolved = to_json(config);
  resolved.erase("out");
  write_outputs(config, "generate",
                {{"train.csv", dataset_to_csv(d.train)},
                 {"eval.csv", dataset_to_csv(d.eval)},
                 {"world.json", world_snapshot(d.world).dump(1) + "\n"},
                 {"config.json", resolved.dump(1) + "\n"}},
                counts);
  note(ctx, "generate: " + std::to_string(d.train.rows()) + " train rows, " + std::to_string(d.eval.rows()) +
                " eval rows, " + std::to_string(d.excluded) + " immature bookings excluded");
}

void cmd_train(const RunConfig& config, const CommandContext& ctx) {
  config.validate();
  const fs::path train_path = require_file(config.out / "train.csv");
  const fs::path eval_path = require_file(config.out / "eval.csv");
  ensure_output_dir(config.out);
  const Dataset train_data = dataset_from_csv(read_file(train_path), train_path.string());
  const Dataset eval_data = dataset_from_csv(read_file(eval_path), eval_path.string());
  note(ctx, "train: " + to_string(config.train.loss.kind) + " loss on " + std::to_string(train_data.rows()) + " rows");
  const TrainedModel t = train_model(config, train_data, eval_data);
  for (const auto& w : t.warnings) warn(ctx, w);

  json curve = json::array();
  for (const auto& e : t.result.log)
    curve.push_back({{"step", e.step}, {"lr", e.lr}, {"train_loss", e.train_loss}, {"validation_auc", e.validation_auc}});
  json report = {{"loss", to_string(config.train.loss.kind)},
                 {"train_auc", t.train_auc},
                 {"validation_auc", t.validation_auc},
                 {"test_auc", t.test_auc},
                 {"test_auc_calibrated", t.test_auc_calibrated},
                 {"test_ece", t.test_reliability.ece},
                 {"input_dim", t.model.spec.input_dim()},
                 {"hidden_layers", t.model.spec.hidden_layers},
                 {"multiplication_count", multiplication_count(t.model.spec)},
                 {"best_step", t.result.best_step},
                 {"skipped_batches", t.result.skipped_batches},
                 {"validation_rows", t.n_validation},
                 {"test_rows", t.n_test},
                 {"platt",
                  {{"w", t.model.platt.w},
                   {"b", t.model.platt.b},
                   {"iterations", t.platt_fit.iterations},
                   {"converged", t.platt_fit.converged},
                   {"degenerate", t.platt_fit.degenerate}}},
                 {"warnings", t.warnings},
                 {"loss_curve", curve}};
  if (t.bayes_auc >= 0.0) report["bayes_auc"] = t.bayes_auc;
  json counts = {{"train_rows", train_data.rows()}, {"validation_rows", t.n_validation}, {"test_rows", t.n_test}};
  write_outputs(config, "train",
                {{"model.json", model_to_json(t.model)},
                 {"train_log.csv", train_log_to_csv(t.result.log)},
                 {"reliability.csv", reliability_to_csv(t.test_reliability)},
                 {"train_report.json", report.dump(1) + "\n"}},
                counts);
  note(ctx, "train: validation AUC " + fixed(t.validation_auc) + ", test AUC " + fixed(t.test_auc) + ", test ECE " +
                fixed(t.test_reliability.ece) + ", " + std::to_string(multiplication_count(t.model.spec)) +
                " multiplications per example");
}

namespace {

struct Loaded {
  ModelBundle model;
  World world;
};

Loaded load_model_and_world(const RunConfig& config) {
  const fs::path model_path = require_file(config.out / "model.json");
  const fs::path world_path = require_file(config.out / "world.json");
  Loaded l;
  l.model = model_from_json(read_file(model_path));
  json snap;
  try {
    snap = json::parse(read_file(world_path));
  } catch (const json::exception& e) {
    throw DataError(world_path.string() + ": invalid JSON: " + e.what());
  }
  l.world = generate_world(world_config_from_snapshot(snap, world_path.string()));
  return l;
}

json sweep_rows(const std::vector<SweepPoint>& pts) {
  json a = json::array();
  for (const auto& p : pts)
    a.push_back({{"alpha", p.alpha}, {"norm_dcgb", p.mean_norm_dcgb}, {"norm_dcgc", p.mean_norm_dcgc}});
  return a;
}

} // namespace

void cmd_sweep(const RunConfig& config, const CommandContext& ctx) {
  config.validate();
  ensure_output_dir(config.out);
  const Loaded l = load_model_and_world(config);
  note(ctx, "sweep: " + std::to_string(config.sweep.n_sessions) + " sessions");
  RankingConfig logged = config.ranking;
  const SessionBatch batch =
      generate_sessions(l.world, make_scorer(l.model), logged, config.sweep.n_sessions, derive_seed(config.seed, 4));
  std::vector<RankedSession> sessions;
  sessions.reserve(batch.sessions.size());
  for (const auto& s : batch.sessions) sessions.push_back(s.ranked);

  const DominanceReport dom = compare_penalty_forms(sessions, config.sweep.log_grid, config.sweep.raw_grid,
                                                    config.sweep.dcg, config.ranking.p_clamp);
  const std::vector<double> zero{0.0};
  const SweepPoint base =
      sweep_alpha(sessions, zero, config.ranking.penalty_form, config.sweep.dcg, config.ranking.p_clamp).front();
  for (const auto& w : dom.warnings) warn(ctx, w);

  json levels = json::array();
  for (const auto& lv : dom.levels)
    levels.push_back({{"norm_dcgb", lv.norm_dcgb}, {"dcgc_log", lv.dcgc_log}, {"dcgc_raw", lv.dcgc_raw}, {"delta", lv.delta}});
  json report = {{"sessions", sessions.size()},
                 {"skipped_sessions", batch.skipped},
                 {"base", {{"norm_dcgb", base.mean_norm_dcgb}, {"norm_dcgc", base.mean_norm_dcgc}}},
                 {"log_frontier", sweep_rows(dom.log_frontier)},
                 {"raw_frontier", sweep_rows(dom.raw_frontier)},
                 {"dominance_fraction", dom.dominance_fraction},
                 {"levels", levels},
                 {"warnings", dom.warnings}};
  std::vector<std::pair<std::string, std::string>> files{{"sweep_log.csv", sweep_to_csv(dom.log_frontier)},
                                                         {"sweep_raw.csv", sweep_to_csv(dom.raw_frontier)},
                                                         {"sweep_report.json", report.dump(1) + "\n"}};
  files.emplace_back("metrics.csv", sweep_metrics_to_csv(dom.log_frontier, "log") +
                                        sweep_metrics_to_csv(dom.raw_frontier, "raw", false));
  if (config.sweep.write_sessions) files.emplace_back("sessions.csv", sessions_to_csv(batch.sessions));
  write_outputs(config, "sweep", files, {{"sessions", sessions.size()}, {"skipped_sessions", batch.skipped}});
  note(ctx, "sweep: log form dominates at " + fixed(100.0 * dom.dominance_fraction, 1) + "% of shared DCGB levels");
}

void cmd_simulate_ab(const RunConfig& config, const CommandContext& ctx) {
  config.validate();
  ensure_output_dir(config.out);
  const Loaded l = load_model_and_world(config);
  note(ctx, "simulate-ab: " + std::to_string(config.ab.alphas.size() + 1) + " cohorts x " +
                std::to_string(config.ab.sessions_per_cohort) + " sessions");
  const auto cohorts = run_ab(l.world, make_scorer(l.model), config.ab);
  std::int64_t sessions = 0;
  for (const auto& c : cohorts) sessions += c.n_sessions;
  write_outputs(config, "ab", {{"cohorts.csv", cohorts_to_csv(cohorts)}},
                {{"cohorts", cohorts.size()}, {"sessions", sessions}});
  for (const auto& c : cohorts)
    if (!c.control)
      note(ctx, "  alpha " + format_double(c.alpha) + ": bookings " + fixed(100.0 * c.bookings.rel_delta, 2) +
                    "% (z " + fixed(c.bookings.z, 2) + "), CS bookings " + fixed(100.0 * c.cs_bookings.rel_delta, 2) +
                    "% (z " + fixed(c.cs_bookings.z, 2) + ")");
}

void cmd_run(const RunConfig& config, const CommandContext& ctx) {
  cmd_generate(config, ctx);
  cmd_train(config, ctx);
  cmd_sweep(config, ctx);
  cmd_simulate_ab(config, ctx);
}

} // namespace csrank
