// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <random>

#include "csrank/io.hpp"
#include "csrank/pipeline.hpp"

using namespace csrank;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("csrank-io-" + name);
  fs::remove_all(p);
  return p;
}

ModelBundle small_bundle() {
  Eigen::MatrixXd m(6, 1);
  m << 1, 2, 3, 5, 8, 13;
  RawTable t;
  t.numeric_names = {"x"};
  t.numeric = m;
  t.categorical_names = {"c"};
  t.categorical = {{"a", "b", "a", "c", "b", "a"}};
  FeatureSchema sk;
  sk.continuous = {{"x", true}};
  sk.categorical = {{"c", {}, 2}};
  ModelBundle b;
  b.schema = fit_schema(t, sk);
  b.spec.continuous_dim = 1;
  b.spec.embeddings = b.schema.embedding_specs();
  b.spec.hidden_layers = {4, 3};
  b.spec.seed = 77;
  b.weights = init_weights(b.spec);
  b.weights.biases[0](1, 0) = 0.1 + 1e-17;
  b.platt = {0.8123456789012345, -2.5, "validation"};
  return b;
}

} // namespace

TEST_SUITE("io") {

TEST_CASE("doubles round-trip through text exactly") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 10000; ++i) {
    const double x = u(rng) * std::pow(10.0, double(int(rng() % 40) - 20));
    CHECK(parse_double(format_double(x), "t") == x);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK_THROWS_AS(format_double(std::nan("")), NumericError);
  CHECK_THROWS_AS(parse_double("1.5x", "col"), DataError);
  CHECK_THROWS_AS(parse_double("inf", "col"), DataError);
}

TEST_CASE("atomic writes leave no partial file") {
  const fs::path dir = scratch("atomic");
  write_atomic(dir / "sub" / "a.txt", "hello");
  CHECK(read_file(dir / "sub" / "a.txt") == "hello");
  CHECK_FALSE(fs::exists(dir / "sub" / "a.txt.partial"));
  write_atomic(dir / "sub" / "a.txt", "bye");
  CHECK(read_file(dir / "sub" / "a.txt") == "bye");
  CHECK_THROWS_AS(read_file(dir / "nope"), ConfigError);
  // a regular file where a directory is needed
  CHECK_THROWS_AS(write_atomic(dir / "sub" / "a.txt" / "b.txt", "x"), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("fnv1a64 reference values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(hex64(0xabcULL) == "0000000000000abc");
}

TEST_CASE("config reader rejects unknown keys") {
  const json j = {{"a", 1}, {"zz", 2}};
  ConfigReader r(j, "ctx");
  int a = 0;
  CHECK(r.get("a", a));
  CHECK(a == 1);
  CHECK_THROWS_WITH_AS(r.finish(), doctest::Contains("zz"), ConfigError);

  const json bad = {{"a", "text"}};
  ConfigReader r2(bad, "ctx");
  CHECK_THROWS_AS(r2.get("a", a), ConfigError);
  CHECK_THROWS_AS(ConfigReader(json::array(), "ctx"), ConfigError);
}

TEST_CASE("model file round trip is lossless") {
  const ModelBundle b = small_bundle();
  const std::string text = model_to_json(b);
  const ModelBundle r = model_from_json(text);
  CHECK(model_to_json(r) == text);
  for (std::size_t l = 0; l < b.weights.weights.size(); ++l) {
    CHECK(r.weights.weights[l] == b.weights.weights[l]);
    CHECK(r.weights.biases[l] == b.weights.biases[l]);
  }
  CHECK(r.weights.embeddings[0] == b.weights.embeddings[0]);
  CHECK(r.platt.w == b.platt.w);
  CHECK(r.platt.fitted_on == "validation");
  CHECK(r.schema.continuous[0].mean == b.schema.continuous[0].mean);
  CHECK(r.schema.continuous[0].skewed);
  CHECK(r.schema.categorical[0].vocab == b.schema.categorical[0].vocab);
  CHECK(r.spec.hidden_layers == b.spec.hidden_layers);
  const json j = json::parse(text);
  CHECK(j["format_version"] == kModelFormat);
  CHECK(j["platt"]["fitted_on"] == "validation");
}

TEST_CASE("corrupt model files are data errors") {
  const ModelBundle b = small_bundle();
  json j = json::parse(model_to_json(b));
  CHECK_THROWS_AS(model_from_json("{not json"), DataError);

  json wrong_format = j;
  wrong_format["format_version"] = "other";
  CHECK_THROWS_AS(model_from_json(wrong_format.dump()), DataError);

  json wrong_shape = j;
  wrong_shape["layers"][0]["weight"].erase(0);
  CHECK_THROWS_WITH_AS(model_from_json(wrong_shape.dump()), doctest::Contains("dense_0"), DataError);

  json ragged = j;
  ragged["layers"][1]["weight"][0].push_back(1.0);
  CHECK_THROWS_AS(model_from_json(ragged.dump()), DataError);
}

TEST_CASE("dataset csv round trip") {
  WorldConfig wc;
  wc.n_guests = 500;
  wc.n_hosts = 100;
  wc.n_listings = 300;
  const auto w = generate_world(wc);
  const auto labeled = label_with_window(simulate_bookings(w, 300, 10), 2, 10);
  const Dataset d = to_dataset(labeled.examples);
  const std::string text = dataset_to_csv(d);
  const Dataset r = dataset_from_csv(text, "mem");
  CHECK(r.raw.numeric == d.raw.numeric);
  CHECK(r.raw.categorical == d.raw.categorical);
  CHECK(r.raw.numeric_names == d.raw.numeric_names);
  CHECK(r.labels == d.labels);
  CHECK(r.booking_day == d.booking_day);
  CHECK(r.oracle_p == d.oracle_p);
  CHECK(dataset_to_csv(r) == text);
  CHECK(text.substr(0, text.find('\n')).find("guest_tenure_days:num") == 0);
}

TEST_CASE("malformed datasets name the problem") {
  CHECK_THROWS_AS(dataset_from_csv("", "f"), DataError);
  CHECK_THROWS_WITH_AS(dataset_from_csv("x:num,label,booking_day\n1,2,3\n", "f"), doctest::Contains("label"), DataError);
  CHECK_THROWS_WITH_AS(dataset_from_csv("x:num,label,booking_day\n1,0\n", "f"), doctest::Contains("fields"), DataError);
  CHECK_THROWS_WITH_AS(dataset_from_csv("x:weird,label,booking_day\n1,0,3\n", "f"), doctest::Contains("x:weird"),
                       DataError);
  CHECK_THROWS_AS(dataset_from_csv("x:num,label,booking_day\nabc,0,3\n", "f"), DataError);
  const Dataset ok = dataset_from_csv("x:num,c:cat,label,booking_day\n1.5,foo,1,3\n", "f");
  CHECK(ok.rows() == 1);
  CHECK(ok.raw.categorical[0][0] == "foo");
  CHECK(ok.oracle_p.size() == 0);
}

TEST_CASE("training a schema against a mismatched dataset names the column") {
  const ModelBundle b = small_bundle();
  const Dataset other = dataset_from_csv("y:num,c:cat,label,booking_day\n1,a,0,1\n2,b,1,1\n", "f");
  CHECK_THROWS_WITH_AS(score_dataset(b, other, false), doctest::Contains("x"), DataError);
}

TEST_CASE("run config round trip and strictness") {
  RunConfig c;
  c.seed = 99;
  c.propagate_seed();
  c.data.label_mode = LabelMode::shuffled;
  c.model.hidden_layers = {8, 4};
  c.train.loss.kind = LossKind::cross_entropy;
  c.ranking.penalty_form = PenaltyForm::one_minus_p;
  c.world.risk.device = {0.1, 0.2, 0.3};
  const json j = to_json(c);
  const RunConfig r = run_config_from_json(j);
  CHECK(to_json(r) == j);
  CHECK(r.world.seed == c.world.seed);
  CHECK(r.ab.penalty_form == PenaltyForm::one_minus_p);

  json unknown = j;
  unknown["world"]["n_gusets"] = 5;
  CHECK_THROWS_WITH_AS(run_config_from_json(unknown), doctest::Contains("n_gusets"), ConfigError);
  json invalid = j;
  invalid["train"]["plateau_factor"] = 2.0;
  CHECK_THROWS_AS(run_config_from_json(invalid), ConfigError);
  json bad_grid = j;
  bad_grid["sweep"]["log_grid"] = {1.0, 0.5};
  CHECK_THROWS_AS(run_config_from_json(bad_grid), ConfigError);
  CHECK(run_config_from_json(json::object()).seed == 1);
}

TEST_CASE("world snapshot regenerates the same world") {
  WorldConfig wc;
  wc.n_guests = 300;
  wc.n_hosts = 50;
  wc.n_listings = 200;
  wc.seed = 1234567890123ULL;
  const auto w = generate_world(wc);
  const json snap = json::parse(world_snapshot(w).dump());
  const auto w2 = generate_world(world_config_from_snapshot(snap, "snap"));
  CHECK(w2.config.seed == wc.seed);
  for (std::size_t i = 0; i < w.listings.size(); ++i) CHECK(w2.listings[i].appeal == w.listings[i].appeal);
}

TEST_CASE("report writers") {
  const std::vector<SweepPoint> pts{{0.0, 0.9, 0.8, 10, 12}, {1.0, 0.85, 0.95, 10, 12}};
  const std::string sweep = sweep_to_csv(pts);
  CHECK(sweep.rfind("alpha,norm_dcgb,norm_dcgc,sessions_b,sessions_c\n", 0) == 0);
  CHECK(sweep.find("1,0.85,0.95,10,12") != std::string::npos);
  const std::string metrics = sweep_metrics_to_csv(pts, "log");
  CHECK(metrics.rfind("alpha,metric,value,session_count\n", 0) == 0);
  CHECK(metrics.find("0,log.norm_dcgc,0.8,12") != std::string::npos);
  CHECK(sweep_metrics_to_csv(pts, "raw", false).find("alpha,") == std::string::npos);

  SessionRecord s;
  s.session_id = 3;
  s.ranked.candidate_ids = {7, 9};
  s.ranked.base_scores = {1.5, 0.5};
  s.ranked.p_cs = {0.25, 0.5};
  s.ranked.booked = 1;
  const std::string sess = sessions_to_csv(std::vector<SessionRecord>{s});
  CHECK(sess == "session_id,position,candidate_id,base_score,p_cs,booked\n3,0,7,1.5,0.25,0\n3,1,9,0.5,0.5,1\n");
}

}
