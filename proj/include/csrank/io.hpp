// SPDX-License-Identifier: Apache-2.0
//
// Persistence: JSON for models, schemas, configs and world snapshots;
// delimited text for datasets, session logs, sweeps and cohort reports.
// Every writer goes through write_atomic, so a crashed run leaves at most a
// `.partial` file behind.
#pragma once

#include <json.hpp>

#include <filesystem>
#include <initializer_list>
#include <set>
#include <span>
#include <string>
#include <string_view>

#include "csrank/calibration.hpp"
#include "csrank/errors.hpp"
#include "csrank/features.hpp"
#include "csrank/marketplace.hpp"
#include "csrank/nn.hpp"
#include "csrank/ranking.hpp"
#include "csrank/trainer.hpp"

namespace csrank {

using json = nlohmann::json;

inline constexpr const char* kModelFormat = "csrank-model-1";

// Writes <path>.partial then renames it over path. Creates parent
// directories. ConfigError when the location is not writable.
void write_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

// Shortest text that parses back to the identical double.
std::string format_double(double x);
double parse_double(std::string_view text, const std::string& context);

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t x);

// Reads keys from a JSON object and rejects any key it was not asked about.
class ConfigReader {
public:
  ConfigReader(const json& object, std::string context);

  template <typename T>
  bool get(const char* key, T& out) {
    seen_.insert(key);
    if (!object_.contains(key)) return false;
    try {
      out = object_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(context_ + "." + key + ": " + e.what());
    }
    return true;
  }
  const json* child(const char* key);
  const std::string& context() const { return context_; }
  // ConfigError naming the first unexpected key.
  void finish() const;

private:
  const json& object_;
  std::string context_;
  std::set<std::string> seen_;
};

json to_json(const WorldConfig& c);
void from_json(const json& j, WorldConfig& c, const std::string& context);
json to_json(const ModelSpec& s);
void from_json(const json& j, ModelSpec& s, const std::string& context);
json to_json(const TrainConfig& c);
void from_json(const json& j, TrainConfig& c, const std::string& context);
json to_json(const PlattConfig& c);
void from_json(const json& j, PlattConfig& c, const std::string& context);
json to_json(const FeatureSchema& s);
FeatureSchema schema_from_json(const json& j, const std::string& context);

// A trained scorer: weights, the schema that produced its inputs and the
// Platt scaler applied to its logits.
struct ModelBundle {
  ModelSpec spec;
  ModelWeights<double> weights;
  FeatureSchema schema;
  PlattScaler platt;
};

std::string model_to_json(const ModelBundle& model);
ModelBundle model_from_json(std::string_view text);

// Header: one `name:num` or `name:cat` column per feature, then label and
// booking_day, then true_cs_probability when the dataset carries it.
std::string dataset_to_csv(const Dataset& data);
Dataset dataset_from_csv(std::string_view text, const std::string& source);

std::string sessions_to_csv(std::span<const SessionRecord> sessions);
std::string sweep_to_csv(std::span<const SweepPoint> points);
// Long format, one row per (alpha, metric): alpha,metric,value,session_count.
// Metric names are prefixed with the frontier label, e.g. log.norm_dcgb.
std::string sweep_metrics_to_csv(std::span<const SweepPoint> points, const std::string& label,
                                 bool header = true);
std::string cohorts_to_csv(std::span<const CohortResult> cohorts);
std::string train_log_to_csv(std::span<const TrainLogEntry> log);
std::string reliability_to_csv(const ReliabilityReport& report);

// The generating config plus summary counts; the population itself is
// regenerated from the config.
json world_snapshot(const World& world);
WorldConfig world_config_from_snapshot(const json& snapshot, const std::string& context);

} // namespace csrank
