// SPDX-License-Identifier: Apache-2.0
//
// Raw booking attributes -> model inputs. Skewed continuous features go
// through log1p, every continuous feature is z-scored with statistics fitted
// on the training rows, and categorical values map to vocabulary ids with a
// reserved out-of-vocabulary id 0.
#pragma once

#include <Eigen/Core>

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "csrank/nn.hpp"

namespace csrank {

inline constexpr const char* kOovToken = "<oov>";

struct ContinuousFeature {
  std::string name;
  bool skewed = false;
  double mean = 0.0;
  double std = 1.0;
};

struct CategoricalFeature {
  std::string name;
  std::vector<std::string> vocab; // vocab[0] is kOovToken once fitted
  int embed_dim = 4;
};

struct FeatureSchema {
  std::vector<ContinuousFeature> continuous;
  std::vector<CategoricalFeature> categorical;
  bool fitted = false;

  int continuous_dim() const { return int(continuous.size()); }
  std::vector<EmbeddingSpec> embedding_specs() const;
};

// Named columns, one row per record.
struct RawTable {
  std::vector<std::string> numeric_names;
  Eigen::MatrixXd numeric; // rows x numeric_names.size()
  std::vector<std::string> categorical_names;
  std::vector<std::vector<std::string>> categorical; // one vector per column

  Eigen::Index rows() const { return numeric.rows(); }
  // -1 when absent
  int numeric_column(const std::string& name) const;
  int categorical_column(const std::string& name) const;
  RawTable select_rows(const std::vector<int>& rows) const;
};

// A labeled table: the on-disk dataset unit.
struct Dataset {
  RawTable raw;
  Eigen::VectorXd labels;
  std::vector<int> booking_day;
  Eigen::VectorXd oracle_p; // generator ground truth when known, else empty

  Eigen::Index rows() const { return raw.rows(); }
  Dataset select_rows(const std::vector<int>& rows) const;
};

// Fits means/stds (after log1p for skewed features, population std) and
// freezes vocabularies (sorted, OOV first) from the skeleton's declared
// features. Throws DataError on a constant or missing feature.
FeatureSchema fit_schema(const RawTable& rows, const FeatureSchema& skeleton);

// Column lookups and vocabulary maps resolved once for repeated transforms.
class FeatureTransformer {
public:
  explicit FeatureTransformer(FeatureSchema schema);

  FeatureBatch<double> transform(const RawTable& table) const;
  std::pair<Eigen::VectorXd, Eigen::VectorXi> transform_row(const RawTable& table,
                                                            Eigen::Index row) const;
  const FeatureSchema& schema() const { return schema_; }

private:
  struct Bound {
    std::vector<int> numeric;
    std::vector<int> categorical;
  };
  Bound bind(const RawTable& table) const;
  double scale(std::size_t feature, double raw) const;
  int lookup(std::size_t feature, const std::string& value) const;

  FeatureSchema schema_;
  std::vector<std::unordered_map<std::string, int>> vocab_index_;
};

inline FeatureBatch<double> transform(const FeatureSchema& schema, const RawTable& table) {
  return FeatureTransformer(schema).transform(table);
}

} // namespace csrank
