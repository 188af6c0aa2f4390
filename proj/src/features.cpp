// SPDX-License-Identifier: Apache-2.0
#include "csrank/features.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "csrank/errors.hpp"
#include "csrank/metrics.hpp"

namespace csrank {

std::vector<EmbeddingSpec> FeatureSchema::embedding_specs() const {
  std::vector<EmbeddingSpec> out;
  for (const auto& c : categorical)
    out.push_back({int(std::max<std::size_t>(c.vocab.size(), 1)), c.embed_dim});
  return out;
}

int RawTable::numeric_column(const std::string& name) const {
  const auto it = std::find(numeric_names.begin(), numeric_names.end(), name);
  return it == numeric_names.end() ? -1 : int(it - numeric_names.begin());
}

int RawTable::categorical_column(const std::string& name) const {
  const auto it = std::find(categorical_names.begin(), categorical_names.end(), name);
  return it == categorical_names.end() ? -1 : int(it - categorical_names.begin());
}

RawTable RawTable::select_rows(const std::vector<int>& rows) const {
  RawTable out;
  out.numeric_names = numeric_names;
  out.categorical_names = categorical_names;
  out.numeric.resize(Eigen::Index(rows.size()), numeric.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    out.numeric.row(Eigen::Index(i)) = numeric.row(rows[i]);
  out.categorical.resize(categorical.size());
  for (std::size_t c = 0; c < categorical.size(); ++c) {
    out.categorical[c].reserve(rows.size());
    for (int r : rows) out.categorical[c].push_back(categorical[c][std::size_t(r)]);
  }
  return out;
}

Dataset Dataset::select_rows(const std::vector<int>& rows) const {
  Dataset out;
  out.raw = raw.select_rows(rows);
  out.labels.resize(Eigen::Index(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.labels(Eigen::Index(i)) = labels(rows[i]);
    out.booking_day.push_back(booking_day[std::size_t(rows[i])]);
  }
  if (oracle_p.size()) {
    out.oracle_p.resize(Eigen::Index(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) out.oracle_p(Eigen::Index(i)) = oracle_p(rows[i]);
  }
  return out;
}

namespace {

double checked_log1p(const std::string& name, double x) {
  if (!std::isfinite(x)) throw DataError("feature " + name + ": non-finite raw value");
  if (x <= -1.0) throw DataError("feature " + name + ": skewed value <= -1 cannot be log1p-transformed");
  return std::log1p(x);
}

} // namespace

FeatureSchema fit_schema(const RawTable& rows, const FeatureSchema& skeleton) {
  if (rows.rows() < 2) throw DataError("fit_schema: need at least 2 rows");
  FeatureSchema schema = skeleton;

  for (auto& f : schema.continuous) {
    const int col = rows.numeric_column(f.name);
    if (col < 0) throw DataError("fit_schema: missing continuous feature " + f.name);
    std::vector<double> values(static_cast<std::size_t>(rows.rows()));
    CompensatedSum sum;
    for (Eigen::Index r = 0; r < rows.rows(); ++r) {
      double x = rows.numeric(r, col);
      if (!std::isfinite(x)) throw DataError("feature " + f.name + ": non-finite raw value");
      if (f.skewed) x = checked_log1p(f.name, x);
      values[std::size_t(r)] = x;
      sum.add(x);
    }
    const double n = double(values.size());
    f.mean = sum.value() / n;
    CompensatedSum sq;
    for (double x : values) sq.add((x - f.mean) * (x - f.mean));
    f.std = std::sqrt(sq.value() / n);
    if (!(f.std > 0.0) || !std::isfinite(f.std))
      throw DataError("fit_schema: continuous feature " + f.name +
                      " is constant on the training rows");
  }

  for (auto& f : schema.categorical) {
    const int col = rows.categorical_column(f.name);
    if (col < 0) throw DataError("fit_schema: missing categorical feature " + f.name);
    if (f.embed_dim < 1) throw ConfigError("fit_schema: embed_dim of " + f.name + " must be >= 1");
    std::set<std::string> seen(rows.categorical[std::size_t(col)].begin(),
                               rows.categorical[std::size_t(col)].end());
    seen.erase(kOovToken);
    f.vocab.assign(1, kOovToken);
    f.vocab.insert(f.vocab.end(), seen.begin(), seen.end());
  }
  schema.fitted = true;
  return schema;
}

FeatureTransformer::FeatureTransformer(FeatureSchema schema) : schema_(std::move(schema)) {
  if (!schema_.fitted) throw DataError("transform: schema has not been fitted");
  for (const auto& f : schema_.categorical) {
    std::unordered_map<std::string, int> index;
    for (std::size_t i = 0; i < f.vocab.size(); ++i) index.emplace(f.vocab[i], int(i));
    vocab_index_.push_back(std::move(index));
  }
}

FeatureTransformer::Bound FeatureTransformer::bind(const RawTable& table) const {
  Bound b;
  for (const auto& f : schema_.continuous) {
    const int col = table.numeric_column(f.name);
    if (col < 0) throw DataError("transform: table lacks continuous feature " + f.name);
    b.numeric.push_back(col);
  }
  for (const auto& f : schema_.categorical) {
    const int col = table.categorical_column(f.name);
    if (col < 0) throw DataError("transform: table lacks categorical feature " + f.name);
    b.categorical.push_back(col);
  }
  return b;
}

double FeatureTransformer::scale(std::size_t i, double raw) const {
  const auto& f = schema_.continuous[i];
  if (!std::isfinite(raw)) throw DataError("feature " + f.name + ": non-finite raw value");
  const double x = f.skewed ? checked_log1p(f.name, raw) : raw;
  return (x - f.mean) / f.std;
}

int FeatureTransformer::lookup(std::size_t i, const std::string& value) const {
  const auto it = vocab_index_[i].find(value);
  return it == vocab_index_[i].end() ? 0 : it->second;
}

FeatureBatch<double> FeatureTransformer::transform(const RawTable& table) const {
  const Bound b = bind(table);
  const Eigen::Index n = table.rows();
  FeatureBatch<double> out;
  out.continuous.resize(Eigen::Index(b.numeric.size()), n);
  out.categorical.resize(Eigen::Index(b.categorical.size()), n);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (std::size_t i = 0; i < b.numeric.size(); ++i)
      out.continuous(Eigen::Index(i), r) = scale(i, table.numeric(r, b.numeric[i]));
    for (std::size_t i = 0; i < b.categorical.size(); ++i)
      out.categorical(Eigen::Index(i), r) =
          lookup(i, table.categorical[std::size_t(b.categorical[i])][std::size_t(r)]);
  }
  return out;
}

std::pair<Eigen::VectorXd, Eigen::VectorXi>
FeatureTransformer::transform_row(const RawTable& table, Eigen::Index row) const {
  const Bound b = bind(table);
  Eigen::VectorXd cont(Eigen::Index(b.numeric.size()));
  Eigen::VectorXi cat(Eigen::Index(b.categorical.size()));
  for (std::size_t i = 0; i < b.numeric.size(); ++i)
    cont(Eigen::Index(i)) = scale(i, table.numeric(row, b.numeric[i]));
  for (std::size_t i = 0; i < b.categorical.size(); ++i)
    cat(Eigen::Index(i)) =
        lookup(i, table.categorical[std::size_t(b.categorical[i])][std::size_t(row)]);
  return {cont, cat};
}

} // namespace csrank
