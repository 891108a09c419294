#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "flowgnn/config.hpp"

namespace flowgnn {

// One network flow. `src_key` and `dst_key` are "ip:port" composites;
// `categorical` holds raw cells of categorical columns until they are
// expanded into one-hot features.
struct FlowRecord {
  std::string src_key;
  std::string dst_key;
  std::vector<double> features;
  std::vector<std::string> categorical;
  std::string label_name;
  int label = -1;
};

// Maps CSV columns to roles. Every column not named here is a numeric
// feature, except the ones listed under `categorical`.
struct Schema {
  std::string src_ip;
  std::string src_port;  // optional
  std::string dst_ip;
  std::string dst_port;  // optional
  std::string label;
  std::set<std::string> drop;
  std::set<std::string> categorical;
  std::optional<std::string> normal_label;

  static Schema from_kv(const KeyValues& kv);
  static Schema load(const std::filesystem::path& path);
};

struct FlowTable {
  std::vector<std::string> feature_names;
  std::vector<std::string> categorical_names;
  std::vector<FlowRecord> records;
  // Non-finite numeric cells (inf, nan) replaced by 0 while parsing.
  std::size_t nonfinite_replaced = 0;
};

// Reads a CSV with a header row. Row order is preserved.
//   missing column        -> SchemaError
//   unparsable number     -> ParseError carrying the 1-based file line
//   no data rows          -> EmptyDatasetError
FlowTable parse_flows(const std::filesystem::path& path, const Schema& schema);
FlowTable parse_flows(std::istream& in, const Schema& schema);

// Splits one CSV line into cells. Handles double-quoted cells with
// embedded commas and doubled quotes.
std::vector<std::string> split_csv_line(const std::string& line);

class Normalizer {
 public:
  Normalizer() = default;
  Normalizer(std::vector<double> min, std::vector<double> max);

  // Min/max over the rows in `train_idx` only.
  static Normalizer fit(std::span<const FlowRecord> records, std::span<const std::size_t> train_idx);

  // (x - min) / (max - min); columns with max == min map to 0. No clamping.
  void transform(std::span<double> row) const;
  // Inverse map for non-degenerate columns; degenerate columns return min.
  void inverse(std::span<double> row) const;

  bool fitted() const { return fitted_; }
  const std::vector<double>& min() const { return min_; }
  const std::vector<double>& max() const { return max_; }

 private:
  std::vector<double> min_;
  std::vector<double> max_;
  bool fitted_ = false;
};

std::pair<Normalizer, std::vector<FlowRecord>> fit_apply_normalizer(
    std::vector<FlowRecord> records, std::span<const std::size_t> train_idx);

// Class names indexed by class id; index 0 is the normal class when one
// is present.
struct LabelMap {
  std::vector<std::string> classes;

  std::size_t size() const { return classes.size(); }
  int index_of(const std::string& name) const;  // -1 when absent
  static int binary(int label) { return label == 0 ? 0 : 1; }
};

// Normal class pinned to 0, all other names sorted lexicographically. The
// normal class is `normal_label` when given, otherwise the first name that
// case-insensitively equals "normal", "benign" or "0".
std::pair<LabelMap, std::vector<FlowRecord>> encode_labels(
    std::vector<FlowRecord> records, const std::optional<std::string>& normal_label = std::nullopt);

struct DatasetSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
  std::uint64_t seed = 0;
};

// Seeded shuffle, then 50% / 20% / 30% (train/validation rounded to
// nearest, test takes the remainder). Requires n >= 10.
DatasetSplit split_dataset(std::size_t n, std::uint64_t seed);

// One-hot expansion of categorical columns. Per column, the `cap` most
// frequent training values (ties broken lexicographically) get their own
// column; everything else lands in "<col>=<other>".
class CategoricalEncoder {
 public:
  static constexpr std::size_t kDefaultCap = 32;
  static constexpr const char* kOtherToken = "<other>";

  static CategoricalEncoder fit(const FlowTable& table, std::span<const std::size_t> train_idx,
                                std::size_t cap = kDefaultCap);

  // Appends one-hot columns to every record and clears `categorical`.
  void apply(FlowTable& table) const;

  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<std::vector<std::string>>& vocabularies() const { return vocab_; }

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> vocab_;
};

}  // namespace flowgnn
