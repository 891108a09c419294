#include "flowgnn/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include "flowgnn/error.hpp"
#include "flowgnn/rng.hpp"

namespace flowgnn {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

bool parse_double(const std::string& cell, double& out) {
  std::string t = trim(cell);
  if (t.empty()) return false;
  // from_chars rejects a leading '+'.
  const char* first = t.data();
  const char* last = t.data() + t.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec == std::errc() && ptr == last) return true;
  if (ec == std::errc::result_out_of_range && ptr == last) {
    out = std::strtod(t.c_str(), nullptr);
    return true;
  }
  std::string l = lower(t);
  if (l == "infinity" || l == "+infinity") {
    out = INFINITY;
    return true;
  }
  if (l == "-infinity") {
    out = -INFINITY;
    return true;
  }
  return false;
}

std::string make_key(const std::vector<std::string>& cells, int ip_col, int port_col) {
  std::string key = trim(cells[ip_col]);
  if (port_col >= 0) key += ":" + trim(cells[port_col]);
  return key;
}

}  // namespace

Schema Schema::from_kv(const KeyValues& kv) {
  kv.require_known({"src_ip", "src_port", "dst_ip", "dst_port", "label", "drop", "categorical", "normal_label"});
  Schema s;
  auto required = [&](const std::string& key) {
    auto v = kv.get(key);
    if (!v || v->empty()) throw SchemaError(kv.origin() + ": schema must name the '" + key + "' column");
    return *v;
  };
  s.src_ip = required("src_ip");
  s.dst_ip = required("dst_ip");
  s.label = required("label");
  s.src_port = kv.get_or("src_port", "");
  s.dst_port = kv.get_or("dst_port", "");
  for (auto& c : kv.get_list("drop")) s.drop.insert(c);
  for (auto& c : kv.get_list("categorical")) s.categorical.insert(c);
  if (auto n = kv.get("normal_label"); n && !n->empty()) s.normal_label = *n;
  return s;
}

Schema Schema::load(const std::filesystem::path& path) { return from_kv(KeyValues::load(path)); }

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else if (c != '\r') {
      cell += c;
    }
  }
  cells.push_back(std::move(cell));
  return cells;
}

FlowTable parse_flows(std::istream& in, const Schema& schema) {
  std::string line;
  if (!std::getline(in, line)) throw EmptyDatasetError("empty file: no header row");
  std::vector<std::string> header = split_csv_line(line);
  for (auto& h : header) h = trim(h);

  auto column = [&](const std::string& name, bool required) -> int {
    if (name.empty()) {
      if (required) throw SchemaError("schema leaves a required column unnamed");
      return -1;
    }
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw SchemaError("missing column '" + name + "'");
    return static_cast<int>(it - header.begin());
  };
  const int src_ip = column(schema.src_ip, true);
  const int src_port = column(schema.src_port, false);
  const int dst_ip = column(schema.dst_ip, true);
  const int dst_port = column(schema.dst_port, false);
  const int label = column(schema.label, true);
  for (const auto& c : schema.categorical) column(c, true);

  FlowTable table;
  std::vector<int> numeric_cols;
  std::vector<int> categorical_cols;
  for (int i = 0; i < static_cast<int>(header.size()); ++i) {
    if (i == src_ip || i == src_port || i == dst_ip || i == dst_port || i == label) continue;
    if (schema.drop.count(header[i])) continue;
    if (schema.categorical.count(header[i])) {
      categorical_cols.push_back(i);
      table.categorical_names.push_back(header[i]);
    } else {
      numeric_cols.push_back(i);
      table.feature_names.push_back(header[i]);
    }
  }

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw ParseError(line_no, "expected " + std::to_string(header.size()) + " cells, found " +
                                    std::to_string(cells.size()));
    }
    FlowRecord r;
    r.src_key = make_key(cells, src_ip, src_port);
    r.dst_key = make_key(cells, dst_ip, dst_port);
    r.label_name = trim(cells[label]);
    if (r.src_key.empty() || r.dst_key.empty()) throw ParseError(line_no, "empty endpoint key");
    r.features.reserve(numeric_cols.size());
    for (std::size_t k = 0; k < numeric_cols.size(); ++k) {
      double v = 0.0;
      if (!parse_double(cells[numeric_cols[k]], v)) {
        throw ParseError(line_no, "column '" + table.feature_names[k] + "': cannot parse '" +
                                      cells[numeric_cols[k]] + "' as a number");
      }
      if (!std::isfinite(v)) {
        v = 0.0;
        ++table.nonfinite_replaced;
      }
      r.features.push_back(v);
    }
    for (int c : categorical_cols) r.categorical.push_back(trim(cells[c]));
    table.records.push_back(std::move(r));
  }
  if (table.records.empty()) throw EmptyDatasetError("dataset has no data rows");
  return table;
}

FlowTable parse_flows(const std::filesystem::path& path, const Schema& schema) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset " + path.string());
  return parse_flows(in, schema);
}

Normalizer::Normalizer(std::vector<double> min, std::vector<double> max)
    : min_(std::move(min)), max_(std::move(max)), fitted_(true) {
  if (min_.size() != max_.size()) throw std::invalid_argument("normalizer min/max length mismatch");
}

Normalizer Normalizer::fit(std::span<const FlowRecord> records, std::span<const std::size_t> train_idx) {
  if (train_idx.empty()) throw std::invalid_argument("normalizer: cannot fit on an empty index list");
  const std::size_t d = records[train_idx[0]].features.size();
  std::vector<double> lo(d, INFINITY), hi(d, -INFINITY);
  for (std::size_t i : train_idx) {
    if (i >= records.size()) throw std::out_of_range("normalizer: train index " + std::to_string(i) + " out of range");
    const auto& f = records[i].features;
    for (std::size_t j = 0; j < d; ++j) {
      lo[j] = std::min(lo[j], f[j]);
      hi[j] = std::max(hi[j], f[j]);
    }
  }
  return Normalizer(std::move(lo), std::move(hi));
}

void Normalizer::transform(std::span<double> row) const {
  for (std::size_t j = 0; j < row.size(); ++j) {
    const double range = max_[j] - min_[j];
    row[j] = range > 0.0 ? (row[j] - min_[j]) / range : 0.0;
  }
}

void Normalizer::inverse(std::span<double> row) const {
  for (std::size_t j = 0; j < row.size(); ++j) {
    const double range = max_[j] - min_[j];
    row[j] = range > 0.0 ? row[j] * range + min_[j] : min_[j];
  }
}

std::pair<Normalizer, std::vector<FlowRecord>> fit_apply_normalizer(std::vector<FlowRecord> records,
                                                                    std::span<const std::size_t> train_idx) {
  Normalizer n = Normalizer::fit(records, train_idx);
  for (auto& r : records) n.transform(r.features);
  return {std::move(n), std::move(records)};
}

int LabelMap::index_of(const std::string& name) const {
  auto it = std::find(classes.begin(), classes.end(), name);
  return it == classes.end() ? -1 : static_cast<int>(it - classes.begin());
}

std::pair<LabelMap, std::vector<FlowRecord>> encode_labels(std::vector<FlowRecord> records,
                                                           const std::optional<std::string>& normal_label) {
  std::vector<std::string> names;
  for (const auto& r : records) names.push_back(r.label_name);
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());

  std::optional<std::string> normal;
  if (normal_label && std::binary_search(names.begin(), names.end(), *normal_label)) {
    normal = *normal_label;
  } else if (!normal_label) {
    for (const auto& n : names) {
      const std::string l = lower(n);
      if (l == "normal" || l == "benign" || l == "0") {
        normal = n;
        break;
      }
    }
  }

  LabelMap map;
  if (normal) map.classes.push_back(*normal);
  for (const auto& n : names) {
    if (!normal || n != *normal) map.classes.push_back(n);
  }
  std::unordered_map<std::string, int> index;
  for (std::size_t i = 0; i < map.classes.size(); ++i) index[map.classes[i]] = static_cast<int>(i);
  for (auto& r : records) r.label = index.at(r.label_name);
  return {std::move(map), std::move(records)};
}

DatasetSplit split_dataset(std::size_t n, std::uint64_t seed) {
  if (n < 10) throw std::invalid_argument("split_dataset: need at least 10 records, got " + std::to_string(n));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = make_rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const auto n_train = static_cast<std::size_t>(std::llround(0.5 * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::llround(0.2 * static_cast<double>(n)));
  DatasetSplit split;
  split.seed = seed;
  split.train.assign(order.begin(), order.begin() + n_train);
  split.validation.assign(order.begin() + n_train, order.begin() + n_train + n_val);
  split.test.assign(order.begin() + n_train + n_val, order.end());
  return split;
}

CategoricalEncoder CategoricalEncoder::fit(const FlowTable& table, std::span<const std::size_t> train_idx,
                                           std::size_t cap) {
  CategoricalEncoder enc;
  enc.columns_ = table.categorical_names;
  for (std::size_t c = 0; c < enc.columns_.size(); ++c) {
    std::map<std::string, std::size_t> counts;
    for (std::size_t i : train_idx) ++counts[table.records.at(i).categorical.at(c)];
    std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
    // std::map iteration is lexicographic, so stable_sort keeps ties ordered.
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    if (ranked.size() > cap) ranked.resize(cap);
    std::vector<std::string> vocab;
    for (auto& [value, count] : ranked) vocab.push_back(value);
    enc.vocab_.push_back(std::move(vocab));
  }
  return enc;
}

void CategoricalEncoder::apply(FlowTable& table) const {
  if (table.categorical_names != columns_) throw SchemaError("categorical columns differ from the fitted encoder");
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    for (const auto& v : vocab_[c]) table.feature_names.push_back(columns_[c] + "=" + v);
    table.feature_names.push_back(columns_[c] + "=" + kOtherToken);
  }
  for (auto& r : table.records) {
    for (std::size_t c = 0; c < columns_.size(); ++c) {
      const auto& vocab = vocab_[c];
      auto it = std::find(vocab.begin(), vocab.end(), r.categorical.at(c));
      const std::size_t hot = it == vocab.end() ? vocab.size() : static_cast<std::size_t>(it - vocab.begin());
      for (std::size_t k = 0; k <= vocab.size(); ++k) r.features.push_back(k == hot ? 1.0 : 0.0);
    }
    r.categorical.clear();
  }
  table.categorical_names.clear();
}

}  // namespace flowgnn
