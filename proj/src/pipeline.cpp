#include "flowgnn/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "flowgnn/checkpoint.hpp"
#include "flowgnn/error.hpp"
#include "flowgnn/rng.hpp"

namespace flowgnn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path resolve(const fs::path& base, const std::string& value) {
  fs::path p(value);
  return p.is_absolute() ? p : base / p;
}

void write_text(const fs::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << text;
    if (!out.flush()) throw Error("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// Graph plus the edge ids of the requested records.
struct ScopedGraph {
  BipartiteGraph graph;
  std::vector<std::size_t> edges;
};

ScopedGraph graph_for(const PreparedDataset& data, const fs::path& output_dir, bool inductive,
                      std::span<const std::size_t> scope, std::span<const std::size_t> train, std::uint64_t seed) {
  ScopedGraph s;
  if (!inductive) {
    std::uint64_t cached_seed = 0;
    s.graph = load_graph(output_dir / kGraphCache, &cached_seed);
    if (s.graph.num_edges() != data.records.size()) {
      throw Error("graph cache holds " + std::to_string(s.graph.num_edges()) + " edges for " +
                  std::to_string(data.records.size()) + " prepared records; rerun prepare");
    }
    s.edges.assign(scope.begin(), scope.end());
    return s;
  }
  // Training edges first, then the evaluated edges that are not training edges.
  std::vector<std::size_t> records(train.begin(), train.end());
  std::vector<char> in_train(data.records.size(), 0);
  for (std::size_t r : train) in_train[r] = 1;
  for (std::size_t r : scope) {
    if (!in_train[r]) records.push_back(r);
  }
  std::vector<std::size_t> edge_of(data.records.size(), 0);
  for (std::size_t i = 0; i < records.size(); ++i) edge_of[records[i]] = i;
  s.graph = augment_virtual_nodes(build_bipartite(data.records, records), derive_seed(seed, SeedRole::kAugment));
  for (std::size_t r : scope) s.edges.push_back(edge_of[r]);
  return s;
}

std::vector<std::string> class_names_for(const PreparedDataset& data, Task task) {
  if (task == Task::kBinary) return {"normal", "attack"};
  return data.labels.classes;
}

std::uint64_t global_seed(const RunManifest& m, const Overrides& o) { return o.seed.value_or(m.seed); }

json graph_stats(const BipartiteGraph& g) {
  json hist = json::array();
  for (auto [degree, count] : degree_histogram(g)) hist.push_back({degree, count});
  return {{"sources", g.num_sources()},
          {"destinations", g.num_destinations()},
          {"virtual_sources", g.virtual_sources()},
          {"virtual_destinations", g.virtual_destinations()},
          {"edges", g.num_edges()},
          {"predicted_line_edges", line_edge_count(g)},
          {"degree_histogram", hist}};
}

struct Loaded {
  PreparedDataset data;
  ModelConfig model_config;
  TrainConfig train_config;
  ad::Matrix features;
  std::vector<int> labels;
  std::size_t classes = 0;
};

Loaded load_for_model(const RunManifest& manifest, const Overrides& overrides) {
  Loaded l{PreparedDataset::load(manifest.output_dir), resolve_model_config(manifest, overrides),
           resolve_train_config(manifest, overrides), {}, {}, 0};
  l.features = l.data.feature_matrix();
  l.labels = l.data.label_vector(l.train_config.task);
  l.classes = l.train_config.task == Task::kBinary ? 2 : l.data.labels.size();
  return l;
}

fs::path checkpoint_path(const RunManifest& manifest, const Overrides& overrides) {
  return overrides.checkpoint.value_or(manifest.output_dir / kCheckpoint);
}

}  // namespace

// ------------------------------------------------------------ RunManifest

RunManifest RunManifest::load(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("manifest not found: " + path.string());
  const KeyValues kv = KeyValues::load(path);
  kv.require_known({"dataset", "schema", "model_config", "train_config", "output_dir", "command", "seed"});
  const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
  RunManifest m;
  if (auto v = kv.get("dataset")) m.dataset = resolve(base, *v);
  if (auto v = kv.get("schema")) m.schema = resolve(base, *v);
  if (auto v = kv.get("model_config")) m.model_config = resolve(base, *v);
  if (auto v = kv.get("train_config")) m.train_config = resolve(base, *v);
  auto out = kv.get("output_dir");
  if (!out) throw ConfigError(path.string() + ": output_dir is required");
  m.output_dir = resolve(base, *out);
  m.command = kv.get_or("command", "");
  m.seed = static_cast<std::uint64_t>(kv.get_int("seed", 0));
  return m;
}

void RunManifest::validate(const std::string& for_command) const {
  auto need = [](const fs::path& p, const char* what) {
    if (p.empty()) throw ConfigError(std::string("manifest does not name a ") + what);
    if (!fs::exists(p)) throw ConfigError(std::string(what) + " not found: " + p.string());
  };
  auto optional = [](const fs::path& p, const char* what) {
    if (!p.empty() && !fs::exists(p)) throw ConfigError(std::string(what) + " not found: " + p.string());
  };
  if (for_command == "prepare") {
    need(dataset, "dataset");
    need(schema, "schema");
  } else {
    optional(model_config, "model config");
    optional(train_config, "train config");
    if (!fs::exists(output_dir / kPreparedSidecar)) {
      throw ConfigError("no prepared dataset in " + output_dir.string() + "; run prepare first");
    }
  }
}

// -------------------------------------------------------- PreparedDataset

ad::Matrix PreparedDataset::feature_matrix() const {
  const auto cols = static_cast<Eigen::Index>(feature_names.size());
  ad::Matrix x(static_cast<Eigen::Index>(records.size()), cols);
  for (std::size_t r = 0; r < records.size(); ++r) {
    for (Eigen::Index j = 0; j < cols; ++j) x(static_cast<Eigen::Index>(r), j) = records[r].features[j];
  }
  return x;
}

std::vector<int> PreparedDataset::label_vector(Task task) const {
  std::vector<int> y;
  y.reserve(records.size());
  for (const auto& r : records) y.push_back(task == Task::kBinary ? LabelMap::binary(r.label) : r.label);
  return y;
}

const std::vector<std::size_t>& PreparedDataset::split_indices(const std::string& name) const {
  if (name == "train") return split.train;
  if (name == "validation" || name == "val") return split.validation;
  if (name == "test") return split.test;
  throw ConfigError("unknown split '" + name + "' (valid: train, validation, test)");
}

PreparedDataset PreparedDataset::load(const fs::path& output_dir) {
  PreparedDataset d;
  {
    std::ifstream in(output_dir / kPreparedSidecar);
    if (!in) throw ConfigError("no prepared dataset in " + output_dir.string() + "; run prepare first");
    d.sidecar = json::parse(in);
  }
  const json& s = d.sidecar;
  d.feature_names = s.at("feature_names").get<std::vector<std::string>>();
  d.labels.classes = s.at("classes").get<std::vector<std::string>>();
  d.normalizer = Normalizer(s.at("normalizer").at("min").get<std::vector<double>>(),
                            s.at("normalizer").at("max").get<std::vector<double>>());
  d.split.train = s.at("split").at("train").get<std::vector<std::size_t>>();
  d.split.validation = s.at("split").at("validation").get<std::vector<std::size_t>>();
  d.split.test = s.at("split").at("test").get<std::vector<std::size_t>>();
  d.split.seed = s.at("split").at("seed").get<std::uint64_t>();

  std::ifstream in(output_dir / kPreparedCsv);
  if (!in) throw Error("cannot open " + (output_dir / kPreparedCsv).string());
  std::string line;
  std::getline(in, line);
  const std::size_t width = d.feature_names.size();
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != width + 3) throw ParseError(lineno, "prepared cache row has " + std::to_string(cells.size()) + " cells");
    FlowRecord r;
    r.src_key = cells[0];
    r.dst_key = cells[1];
    r.label = std::stoi(cells[2]);
    r.label_name = d.labels.classes.at(static_cast<std::size_t>(r.label));
    r.features.reserve(width);
    for (std::size_t j = 0; j < width; ++j) r.features.push_back(std::stod(cells[3 + j]));
    d.records.push_back(std::move(r));
  }
  if (d.records.size() != s.at("records").get<std::size_t>()) {
    throw Error("prepared cache and sidecar disagree on the record count; rerun prepare");
  }
  return d;
}

// --------------------------------------------------------------- configs

ModelConfig resolve_model_config(const RunManifest& manifest, const Overrides& o) {
  KeyValues kv;
  if (!manifest.model_config.empty()) kv = KeyValues::load(manifest.model_config);
  if (o.variant) kv.set("variant", *o.variant);
  ModelConfig c = ModelConfig::from_kv(kv);
  if (!kv.has("seed")) c.seed = derive_seed(global_seed(manifest, o), SeedRole::kInit);
  if (o.heads) c.heads = *o.heads;
  if (o.sample_size) c.sample_size = *o.sample_size;
  if (o.layers) {
    c.set_layers(*o.layers);
    if (!uses_line_graph(c.variant) && !o.hops) c.hops = *o.layers;
  }
  if (o.hops) c.hops = *o.hops;
  c.validate();
  return c;
}

TrainConfig resolve_train_config(const RunManifest& manifest, const Overrides& o) {
  KeyValues kv;
  if (!manifest.train_config.empty()) kv = KeyValues::load(manifest.train_config);
  TrainConfig c = TrainConfig::from_kv(kv);
  if (!kv.has("seed")) c.seed = manifest.seed;
  if (o.seed) c.seed = *o.seed;
  if (o.lr) c.adam.lr = *o.lr;
  if (o.batch_size) c.batch_size = *o.batch_size;
  if (o.epochs) c.epochs = *o.epochs;
  c.validate();
  return c;
}

json model_config_json(const ModelConfig& c) {
  return {{"variant", variant_name(c.variant)},
          {"layers", c.layers()},
          {"hidden", c.hidden},
          {"heads", c.heads},
          {"head_dim", c.head_dim},
          {"dropout", c.dropout},
          {"self_loops", c.self_loops},
          {"sample_size", c.sample_size},
          {"hops", c.hops},
          {"line_node_cap", c.line_node_cap},
          {"seed", c.seed}};
}

json train_config_json(const TrainConfig& c) {
  return {{"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"lr", c.adam.lr},
          {"beta1", c.adam.beta1},
          {"beta2", c.adam.beta2},
          {"eps", c.adam.eps},
          {"seed", c.seed},
          {"task", c.task == Task::kBinary ? "binary" : "multi"},
          {"inductive", c.inductive},
          {"preset", c.preset}};
}

// -------------------------------------------------------------- commands

json cmd_prepare(const RunManifest& manifest, const Overrides& overrides) {
  manifest.validate("prepare");
  const std::uint64_t seed = global_seed(manifest, overrides);
  const Schema schema = Schema::load(manifest.schema);
  FlowTable table = parse_flows(manifest.dataset, schema);

  auto [labels, encoded] = encode_labels(std::move(table.records), schema.normal_label);
  table.records = std::move(encoded);
  const DatasetSplit split = split_dataset(table.records.size(), derive_seed(seed, SeedRole::kSplit));

  const CategoricalEncoder encoder = CategoricalEncoder::fit(table, split.train);
  encoder.apply(table);
  auto [normalizer, records] = fit_apply_normalizer(std::move(table.records), split.train);

  fs::create_directories(manifest.output_dir);
  {
    std::ostringstream csv;
    csv << "src_key,dst_key,label";
    for (const auto& n : table.feature_names) csv << ',' << csv_cell(n);
    csv << '\n';
    for (const auto& r : records) {
      csv << csv_cell(r.src_key) << ',' << csv_cell(r.dst_key) << ',' << r.label;
      for (double v : r.features) csv << ',' << num(v);
      csv << '\n';
    }
    write_text(manifest.output_dir / kPreparedCsv, csv.str());
  }

  const BipartiteGraph raw = build_bipartite(records);
  const BipartiteGraph graph = augment_virtual_nodes(raw, derive_seed(seed, SeedRole::kAugment));
  save_graph(graph, seed, manifest.output_dir / kGraphCache);

  std::vector<std::size_t> class_counts(labels.size(), 0);
  for (const auto& r : records) ++class_counts[static_cast<std::size_t>(r.label)];
  json categorical = json::object();
  for (std::size_t c = 0; c < encoder.columns().size(); ++c) categorical[encoder.columns()[c]] = encoder.vocabularies()[c];

  json sidecar = {{"records", records.size()},
                  {"seed", seed},
                  {"classes", labels.classes},
                  {"class_counts", class_counts},
                  {"feature_names", table.feature_names},
                  {"nonfinite_replaced", table.nonfinite_replaced},
                  {"categorical", categorical},
                  {"normalizer", {{"min", normalizer.min()}, {"max", normalizer.max()}}},
                  {"split",
                   {{"seed", split.seed}, {"train", split.train}, {"validation", split.validation}, {"test", split.test}}},
                  {"graph", {{"raw", graph_stats(raw)}, {"augmented", graph_stats(graph)}}}};
  write_text(manifest.output_dir / kPreparedSidecar, sidecar.dump(2) + "\n");
  return sidecar;
}

json cmd_train(const RunManifest& manifest, const Overrides& overrides) {
  manifest.validate("train");
  Loaded l = load_for_model(manifest, overrides);
  const TrainConfig& tc = l.train_config;
  const auto& train = l.data.split.train;
  if (train.empty()) throw EmptyDatasetError("training split is empty");

  ScopedGraph g = graph_for(l.data, manifest.output_dir, tc.inductive, train, train, global_seed(manifest, overrides));
  TrainingData data{&g.graph, &l.features, l.labels, l.classes};
  Model model(l.model_config, l.data.feature_names.size(), l.classes);
  auto params = model.parameters();

  const fs::path ckpt = manifest.output_dir / kCheckpoint;
  json epochs = json::array();
  for (int e = 0; e < tc.epochs; ++e) {
    EpochTrace trace = train_epoch(model, data, g.edges, tc, e);
    save_checkpoint(ckpt, params);
    epochs.push_back({{"epoch", e + 1}, {"losses", trace.losses}, {"seconds", trace.seconds}});
  }
  if (tc.epochs == 0) save_checkpoint(ckpt, params);

  json metrics = json::object();
  for (const char* split : {"validation", "test"}) {
    const auto& idx = l.data.split_indices(split);
    if (idx.empty()) continue;
    ScopedGraph eg = tc.inductive ? graph_for(l.data, manifest.output_dir, true, idx, train, global_seed(manifest, overrides))
                                  : ScopedGraph{g.graph, {idx.begin(), idx.end()}};
    TrainingData ed{&eg.graph, &l.features, l.labels, l.classes};
    const Predictions p = predict(model, ed, eg.edges, tc);
    json entry = {{"binary", report_from_predictions(p, l.classes, EvalMode::kBinary).to_json()}};
    if (tc.task == Task::kMulti) {
      entry["multi"] = report_from_predictions(p, l.classes, EvalMode::kMulti, class_names_for(l.data, tc.task)).to_json();
    }
    metrics[split] = std::move(entry);
  }

  json record = {{"command", "train"},
                 {"model", model_config_json(l.model_config)},
                 {"train", train_config_json(tc)},
                 {"features", l.data.feature_names.size()},
                 {"classes", l.classes},
                 {"train_edges", train.size()},
                 {"epochs", epochs},
                 {"metrics", metrics},
                 {"checkpoint", ckpt.string()}};
  write_text(manifest.output_dir / kRunRecord, record.dump(2) + "\n");
  return record;
}

json cmd_eval(const RunManifest& manifest, const Overrides& overrides) {
  manifest.validate("eval");
  Loaded l = load_for_model(manifest, overrides);
  const TrainConfig& tc = l.train_config;
  Model model(l.model_config, l.data.feature_names.size(), l.classes);
  auto params = model.parameters();
  restore_parameters(params, load_checkpoint(checkpoint_path(manifest, overrides)));

  const std::string split = overrides.split.value_or("test");
  const auto& idx = l.data.split_indices(split);
  if (idx.empty()) throw EmptyDatasetError("split '" + split + "' is empty");
  ScopedGraph g = graph_for(l.data, manifest.output_dir, tc.inductive, idx, l.data.split.train,
                            global_seed(manifest, overrides));
  TrainingData data{&g.graph, &l.features, l.labels, l.classes};
  const Predictions p = predict(model, data, g.edges, tc);

  const MetricsReport binary = report_from_predictions(p, l.classes, EvalMode::kBinary);
  json out = {{"command", "eval"},
              {"split", split},
              {"edges", idx.size()},
              {"model", model_config_json(l.model_config)},
              {"binary", binary.to_json()}};
  std::string table = "binary\n" + binary.format_table();
  if (tc.task == Task::kMulti) {
    const MetricsReport multi = report_from_predictions(p, l.classes, EvalMode::kMulti, class_names_for(l.data, tc.task));
    out["multi"] = multi.to_json();
    table += "\nmulticlass\n" + multi.format_table();
  }
  out["table"] = table;
  const fs::path path = overrides.output.value_or(manifest.output_dir / ("eval_" + split + ".json"));
  write_text(path, out.dump(2) + "\n");
  out["path"] = path.string();
  return out;
}

json cmd_embed(const RunManifest& manifest, const Overrides& overrides) {
  manifest.validate("embed");
  Loaded l = load_for_model(manifest, overrides);
  const TrainConfig& tc = l.train_config;
  Model model(l.model_config, l.data.feature_names.size(), l.classes);
  auto params = model.parameters();
  restore_parameters(params, load_checkpoint(checkpoint_path(manifest, overrides)));

  const std::string split = overrides.split.value_or("test");
  const auto& idx = l.data.split_indices(split);
  ScopedGraph g = graph_for(l.data, manifest.output_dir, tc.inductive, idx, l.data.split.train,
                            global_seed(manifest, overrides));
  TrainingData data{&g.graph, &l.features, l.labels, l.classes};
  const Predictions p = predict(model, data, g.edges, tc, true);

  std::ostringstream csv;
  csv << "edge_id,label";
  for (Eigen::Index j = 0; j < p.embeddings.cols(); ++j) csv << ",e" << j;
  csv << '\n';
  for (std::size_t i = 0; i < idx.size(); ++i) {
    csv << idx[i] << ',' << l.data.records[idx[i]].label;
    for (Eigen::Index j = 0; j < p.embeddings.cols(); ++j) csv << ',' << num(p.embeddings(static_cast<Eigen::Index>(i), j));
    csv << '\n';
  }
  const fs::path path = overrides.output.value_or(manifest.output_dir / ("embeddings_" + split + ".csv"));
  write_text(path, csv.str());
  return {{"path", path.string()}, {"rows", idx.size()}, {"columns", p.embeddings.cols()}};
}

json run_command(const std::string& command, const RunManifest& manifest, const Overrides& overrides) {
  if (command == "prepare") return cmd_prepare(manifest, overrides);
  if (command == "train") return cmd_train(manifest, overrides);
  if (command == "eval") return cmd_eval(manifest, overrides);
  if (command == "embed") return cmd_embed(manifest, overrides);
  throw ConfigError("unknown command '" + command + "' (valid: prepare, train, eval, embed)");
}

}  // namespace flowgnn
