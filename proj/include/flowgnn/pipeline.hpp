#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "flowgnn/autodiff.hpp"
#include "flowgnn/graph.hpp"
#include "flowgnn/ingest.hpp"
#include "flowgnn/models.hpp"
#include "flowgnn/train.hpp"
#include "json.hpp"

namespace flowgnn {

// Paths are resolved relative to the manifest's directory.
struct RunManifest {
  std::filesystem::path dataset;
  std::filesystem::path schema;
  std::filesystem::path model_config;
  std::filesystem::path train_config;
  std::filesystem::path output_dir;
  std::string command;
  std::uint64_t seed = 0;

  static RunManifest load(const std::filesystem::path& path);
  // Throws ConfigError when a file the command needs is missing.
  void validate(const std::string& for_command) const;
};

struct Overrides {
  std::optional<double> lr;
  std::optional<std::size_t> batch_size;
  std::optional<std::string> variant;
  std::optional<std::uint64_t> seed;
  std::optional<int> heads;
  std::optional<int> layers;
  std::optional<int> sample_size;
  std::optional<int> hops;
  std::optional<int> epochs;
  std::optional<std::filesystem::path> checkpoint;
  std::optional<std::string> split;
  std::optional<std::filesystem::path> output;
};

// Normalized, label-encoded dataset plus its sidecar metadata.
struct PreparedDataset {
  std::vector<std::string> feature_names;
  LabelMap labels;
  Normalizer normalizer;
  DatasetSplit split;
  std::vector<FlowRecord> records;
  nlohmann::json sidecar;

  ad::Matrix feature_matrix() const;
  std::vector<int> label_vector(Task task) const;
  const std::vector<std::size_t>& split_indices(const std::string& name) const;

  static PreparedDataset load(const std::filesystem::path& output_dir);
};

// File names inside the output directory.
inline constexpr const char* kPreparedCsv = "prepared.csv";
inline constexpr const char* kPreparedSidecar = "prepared.json";
inline constexpr const char* kGraphCache = "graph.csr";
inline constexpr const char* kCheckpoint = "model.ckpt";
inline constexpr const char* kRunRecord = "run.json";

// Parse, encode, split, one-hot, normalize; writes the cache, sidecar and
// augmented graph. Returns the sidecar.
nlohmann::json cmd_prepare(const RunManifest& manifest, const Overrides& overrides = {});
// Trains, checkpoints at each epoch end, writes the run record and returns it.
nlohmann::json cmd_train(const RunManifest& manifest, const Overrides& overrides = {});
// Binary and multiclass reports on a split (default test).
nlohmann::json cmd_eval(const RunManifest& manifest, const Overrides& overrides = {});
// Writes the embedding CSV; returns {path, rows, columns}.
nlohmann::json cmd_embed(const RunManifest& manifest, const Overrides& overrides = {});

nlohmann::json run_command(const std::string& command, const RunManifest& manifest, const Overrides& overrides);

ModelConfig resolve_model_config(const RunManifest& manifest, const Overrides& overrides);
TrainConfig resolve_train_config(const RunManifest& manifest, const Overrides& overrides);

nlohmann::json model_config_json(const ModelConfig& c);
nlohmann::json train_config_json(const TrainConfig& c);

}  // namespace flowgnn
