#pragma once

#include <random>
#include <vector>

#include "flowgnn/models.hpp"
#include "flowgnn/synthetic.hpp"
#include "flowgnn/train.hpp"
#include "oracles.hpp"

namespace fixture {

struct Instance {
  flowgnn::BipartiteGraph graph;
  flowgnn::ad::Matrix features;  // one row per edge record
  std::vector<std::size_t> batch;
};

// Random multigraph with at most `max_edges` edges, uniform [0, 1) features.
Instance small_instance(std::mt19937_64& rng, std::size_t max_edges, std::size_t features);

// Small dimensions; full neighborhoods for graphs of up to `edges` edges.
flowgnn::ModelConfig small_config(flowgnn::Variant v, std::size_t edges, int layers, std::uint64_t seed);

// Logits from the naive evaluators using the model's current weights.
oracle::Mat naive_logits(flowgnn::Model& model, const Instance& inst);

double max_abs_diff(const flowgnn::ad::Matrix& a, const oracle::Mat& b);

// Synthetic flows run through the ingest steps in memory: one-hot,
// normalization on the train split, graph with virtual nodes.
struct Dataset {
  flowgnn::BipartiteGraph graph;
  flowgnn::ad::Matrix features;
  std::vector<int> labels;
  std::size_t classes = 0;
  std::vector<std::size_t> train, validation, test;

  flowgnn::TrainingData data() const { return {&graph, &features, labels, classes}; }
};
Dataset synthetic_dataset(const flowgnn::SyntheticSpec& spec, std::uint64_t seed);

}  // namespace fixture
