#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "flowgnn/error.hpp"
#include "flowgnn/pipeline.hpp"
#include "flowgnn/synthetic.hpp"

namespace {

void summarize(const std::string& command, const nlohmann::json& out) {
  if (command == "prepare") {
    std::printf("prepared %zu records, %zu classes, %zu features\n", out["records"].get<std::size_t>(),
                out["classes"].size(), out["feature_names"].size());
    const auto& g = out["graph"]["augmented"];
    std::printf("graph: %zu sources, %zu destinations, %zu edges, %llu predicted line edges\n",
                g["sources"].get<std::size_t>(), g["destinations"].get<std::size_t>(), g["edges"].get<std::size_t>(),
                static_cast<unsigned long long>(g["predicted_line_edges"].get<std::uint64_t>()));
  } else if (command == "train") {
    for (const auto& e : out["epochs"]) {
      const auto& losses = e["losses"];
      std::printf("epoch %d: %zu batches, last loss %.6f\n", e["epoch"].get<int>(), losses.size(),
                  losses.empty() ? 0.0 : losses.back().get<double>());
    }
    if (out["metrics"].contains("test")) {
      const auto& t = out["metrics"]["test"];
      std::printf("test binary weighted f1 %.4f", t["binary"]["weighted_f1"].get<double>());
      if (t.contains("multi")) std::printf(", multiclass macro f1 %.4f", t["multi"]["macro_f1"].get<double>());
      std::printf("\n");
    }
    std::printf("checkpoint: %s\n", out["checkpoint"].get<std::string>().c_str());
  } else if (command == "eval") {
    std::cout << out["table"].get<std::string>() << "report: " << out["path"].get<std::string>() << "\n";
  } else if (command == "embed") {
    std::printf("wrote %zu rows x %lld columns to %s\n", out["rows"].get<std::size_t>(),
                static_cast<long long>(out["columns"].get<std::int64_t>()), out["path"].get<std::string>().c_str());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph neural network intrusion detection over flow records"};
  app.require_subcommand(1);

  std::string manifest_path;
  flowgnn::Overrides o;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--manifest", manifest_path, "Run manifest")->required();
    sub->add_option("--seed", o.seed, "Global seed");
    sub->add_option("--variant", o.variant, "egraphsage, egraphsage_modified, gat or eresgat");
    sub->add_option("--lr", o.lr, "Learning rate");
    sub->add_option("--batch-size", o.batch_size, "Edges per mini-batch")->check(CLI::PositiveNumber);
    sub->add_option("--heads", o.heads, "Attention heads");
    sub->add_option("--layers", o.layers, "Model layers");
    sub->add_option("--sample-size", o.sample_size, "Neighbors sampled per node and hop");
    sub->add_option("--hops", o.hops, "Neighborhood hops");
    sub->add_option("--epochs", o.epochs, "Training epochs");
  };
  std::string checkpoint;
  auto add_model_io = [&](CLI::App* sub) {
    sub->add_option("--checkpoint", checkpoint, "Checkpoint (default <output_dir>/model.ckpt)");
    sub->add_option("--split", o.split, "train, validation or test (default test)");
    sub->add_option("--output", o.output, "Output file");
  };

  std::vector<CLI::App*> commands;
  for (const char* name : {"prepare", "train", "eval", "embed"}) {
    CLI::App* sub = app.add_subcommand(name);
    add_common(sub);
    if (std::string(name) == "eval" || std::string(name) == "embed") add_model_io(sub);
    commands.push_back(sub);
  }
  commands[0]->description("Parse, encode, split and normalize a flow CSV; build the graph cache");
  commands[1]->description("Train a model and write a checkpoint and run record");
  commands[2]->description("Binary and multiclass F1 reports on a split");
  commands[3]->description("Export pre-classifier embeddings as CSV");

  flowgnn::SyntheticSpec spec;
  std::string synth_csv, synth_schema;
  CLI::App* synth = app.add_subcommand("synth", "Write a seeded synthetic flow CSV and matching schema");
  synth->add_option("--output", synth_csv, "CSV path")->required();
  synth->add_option("--schema", synth_schema, "Schema path");
  synth->add_option("--flows", spec.flows);
  synth->add_option("--classes", spec.classes);
  synth->add_option("--majority", spec.majority_fraction, "Share of class 0");
  synth->add_option("--informative", spec.informative);
  synth->add_option("--noise-features", spec.noise_features);
  synth->add_option("--separation", spec.separation);
  synth->add_option("--seed", spec.seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) {
      flowgnn::write_synthetic_csv(spec, synth_csv);
      if (!synth_schema.empty()) flowgnn::write_synthetic_schema(spec, synth_schema);
      std::printf("wrote %zu flows to %s\n", spec.flows, synth_csv.c_str());
      return 0;
    }
    for (CLI::App* sub : commands) {
      if (!sub->parsed()) continue;
      if (!checkpoint.empty()) o.checkpoint = checkpoint;
      const auto manifest = flowgnn::RunManifest::load(manifest_path);
      const auto out = flowgnn::run_command(sub->get_name(), manifest, o);
      summarize(sub->get_name(), out);
    }
    return 0;
  } catch (const flowgnn::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
