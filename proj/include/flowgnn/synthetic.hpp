#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace flowgnn {

// Seeded synthetic flow generator. Each class draws its informative
// features around its own mean vector; endpoints come from host:port pools.
struct SyntheticSpec {
  std::size_t flows = 2000;
  std::size_t classes = 2;
  double majority_fraction = 0.9;  // share of class 0; the rest split evenly
  std::size_t informative = 10;
  std::size_t noise_features = 0;
  double separation = 2.0;  // |mean difference| per informative feature
  std::size_t src_hosts = 200;
  std::size_t src_ports = 4;
  std::size_t dst_hosts = 50;
  std::size_t dst_ports = 2;
  bool protocol_column = true;  // adds a categorical "proto" column
  std::uint64_t seed = 7;
};

struct SyntheticTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

SyntheticTable generate_synthetic(const SyntheticSpec& spec);
void write_synthetic_csv(const SyntheticSpec& spec, const std::filesystem::path& path);
// Schema file matching the generated CSV.
void write_synthetic_schema(const SyntheticSpec& spec, const std::filesystem::path& path);

}  // namespace flowgnn
