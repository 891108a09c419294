#include "flowgnn/synthetic.hpp"

#include <cstdio>
#include <fstream>
#include <random>
#include <stdexcept>

#include "flowgnn/error.hpp"
#include "flowgnn/rng.hpp"

namespace flowgnn {

namespace {

std::string host(const char* prefix, std::size_t i) {
  return std::string(prefix) + std::to_string(i / 256) + "." + std::to_string(i % 256);
}

std::string class_name(std::size_t k) { return k == 0 ? "Normal" : "Attack" + std::to_string(k); }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

SyntheticTable generate_synthetic(const SyntheticSpec& spec) {
  if (spec.classes < 2) throw ConfigError("synthetic data needs at least 2 classes");
  if (spec.flows < 10) throw ConfigError("synthetic data needs at least 10 flows");
  if (spec.majority_fraction <= 0.0 || spec.majority_fraction >= 1.0) {
    throw ConfigError("majority_fraction must lie in (0, 1)");
  }
  if (spec.informative == 0 || spec.src_hosts == 0 || spec.dst_hosts == 0 || spec.src_ports == 0 ||
      spec.dst_ports == 0) {
    throw ConfigError("synthetic pools and informative feature count must be positive");
  }

  SyntheticTable t;
  t.header = {"src_ip", "src_port", "dst_ip", "dst_port"};
  for (std::size_t j = 0; j < spec.informative; ++j) t.header.push_back("f" + std::to_string(j));
  for (std::size_t j = 0; j < spec.noise_features; ++j) t.header.push_back("n" + std::to_string(j));
  if (spec.protocol_column) t.header.push_back("proto");
  t.header.push_back("label");

  // Class k's mean on feature j is separation * bit (j mod bits) of k.
  std::size_t bits = 1;
  while ((std::size_t{1} << bits) < spec.classes) ++bits;

  // Exact class counts: majority first, remainder split evenly.
  const auto majority = static_cast<std::size_t>(std::llround(spec.majority_fraction * static_cast<double>(spec.flows)));
  std::vector<std::size_t> labels(spec.flows, 0);
  for (std::size_t i = majority; i < spec.flows; ++i) labels[i] = 1 + (i - majority) % (spec.classes - 1);

  Rng rng = make_rng(spec.seed);
  std::shuffle(labels.begin(), labels.end(), rng);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> src_host(0, spec.src_hosts - 1), src_port(0, spec.src_ports - 1);
  std::uniform_int_distribution<std::size_t> dst_host(0, spec.dst_hosts - 1), dst_port(0, spec.dst_ports - 1);
  const char* protocols[] = {"tcp", "udp", "icmp"};
  std::uniform_int_distribution<int> proto(0, 2);

  for (std::size_t i = 0; i < spec.flows; ++i) {
    const std::size_t k = labels[i];
    std::vector<std::string> row;
    row.push_back(host("10.0.", src_host(rng)));
    row.push_back(std::to_string(40000 + src_port(rng)));
    row.push_back(host("192.168.", dst_host(rng)));
    row.push_back(std::to_string(80 + dst_port(rng)));
    for (std::size_t j = 0; j < spec.informative; ++j) {
      const double mean = spec.separation * static_cast<double>((k >> (j % bits)) & 1u);
      row.push_back(fmt(mean + noise(rng)));
    }
    for (std::size_t j = 0; j < spec.noise_features; ++j) row.push_back(fmt(noise(rng)));
    if (spec.protocol_column) row.emplace_back(protocols[proto(rng)]);
    row.push_back(class_name(k));
    t.rows.push_back(std::move(row));
  }
  return t;
}

void write_synthetic_csv(const SyntheticSpec& spec, const std::filesystem::path& path) {
  const auto t = generate_synthetic(spec);
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << '\n';
  };
  line(t.header);
  for (const auto& r : t.rows) line(r);
  if (!out) throw Error("failed writing " + path.string());
}

void write_synthetic_schema(const SyntheticSpec& spec, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "src_ip = src_ip\nsrc_port = src_port\ndst_ip = dst_ip\ndst_port = dst_port\nlabel = label\n";
  out << "normal_label = Normal\n";
  if (spec.protocol_column) out << "categorical = proto\n";
}

}  // namespace flowgnn
