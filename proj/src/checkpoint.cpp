#include "flowgnn/checkpoint.hpp"

#include <array>
#include <cstring>
#include <fstream>

#include "flowgnn/error.hpp"

namespace flowgnn {

namespace {

constexpr std::array<char, 8> kMagic{'F', 'G', 'N', 'N', 'C', 'K', 'P', 'T'};
constexpr std::uint64_t kVersion = 1;

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& in, const std::filesystem::path& path) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw Error("checkpoint " + path.string() + " is truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

std::string shape(const ad::Matrix& m) { return std::to_string(m.rows()) + "x" + std::to_string(m.cols()); }

}  // namespace

void save_checkpoint(const std::filesystem::path& path, std::span<ad::Parameter* const> params) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(kMagic.data(), kMagic.size());
    put_u64(out, kVersion);
    put_u64(out, params.size());
    for (const ad::Parameter* p : params) {
      put_u64(out, p->name.size());
      out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
      put_u64(out, static_cast<std::uint64_t>(p->value.rows()));
      put_u64(out, static_cast<std::uint64_t>(p->value.cols()));
      for (Eigen::Index i = 0; i < p->value.size(); ++i) {
        std::uint64_t bits;
        const double v = p->value.data()[i];
        std::memcpy(&bits, &v, sizeof bits);
        put_u64(out, bits);
      }
    }
    if (!out.flush()) throw Error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::vector<NamedMatrix> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (magic != kMagic) throw Error(path.string() + " is not a checkpoint");
  if (get_u64(in, path) != kVersion) throw Error("unsupported checkpoint version in " + path.string());
  const auto count = get_u64(in, path);
  std::vector<NamedMatrix> out;
  for (std::uint64_t k = 0; k < count; ++k) {
    NamedMatrix m;
    const auto len = get_u64(in, path);
    if (len > 4096) throw Error("checkpoint " + path.string() + " is corrupt");
    m.name.resize(len);
    if (!in.read(m.name.data(), static_cast<std::streamsize>(len))) throw Error("checkpoint truncated");
    const auto rows = get_u64(in, path), cols = get_u64(in, path);
    if (rows > (1u << 24) || cols > (1u << 24)) throw Error("checkpoint " + path.string() + " is corrupt");
    m.value.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < m.value.size(); ++i) {
      const std::uint64_t bits = get_u64(in, path);
      std::memcpy(m.value.data() + i, &bits, sizeof bits);
    }
    out.push_back(std::move(m));
  }
  return out;
}

void restore_parameters(std::span<ad::Parameter* const> params, const std::vector<NamedMatrix>& saved) {
  for (ad::Parameter* p : params) {
    const NamedMatrix* match = nullptr;
    for (const auto& s : saved) {
      if (s.name == p->name) match = &s;
    }
    if (match == nullptr) throw ShapeError("checkpoint has no parameter '" + p->name + "' (model expects " + shape(p->value) + ")");
    if (match->value.rows() != p->value.rows() || match->value.cols() != p->value.cols()) {
      throw ShapeError("parameter '" + p->name + "': checkpoint has " + shape(match->value) + ", model config expects " +
                       shape(p->value));
    }
    p->value = match->value;
  }
  if (saved.size() != params.size()) {
    throw ShapeError("checkpoint holds " + std::to_string(saved.size()) + " parameters, model config expects " +
                     std::to_string(params.size()));
  }
}

}  // namespace flowgnn
