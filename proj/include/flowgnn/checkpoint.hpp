#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "flowgnn/autodiff.hpp"

namespace flowgnn {

struct NamedMatrix {
  std::string name;
  ad::Matrix value;
};

// Flat named-matrix container; byte layout in docs/formats.md. The file is
// written to a temporary sibling and renamed into place.
void save_checkpoint(const std::filesystem::path& path, std::span<ad::Parameter* const> params);
std::vector<NamedMatrix> load_checkpoint(const std::filesystem::path& path);

// Copies values by name. Throws ShapeError naming both shapes when a
// dimension differs, or when a parameter is missing from the checkpoint.
void restore_parameters(std::span<ad::Parameter* const> params, const std::vector<NamedMatrix>& saved);

}  // namespace flowgnn
