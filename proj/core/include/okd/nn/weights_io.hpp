#pragma once

#include <filesystem>
#include <vector>

#include "okd/nn/layers.hpp"

namespace okd::nn {

/// Writes parameters in the OKW1 little-endian format, in the given order.
void write_weights(const std::filesystem::path& path, const std::vector<ParamRef>& params);

/// Loads an OKW1 file into params. Every stored tensor must match the
/// corresponding ParamRef by name and dims; otherwise FormatError/ShapeError.
void read_weights(const std::filesystem::path& path, const std::vector<ParamRef>& params);

}  // namespace okd::nn
