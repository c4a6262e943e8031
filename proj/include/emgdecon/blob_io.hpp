#pragma once

#include <filesystem>
#include <span>
#include <vector>

namespace emgdecon {

// Raw little-endian f64 arrays.
void write_f64_blob(const std::filesystem::path& path, std::span<const double> values);
std::vector<double> read_f64_blob(const std::filesystem::path& path);

}  // namespace emgdecon
