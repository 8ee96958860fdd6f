#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace exprec {

/// Display window: values are mapped linearly from [lo, hi] onto [0, 65535]
/// and clipped.
struct Window {
  double lo = 0.0;
  double hi = 1.0;
};

/// 16-bit binary PGM (P5, big-endian samples) of a row-major rows x cols map.
std::vector<std::uint8_t> encode_pgm(int rows, int cols, std::span<const double> values, Window w,
                                     const std::string& config_hash);

/// Writes `path` and a sidecar `path + ".window.txt"` holding the window.
void write_pgm(const std::filesystem::path& path, int rows, int cols, std::span<const double> values, Window w,
               const std::string& config_hash);

}  // namespace exprec
