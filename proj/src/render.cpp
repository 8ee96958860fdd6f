#include "exprec/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "exprec/error.hpp"

namespace exprec {
namespace {

void write_file(const std::filesystem::path& path, const void* data, std::size_t n) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  require(bool(f), Errc::io, "cannot open " + path.string() + " for writing");
  f.write(static_cast<const char*>(data), std::streamsize(n));
  require(bool(f), Errc::io, "write failed: " + path.string());
}

}  // namespace

std::vector<std::uint8_t> encode_pgm(int rows, int cols, std::span<const double> values, Window w,
                                     const std::string& config_hash) {
  require(rows > 0 && cols > 0 && values.size() == std::size_t(rows) * cols, Errc::shape_mismatch,
          "PGM dimensions do not match data");
  require(std::isfinite(w.lo) && std::isfinite(w.hi) && w.hi > w.lo, Errc::invalid_argument,
          "PGM window must satisfy lo < hi");
  const std::string head = "P5\n# config_hash " + config_hash + "\n" + std::to_string(cols) + " " +
                           std::to_string(rows) + "\n65535\n";
  std::vector<std::uint8_t> out(head.begin(), head.end());
  out.reserve(out.size() + 2 * values.size());
  for (double v : values) {
    double u = std::isfinite(v) ? (v - w.lo) / (w.hi - w.lo) : 0.0;
    u = std::min(1.0, std::max(0.0, u));
    const auto s = std::uint16_t(std::lround(u * 65535.0));
    out.push_back(std::uint8_t(s >> 8));
    out.push_back(std::uint8_t(s & 0xff));
  }
  return out;
}

void write_pgm(const std::filesystem::path& path, int rows, int cols, std::span<const double> values, Window w,
               const std::string& config_hash) {
  const auto bytes = encode_pgm(rows, cols, values, w, config_hash);
  write_file(path, bytes.data(), bytes.size());
  char buf[128];
  std::snprintf(buf, sizeof buf, "min %.17g\nmax %.17g\n", w.lo, w.hi);
  const std::string side = std::string(buf) + "config_hash " + config_hash + "\n";
  write_file(std::filesystem::path(path.string() + ".window.txt"), side.data(), side.size());
}

}  // namespace exprec
