#pragma once

// KTAR v1 array files:
//   bytes 0-5   magic "KTAR1\n"
//   bytes 6-9   u32 little-endian length L of the JSON header
//   next L      UTF-8 JSON {"dtype":"c128","shape":[...],"order":"row-major"}
//   remainder   little-endian row-major payload, complex values as (re, im)

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "exprec/grid.hpp"

namespace exprec::ktar {

enum class DType { c64, c128, f32, f64 };

const char* dtype_name(DType d);
std::size_t dtype_size(DType d);
bool dtype_is_complex(DType d);

struct ArrayHeader {
  DType dtype = DType::c128;
  std::vector<std::uint64_t> shape;
  std::string order = "row-major";
  /// Written as an extra "config_hash" header key when set.
  std::optional<std::string> config_hash;

  std::uint64_t element_count() const;
  std::string to_json() const;
};

struct Array {
  ArrayHeader header;
  std::vector<std::byte> payload;

  std::vector<cx> as_complex() const;
  std::vector<double> as_real() const;
};

inline constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 40;

Array read_array(const std::filesystem::path& path);
void write_array(const std::filesystem::path& path, const ArrayHeader& header,
                 std::span<const std::byte> payload);

/// Parse from an in-memory image of a file (used by read_array and tests).
Array decode(std::span<const std::byte> bytes);
std::vector<std::byte> encode(const ArrayHeader& header, std::span<const std::byte> payload);

Array make_complex(std::vector<std::uint64_t> shape, std::span<const cx> values,
                   DType dtype = DType::c128);
Array make_real(std::vector<std::uint64_t> shape, std::span<const double> values,
                DType dtype = DType::f64);

void write(const std::filesystem::path& path, const Array& a);

/// Convenience for P x Q x T series stored as [P,Q,T].
template <class Domain>
Array from_series(const Series<Domain>& s) {
  const Grid& g = s.grid();
  auto v = s.to_pqt();
  return make_complex({std::uint64_t(g.P), std::uint64_t(g.Q), std::uint64_t(g.T)}, v);
}

template <class Domain>
Series<Domain> to_series(const Array& a, double dt_ms) {
  const auto& sh = a.header.shape;
  require(sh.size() == 3, Errc::shape_mismatch, "expected a [P,Q,T] array");
  Grid g{int(sh[0]), int(sh[1]), int(sh[2]), dt_ms};
  auto v = a.as_complex();
  return Series<Domain>::from_pqt(g, v);
}

}  // namespace exprec::ktar
