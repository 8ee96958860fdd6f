#include "exprec/ktar.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace exprec::ktar {
namespace {

constexpr std::array<char, 6> kMagic = {'K', 'T', 'A', 'R', '1', '\n'};

static_assert(std::endian::native == std::endian::little,
              "KTAR payloads are little-endian; add byte swapping for this target");

DType parse_dtype(const std::string& s) {
  if (s == "c64") return DType::c64;
  if (s == "c128") return DType::c128;
  if (s == "f32") return DType::f32;
  if (s == "f64") return DType::f64;
  fail(Errc::invalid_argument, "unknown dtype '" + s + "'");
}

template <class T>
void put(std::vector<std::byte>& out, std::size_t at, T v) {
  std::memcpy(out.data() + at * sizeof(T), &v, sizeof(T));
}

template <class T>
T get(std::span<const std::byte> in, std::size_t at) {
  T v;
  std::memcpy(&v, in.data() + at * sizeof(T), sizeof(T));
  return v;
}

}  // namespace

const char* dtype_name(DType d) {
  switch (d) {
    case DType::c64: return "c64";
    case DType::c128: return "c128";
    case DType::f32: return "f32";
    case DType::f64: return "f64";
  }
  return "?";
}

std::size_t dtype_size(DType d) {
  switch (d) {
    case DType::c64: return 8;
    case DType::c128: return 16;
    case DType::f32: return 4;
    case DType::f64: return 8;
  }
  return 0;
}

bool dtype_is_complex(DType d) { return d == DType::c64 || d == DType::c128; }

std::uint64_t ArrayHeader::element_count() const {
  std::uint64_t n = 1;
  for (auto s : shape) {
    if (s != 0 && n > kMaxElements / s) fail(Errc::size_guard, "array exceeds 2^40 elements");
    n *= s;
  }
  require(n <= kMaxElements, Errc::size_guard, "array exceeds 2^40 elements");
  return n;
}

std::string ArrayHeader::to_json() const {
  nlohmann::ordered_json j;
  j["dtype"] = dtype_name(dtype);
  j["shape"] = shape;
  j["order"] = order;
  if (config_hash) j["config_hash"] = *config_hash;
  return j.dump();
}

std::vector<std::byte> encode(const ArrayHeader& header, std::span<const std::byte> payload) {
  require(header.order == "row-major", Errc::invalid_argument, "only row-major order is supported");
  const std::uint64_t expect = header.element_count() * dtype_size(header.dtype);
  require(payload.size() == expect, Errc::payload_size_mismatch,
          "payload size mismatch: header implies " + std::to_string(expect) + " bytes, got " +
              std::to_string(payload.size()));
  const std::string text = header.to_json();
  const auto len = static_cast<std::uint32_t>(text.size());
  std::vector<std::byte> out(kMagic.size() + 4 + text.size() + payload.size());
  std::memcpy(out.data(), kMagic.data(), kMagic.size());
  std::memcpy(out.data() + 6, &len, 4);
  std::memcpy(out.data() + 10, text.data(), text.size());
  if (!payload.empty()) std::memcpy(out.data() + 10 + text.size(), payload.data(), payload.size());
  return out;
}

Array decode(std::span<const std::byte> bytes) {
  if (bytes.size() < kMagic.size() || std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0)
    fail(Errc::bad_magic, "bad magic: not a KTAR1 file");
  require(bytes.size() >= 10, Errc::truncated, "truncated: missing header length");
  std::uint32_t len = 0;
  std::memcpy(&len, bytes.data() + 6, 4);
  require(bytes.size() >= 10 + std::size_t{len}, Errc::truncated, "truncated: header cut short");

  const std::string text(reinterpret_cast<const char*>(bytes.data() + 10), len);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::invalid_argument, std::string("malformed KTAR header: ") + e.what());
  }
  Array a;
  try {
    a.header.dtype = parse_dtype(j.at("dtype").get<std::string>());
    a.header.shape = j.at("shape").get<std::vector<std::uint64_t>>();
    a.header.order = j.at("order").get<std::string>();
    if (j.contains("config_hash")) a.header.config_hash = j.at("config_hash").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::invalid_argument, std::string("malformed KTAR header: ") + e.what());
  }
  require(a.header.order == "row-major", Errc::invalid_argument, "unsupported order " + a.header.order);

  const std::uint64_t expect = a.header.element_count() * dtype_size(a.header.dtype);
  const std::size_t have = bytes.size() - 10 - len;
  require(have == expect, Errc::payload_size_mismatch,
          "payload size mismatch: header implies " + std::to_string(expect) + " bytes, file has " +
              std::to_string(have));
  a.payload.assign(bytes.begin() + 10 + len, bytes.end());
  return a;
}

Array read_array(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(bool(in), Errc::io, "cannot open " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode(std::as_bytes(std::span(raw)));
}

void write_array(const std::filesystem::path& path, const ArrayHeader& header,
                 std::span<const std::byte> payload) {
  auto bytes = encode(header, payload);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(bool(out), Errc::io, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  require(bool(out), Errc::io, "write failed for " + path.string());
}

void write(const std::filesystem::path& path, const Array& a) { write_array(path, a.header, a.payload); }

std::vector<cx> Array::as_complex() const {
  const std::size_t n = header.element_count();
  std::vector<cx> v(n);
  switch (header.dtype) {
    case DType::c128:
      for (std::size_t i = 0; i < n; ++i) v[i] = {get<double>(payload, 2 * i), get<double>(payload, 2 * i + 1)};
      break;
    case DType::c64:
      for (std::size_t i = 0; i < n; ++i) v[i] = {get<float>(payload, 2 * i), get<float>(payload, 2 * i + 1)};
      break;
    case DType::f64:
      for (std::size_t i = 0; i < n; ++i) v[i] = get<double>(payload, i);
      break;
    case DType::f32:
      for (std::size_t i = 0; i < n; ++i) v[i] = get<float>(payload, i);
      break;
  }
  return v;
}

std::vector<double> Array::as_real() const {
  require(!dtype_is_complex(header.dtype), Errc::invalid_argument, "array is complex");
  const std::size_t n = header.element_count();
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i)
    v[i] = header.dtype == DType::f64 ? get<double>(payload, i) : get<float>(payload, i);
  return v;
}

Array make_complex(std::vector<std::uint64_t> shape, std::span<const cx> values, DType dtype) {
  require(dtype_is_complex(dtype), Errc::invalid_argument, "make_complex needs a complex dtype");
  Array a;
  a.header.dtype = dtype;
  a.header.shape = std::move(shape);
  require(a.header.element_count() == values.size(), Errc::shape_mismatch, "values do not match shape");
  a.payload.resize(values.size() * dtype_size(dtype));
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (dtype == DType::c128) {
      put(a.payload, 2 * i, values[i].real());
      put(a.payload, 2 * i + 1, values[i].imag());
    } else {
      put(a.payload, 2 * i, static_cast<float>(values[i].real()));
      put(a.payload, 2 * i + 1, static_cast<float>(values[i].imag()));
    }
  }
  return a;
}

Array make_real(std::vector<std::uint64_t> shape, std::span<const double> values, DType dtype) {
  require(!dtype_is_complex(dtype), Errc::invalid_argument, "make_real needs a real dtype");
  Array a;
  a.header.dtype = dtype;
  a.header.shape = std::move(shape);
  require(a.header.element_count() == values.size(), Errc::shape_mismatch, "values do not match shape");
  a.payload.resize(values.size() * dtype_size(dtype));
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (dtype == DType::f64)
      put(a.payload, i, values[i]);
    else
      put(a.payload, i, static_cast<float>(values[i]));
  }
  return a;
}

}  // namespace exprec::ktar
