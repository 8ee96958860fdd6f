#include "doctest.h"

#include <cstring>
#include <filesystem>
#include <fstream>

#include "exprec/fft.hpp"
#include "exprec/ktar.hpp"
#include "support.hpp"

using namespace exprec;
using namespace testsupport;

namespace {

std::filesystem::path tmp_file(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "exprec_test_ktcore";
  std::filesystem::create_directories(dir);
  return dir / name;
}

ImageSeries random_series(const Grid& g, std::uint64_t seed) {
  CounterRng rng(seed, 9);
  ImageSeries s(g);
  for (auto& v : s.values()) v = rand_cx(rng);
  return s;
}

std::vector<std::byte> bytes_of(const std::string& s) {
  std::vector<std::byte> b(s.size());
  std::memcpy(b.data(), s.data(), s.size());
  return b;
}

Errc decode_error(const std::vector<std::byte>& b) {
  try {
    ktar::decode(b);
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::internal;
}

}  // namespace

TEST_CASE("grid validation") {
  CHECK_NOTHROW((Grid{1, 1, 2, 1.0}.validate()));
  CHECK_THROWS_AS((Grid{0, 4, 4, 1.0}.validate()), Error);
  CHECK_THROWS_AS((Grid{4, 4, 1, 1.0}.validate()), Error);
  CHECK_THROWS_AS((Grid{4, 4, 4, 0.0}.validate()), Error);
}

TEST_CASE("DFT of a constant frame and of an impulse") {
  const Grid g{4, 4, 2, 1.0};
  ImageSeries c(g);
  for (auto& v : c.values()) v = 1.0;
  const KtVolume k = dft2_forward(c);
  for (int t = 0; t < 2; ++t)
    for (int x = 0; x < 4; ++x)
      for (int y = 0; y < 4; ++y) CHECK(std::abs(k(x, y, t) - (x == 0 && y == 0 ? cx(4.0) : cx(0.0))) < 1e-14);

  ImageSeries d(g);
  d(0, 0, 0) = 1.0;
  const KtVolume kd = dft2_forward(d);
  for (int x = 0; x < 4; ++x)
    for (int y = 0; y < 4; ++y) CHECK(std::abs(kd(x, y, 0) - cx(0.25)) < 1e-15);

  KtVolume four(g);
  four(0, 0, 1) = 4.0;
  const ImageSeries back = dft2_inverse(four);
  for (int x = 0; x < 4; ++x)
    for (int y = 0; y < 4; ++y) CHECK(std::abs(back(x, y, 1) - cx(1.0)) < 1e-14);
}

TEST_CASE("DFT matches the defining sum") {
  const Grid g{5, 3, 2, 1.0};
  const ImageSeries x = random_series(g, 4);
  const KtVolume k = dft2_forward(x);
  const double pi = std::acos(-1.0);
  for (int t = 0; t < g.T; ++t)
    for (int k1 = 0; k1 < g.P; ++k1)
      for (int k2 = 0; k2 < g.Q; ++k2) {
        cx acc = 0.0;
        for (int a = 0; a < g.P; ++a)
          for (int b = 0; b < g.Q; ++b)
            acc += x(a, b, t) * std::polar(1.0, -2.0 * pi * (double(k1 * a) / g.P + double(k2 * b) / g.Q));
        CHECK(std::abs(k(k1, k2, t) - acc / std::sqrt(15.0)) < 1e-12);
      }
}

TEST_CASE("round trip, Parseval and linearity") {
  const Grid g{8, 8, 3, 1.0};
  const ImageSeries x = random_series(g, 1);
  const KtVolume k = dft2_forward(x);
  const ImageSeries y = dft2_inverse(k);
  CHECK(max_abs_diff(x.storage(), y.storage()) <= 1e-12 * max_abs(x.storage()));
  for (int t = 0; t < g.T; ++t) {
    const double ex = sq_norm(x.frame(t)), ek = sq_norm(k.frame(t));
    CHECK(std::abs(ex - ek) <= 1e-12 * ex);
  }
  const KtVolume u = random_volume(g, 2), v = random_volume(g, 3);
  const cx a(0.3, -1.2), b(2.0, 0.5);
  KtVolume w(g);
  for (std::size_t i = 0; i < w.storage().size(); ++i) w.storage()[i] = a * u.storage()[i] + b * v.storage()[i];
  const ImageSeries lw = dft2_inverse(w), lu = dft2_inverse(u), lv = dft2_inverse(v);
  std::vector<cx> comb(lw.storage().size());
  for (std::size_t i = 0; i < comb.size(); ++i) comb[i] = a * lu.storage()[i] + b * lv.storage()[i];
  CHECK(max_abs_diff(lw.storage(), comb) <= 1e-12 * max_abs(comb));
}

TEST_CASE("non-finite input names the first offending index") {
  const Grid g{3, 3, 2, 1.0};
  ImageSeries x(g);
  x(2, 1, 1) = cx(std::nan(""), 0.0);
  try {
    dft2_forward(x);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::non_finite);
    CHECK(std::string(e.what()).find("(x=2, y=1, t=1)") != std::string::npos);
  }
}

TEST_CASE("[P,Q,T] layout conversion") {
  const Grid g{2, 3, 4, 1.0};
  const KtVolume v = random_volume(g, 5);
  const auto pqt = v.to_pqt();
  CHECK(pqt[((1 * 3) + 2) * 4 + 3] == v(1, 2, 3));
  CHECK(KtVolume::from_pqt(g, pqt).storage() == v.storage());
}

TEST_CASE("KTAR c128 2x2 identity round trip is byte identical") {
  const std::vector<cx> vals{1.0, 0.0, 0.0, 1.0};
  const ktar::Array a = ktar::make_complex({2, 2}, vals);
  const auto path = tmp_file("eye.ktar");
  ktar::write(path, a);
  std::ifstream f(path, std::ios::binary);
  std::vector<char> raw((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  const std::string header = R"({"dtype":"c128","shape":[2,2],"order":"row-major"})";
  REQUIRE(raw.size() == 10 + header.size() + 64);
  CHECK(std::string(raw.begin(), raw.begin() + 6) == "KTAR1\n");
  CHECK(std::uint32_t(std::uint8_t(raw[6])) == header.size());
  CHECK(std::string(raw.begin() + 10, raw.begin() + 10 + std::ptrdiff_t(header.size())) == header);
  const ktar::Array b = ktar::read_array(path);
  CHECK(b.header.shape == a.header.shape);
  CHECK(b.payload == a.payload);
  CHECK(b.as_complex() == vals);
}

TEST_CASE("KTAR round trip for every dtype") {
  for (auto dt : {ktar::DType::c64, ktar::DType::c128, ktar::DType::f32, ktar::DType::f64}) {
    ktar::Array a;
    if (ktar::dtype_is_complex(dt)) {
      a = ktar::make_complex({3, 2}, std::vector<cx>{{1, 2}, {3, 4}, {5, 6}, {7, 8}, {9, 10}, {11, 12}}, dt);
    } else {
      a = ktar::make_real({3, 2}, std::vector<double>{1, 2, 3, 4, 5, 6}, dt);
    }
    a.header.config_hash = "abc";
    const auto enc = ktar::encode(a.header, a.payload);
    const ktar::Array b = ktar::decode(enc);
    CHECK(b.header.dtype == dt);
    CHECK(b.header.config_hash == std::optional<std::string>("abc"));
    CHECK(ktar::encode(b.header, b.payload) == enc);
  }
}

TEST_CASE("KTAR error kinds are distinct") {
  const ktar::Array a = ktar::make_complex({4, 4}, std::vector<cx>(16));
  auto good = ktar::encode(a.header, a.payload);

  auto bad = good;
  std::memcpy(bad.data(), "XXXX", 4);
  CHECK(decode_error(bad) == Errc::bad_magic);

  auto truncated = std::vector<std::byte>(good.begin(), good.begin() + 12);
  CHECK(decode_error(truncated) == Errc::truncated);
  CHECK(decode_error(bytes_of("KTAR1")) == Errc::bad_magic);
  CHECK(decode_error(bytes_of("KTAR1\n\x01")) == Errc::truncated);

  // Header says [4,4] but only 15 values follow.
  auto short_payload = std::vector<std::byte>(good.begin(), good.end() - 16);
  CHECK(decode_error(short_payload) == Errc::payload_size_mismatch);
  auto long_payload = good;
  long_payload.resize(good.size() + 8);
  CHECK(decode_error(long_payload) == Errc::payload_size_mismatch);

  ktar::ArrayHeader huge;
  huge.shape = {std::uint64_t{1} << 21, std::uint64_t{1} << 20};
  CHECK_THROWS_AS(huge.element_count(), Error);
}

TEST_CASE("KTAR series helpers keep [P,Q,T] order") {
  const Grid g{3, 2, 4, 2.5};
  const KtVolume v = random_volume(g, 8);
  const ktar::Array a = ktar::from_series(v);
  CHECK(a.header.shape == std::vector<std::uint64_t>{3, 2, 4});
  const KtVolume w = ktar::to_series<KSpaceDomain>(a, g.dt_ms);
  CHECK(w.storage() == v.storage());
}

TEST_CASE("missing file is an io error") {
  try {
    ktar::read_array(tmp_file("does_not_exist.ktar"));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::io);
  }
}
