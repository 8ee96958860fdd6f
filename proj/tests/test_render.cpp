#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include "exprec/error.hpp"
#include "exprec/render.hpp"

using namespace exprec;

TEST_CASE("16-bit PGM encoding") {
  const std::vector<double> v{0.0, 0.5, 1.0, 2.0, -1.0, 0.25};
  const auto bytes = encode_pgm(2, 3, v, Window{0.0, 1.0}, "abc");
  const std::string head = "P5\n# config_hash abc\n3 2\n65535\n";
  REQUIRE(bytes.size() == head.size() + 12);
  CHECK(std::string(bytes.begin(), bytes.begin() + std::ptrdiff_t(head.size())) == head);
  const std::uint8_t* px = bytes.data() + head.size();
  auto sample = [&](int i) { return (unsigned(px[2 * i]) << 8) | px[2 * i + 1]; };
  CHECK(sample(0) == 0);
  CHECK(sample(1) == 32768);  // round(0.5 * 65535)
  CHECK(sample(2) == 65535);
  CHECK(sample(3) == 65535);
  CHECK(sample(4) == 0);
  CHECK(sample(5) == 16384);
  CHECK(px[0] == 0x00);
  CHECK(px[2] == 0x80);
}

TEST_CASE("constant map renders to identical pixels") {
  const std::vector<double> v(20, 0.3);
  const auto bytes = encode_pgm(4, 5, v, Window{0.0, 1.0}, "h");
  const std::size_t off = bytes.size() - 40;
  for (std::size_t i = 2; i < 40; i += 2) {
    CHECK(bytes[off + i] == bytes[off]);
    CHECK(bytes[off + i + 1] == bytes[off + 1]);
  }
}

TEST_CASE("PGM argument checks and sidecar") {
  CHECK_THROWS_AS(encode_pgm(2, 2, std::vector<double>(3), Window{}, "h"), Error);
  CHECK_THROWS_AS(encode_pgm(1, 1, std::vector<double>(1), Window{1.0, 1.0}, "h"), Error);
  const auto dir = std::filesystem::temp_directory_path() / "exprec_render_test";
  std::filesystem::create_directories(dir);
  write_pgm(dir / "a.pgm", 1, 2, std::vector<double>{0.0, 1.0}, Window{0.0, 300.0}, "xyz");
  std::ifstream f(dir / "a.pgm.window.txt");
  const std::string side{std::istreambuf_iterator<char>(f), {}};
  CHECK(side == "min 0\nmax 300\nconfig_hash xyz\n");
  std::filesystem::remove_all(dir);
}
