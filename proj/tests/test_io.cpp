#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>

#include "bendloss/io.hpp"
#include "fixtures.hpp"

using namespace bendloss;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const fs::path dir = fs::temp_directory_path() / "bendloss_io_tests";
  fs::create_directories(dir);
  return dir;
}

void write_bytes(const fs::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void push_u32(std::vector<std::uint8_t>& v, std::uint32_t x) {
  for (int i = 0; i < 4; ++i) v.push_back(static_cast<std::uint8_t>(x >> (8 * i)));
}

}  // namespace

TEST_CASE("lmap fixture built by hand decodes to the expected instances") {
  // 4x4, two 2x2 blocks with ids 1 and 2.
  std::vector<std::uint8_t> bytes{'L', 'M', 'A', 'P'};
  push_u32(bytes, 4);  // height
  push_u32(bytes, 4);  // width
  const std::uint32_t rows[4][4] = {
      {1, 1, 0, 0}, {1, 1, 0, 0}, {0, 0, 2, 2}, {0, 0, 2, 2}};
  for (const auto& row : rows)
    for (std::uint32_t v : row) push_u32(bytes, v);

  const fs::path p = temp_dir() / "two_squares.lmap";
  write_bytes(p, bytes);
  const LabelMap m = read_label_map(p, LabelFormat::lmap);
  const auto inst = instances_of(m);
  REQUIRE(inst.size() == 2);
  CHECK(inst.at(1).size() == 4);
  CHECK(inst.at(2).size() == 4);
}

TEST_CASE("label map round trips through both formats") {
  std::mt19937 rng(3);
  const fs::path dir = temp_dir();
  for (int trial = 0; trial < 25; ++trial) {
    const LabelMap m = fixtures::random_label_map(rng, 24);
    for (const LabelFormat fmt : {LabelFormat::lmap, LabelFormat::png16}) {
      const fs::path p = dir / (fmt == LabelFormat::lmap ? "rt.lmap" : "rt.png");
      write_label_map(m, p, fmt);
      const LabelMap back = read_label_map(p, fmt);
      REQUIRE(back.rows() == m.rows());
      REQUIRE(back.cols() == m.cols());
      CHECK((back == m).all());
    }
  }
}

TEST_CASE("format sniffing picks the right decoder") {
  const fs::path dir = temp_dir();
  LabelMap m = fixtures::blank(3, 5);
  m(1, 2) = 9;
  write_label_map(m, dir / "sniff.lmap", LabelFormat::lmap);
  write_label_map(m, dir / "sniff.png", LabelFormat::png16);
  CHECK((read_label_map(dir / "sniff.lmap") == m).all());
  CHECK((read_label_map(dir / "sniff.png") == m).all());
}

TEST_CASE("png16 writes the full 16-bit id range and rejects overflow") {
  const fs::path p = temp_dir() / "limit.png";
  LabelMap m = fixtures::blank(2, 2);
  m(0, 0) = 65535;
  write_label_map(m, p, LabelFormat::png16);
  CHECK(read_label_map(p, LabelFormat::png16)(0, 0) == 65535);

  m(0, 0) = 65536;
  CHECK_THROWS_AS(write_label_map(m, p, LabelFormat::png16), std::overflow_error);
  write_label_map(m, temp_dir() / "limit.lmap", LabelFormat::lmap);  // lmap has no ceiling
}

TEST_CASE("all-zero 4x4 png16 decodes to 16 background pixels") {
  const fs::path p = temp_dir() / "zeros.png";
  write_label_map(fixtures::blank(4, 4), p, LabelFormat::png16);
  const LabelMap m = read_label_map(p, LabelFormat::png16);
  CHECK(m.rows() == 4);
  CHECK(m.cols() == 4);
  CHECK((m == 0u).all());
}

TEST_CASE("lmap errors carry byte offsets") {
  const fs::path dir = temp_dir();

  write_bytes(dir / "badmagic.lmap", {'L', 'M', 'A', 'X', 0, 0, 0, 0});
  try {
    read_label_map(dir / "badmagic.lmap", LabelFormat::lmap);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.offset() == 0);
  }

  std::vector<std::uint8_t> truncated{'L', 'M', 'A', 'P'};
  push_u32(truncated, 2);
  push_u32(truncated, 2);
  push_u32(truncated, 1);  // only 1 of 4 payload words
  write_bytes(dir / "trunc.lmap", truncated);
  try {
    read_label_map(dir / "trunc.lmap", LabelFormat::lmap);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.offset() == 16);
  }

  std::vector<std::uint8_t> zero_dim{'L', 'M', 'A', 'P'};
  push_u32(zero_dim, 0);
  push_u32(zero_dim, 4);
  write_bytes(dir / "zerodim.lmap", zero_dim);
  CHECK_THROWS_AS(read_label_map(dir / "zerodim.lmap", LabelFormat::lmap), std::invalid_argument);
}

TEST_CASE("png16 rejects non-png bytes at offset zero") {
  const fs::path p = temp_dir() / "notpng.png";
  write_bytes(p, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  try {
    read_label_map(p, LabelFormat::png16);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.offset() == 0);
  }
}

TEST_CASE("fmap round trip is bit-exact, including exact fractions") {
  const fs::path p = temp_dir() / "roundtrip.fmap";
  FloatMap m = fixtures::constant_map(2, 2, 0.0f);
  m(0, 1) = 1.5f;  // power-of-two fraction encodes exactly
  m(1, 0) = -0.25f;
  write_float_map(m, p);
  const FloatMap back = read_float_map(p);
  CHECK((back == m).all());
  CHECK(fs::file_size(p) == 4 + 12 + 16);  // magic + dims/channels + payload
}

TEST_CASE("fmap pair round trips with channel order preserved") {
  const fs::path p = temp_dir() / "pair.fmap";
  std::mt19937 rng(5);
  FloatMapPair pair{fixtures::uniform_float_map(rng, 6, 4), fixtures::uniform_float_map(rng, 6, 4)};
  write_float_map_pair(pair, p);
  const FloatMapPair back = read_float_map_pair(p);
  CHECK((back.horizontal == pair.horizontal).all());
  CHECK((back.vertical == pair.vertical).all());
}

TEST_CASE("fmap rejects bad magic, truncation and NaN payloads") {
  const fs::path dir = temp_dir();

  write_bytes(dir / "bad.fmap", {'F', 'M', 'A', 'X', 0, 0, 0, 0});
  CHECK_THROWS_AS(read_float_map(dir / "bad.fmap"), FormatError);

  std::vector<std::uint8_t> truncated{'F', 'M', 'A', 'P'};
  push_u32(truncated, 2);
  push_u32(truncated, 2);
  push_u32(truncated, 1);
  push_u32(truncated, 0x3F800000);  // just one float
  write_bytes(dir / "trunc.fmap", truncated);
  CHECK_THROWS_AS(read_float_map(dir / "trunc.fmap"), FormatError);

  std::vector<std::uint8_t> nan_payload{'F', 'M', 'A', 'P'};
  push_u32(nan_payload, 1);
  push_u32(nan_payload, 1);
  push_u32(nan_payload, 1);
  push_u32(nan_payload, 0x7FC00000);  // quiet NaN
  write_bytes(dir / "nan.fmap", nan_payload);
  CHECK_THROWS_AS(read_float_map(dir / "nan.fmap"), FormatError);
}

TEST_CASE("writing a NaN map is rejected before any file is produced") {
  FloatMap m = fixtures::constant_map(2, 2, 0.0f);
  m(0, 0) = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_AS(write_float_map(m, temp_dir() / "never.fmap"), std::invalid_argument);
}
