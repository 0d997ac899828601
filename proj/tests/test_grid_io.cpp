#include <doctest.h>

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <string>

#include "topoattn/error.hpp"
#include "topoattn/grid.hpp"
#include "topoattn/io.hpp"

using namespace topoattn;
namespace fs = std::filesystem;

namespace {

std::vector<std::byte> bytes_of(const std::string& s) {
  std::vector<std::byte> out(s.size());
  std::memcpy(out.data(), s.data(), s.size());
  return out;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "topoattn_grid_io_tests";
  fs::create_directories(dir);
  return dir / name;
}

void write_raw(const fs::path& p, const std::string& contents) {
  std::ofstream(p, std::ios::binary) << contents;
}

std::size_t parse_error_offset(const std::string& contents) {
  try {
    parse_pgm(bytes_of(contents));
  } catch (const ParseError& e) {
    return e.offset();
  }
  return std::numeric_limits<std::size_t>::max();
}

}  // namespace

TEST_SUITE("grid") {
  TEST_CASE("grid validation") {
    CHECK_THROWS_AS(GridMap(0, 1, {}), ValidationError);
    CHECK_THROWS_AS(GridMap(2, 2, {0.f, 0.f, 0.f}), ValidationError);
    CHECK_THROWS_AS(GridMap(1, 1, {std::numeric_limits<float>::quiet_NaN()}), ValidationError);
    CHECK_THROWS_AS(GridMap(1, 1, {std::numeric_limits<float>::infinity()}), ValidationError);
    CHECK_THROWS_AS(LevelMap(1, 1, {256}), ValidationError);
    CHECK_THROWS_AS(LevelMap(1, 1, {-1}), ValidationError);
    CHECK_NOTHROW(LevelMap(1, 1, {65535}, 65535));
  }

  TEST_CASE("quantize endpoints and ties") {
    CHECK(quantize_value(1.0f, 255) == 255);
    CHECK(quantize_value(0.0f, 255) == 0);
    CHECK(quantize_value(0.5f, 255) == 128);  // 127.5 rounds away from zero
    CHECK(quantize_value(0.5f, 1) == 1);
    CHECK_THROWS_AS(quantize_value(1.5f, 255), ValidationError);
    CHECK_THROWS_AS(quantize_value(-0.01f, 255), ValidationError);
    CHECK_THROWS_AS(quantize(GridMap(1, 1, {0.5f}), 0), ValidationError);
  }

  TEST_CASE("quantize is monotone") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<float> unit(0.0f, 1.0f);
    for (Level top : {1, 7, 255, 65535}) {
      for (int i = 0; i < 5000; ++i) {
        float a = unit(rng), b = unit(rng);
        if (a > b) std::swap(a, b);
        CHECK(quantize_value(a, top) <= quantize_value(b, top));
      }
    }
  }

  TEST_CASE("transpose") {
    const GridMap g(3, 2, {1, 2, 3, 4, 5, 6});
    const GridMap t = g.transposed();
    CHECK(t.width() == 2);
    CHECK(t.height() == 3);
    CHECK(t.at(2, 1) == 6.0f);
    CHECK(t.at(0, 1) == 4.0f);
    CHECK(t.transposed() == g);
  }
}

TEST_SUITE("pgm") {
  TEST_CASE("ascii endpoints") {
    const fs::path p = scratch("endpoints.pgm");
    write_raw(p, "P2\n2 1\n255\n0 255\n");
    const GridMap g = load_pgm(p);
    CHECK(g.width() == 2);
    CHECK(g.height() == 1);
    CHECK(g.at(0, 0) == 0.0f);
    CHECK(g.at(0, 1) == 1.0f);
  }

  TEST_CASE("binary samples scale by maxval") {
    const fs::path p = scratch("binary.pgm");
    write_raw(p, std::string("P5\n2 2\n255\n") + '\x0a' + '\x14' + '\x1e' + '\x28');
    const GridMap g = load_pgm(p);
    CHECK(g.values()[0] == static_cast<float>(10.0 / 255.0));
    CHECK(g.values()[1] == static_cast<float>(20.0 / 255.0));
    CHECK(g.values()[2] == static_cast<float>(30.0 / 255.0));
    CHECK(g.values()[3] == static_cast<float>(40.0 / 255.0));
  }

  TEST_CASE("comments and 16-bit samples") {
    const auto img = parse_pgm(bytes_of("P2\n# made by hand\n2 1 # trailing\n65535\n1 65535\n"));
    CHECK(img.maxval == 65535);
    CHECK(img.samples == std::vector<std::uint16_t>{1, 65535});
    const auto wide = parse_pgm(bytes_of(std::string("P5 1 1 1000\n") + '\x03' + '\xe8'));
    CHECK(wide.samples == std::vector<std::uint16_t>{1000});
  }

  TEST_CASE("errors carry byte offsets") {
    CHECK_THROWS_WITH_AS(parse_pgm(bytes_of("P2\n2 1\n0\n0 0\n")), doctest::Contains("invalid maxval"),
                         ParseError);
    CHECK(parse_error_offset("P2\n2 1\n0\n0 0\n") == 7);
    CHECK(parse_error_offset("P7\n2 1\n255\n") == 1);
    CHECK(parse_error_offset("XY") == 0);
    CHECK(parse_error_offset("P2\nx 1\n255\n") == 3);
    CHECK(parse_error_offset("P5\n2 2\n255\nab") == 11);  // truncated raster
    CHECK(parse_error_offset("P2\n2 2\n255\n1 2 3") == 16);
    CHECK(parse_error_offset("P2\n1 1\n9\n10") == 9);  // sample above maxval
    CHECK_THROWS_WITH_AS(parse_pgm(bytes_of("P5\n2 2\n255\nab")), doctest::Contains("truncated"),
                         ParseError);
  }

  TEST_CASE("missing file is an io error") {
    CHECK_THROWS_AS(load_pgm(scratch("does_not_exist.pgm")), IoError);
  }

  TEST_CASE("save then load reproduces levels") {
    std::mt19937_64 rng(3);
    for (Level top : {1, 255, 1000, 65535}) {
      std::uniform_int_distribution<Level> level(0, top);
      std::vector<Level> v(7 * 5);
      for (auto& x : v) x = level(rng);
      const LevelMap levels(7, 5, v, top);
      const fs::path p = scratch("roundtrip.pgm");
      save_pgm(levels, p);
      CHECK(quantize(load_pgm(p), top) == levels);
    }
  }
}

TEST_SUITE("tnsr") {
  TEST_CASE("header layout") {
    const std::string enc = encode_tensor(RawTensor{{2, 3}, {1, 2, 3, 4, 5, 6}});
    CHECK(enc.substr(0, 10) == "TNSR1\n2 2 ");
    CHECK(enc.size() == std::string("TNSR1\n2 2 3\n").size() + 24);
    float first;
    std::memcpy(&first, enc.data() + 12, 4);
    if constexpr (std::endian::native == std::endian::little) CHECK(first == 1.0f);
  }

  TEST_CASE("round trip is bit exact") {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<std::size_t> side(1, 12);
    std::uniform_int_distribution<std::uint32_t> bits;
    const fs::path p = scratch("roundtrip.tnsr");
    for (int trial = 0; trial < 10000; ++trial) {
      const std::size_t w = side(rng), h = side(rng);
      std::vector<float> v(w * h);
      for (auto& x : v) {
        do {
          x = std::bit_cast<float>(bits(rng));
        } while (!std::isfinite(x));
      }
      const GridMap g(w, h, v);
      if (trial % 100 == 0) {
        save_tensor(g, p);
        REQUIRE(load_tensor(p) == g);
      } else {
        const RawTensor back =
            parse_tensor(bytes_of(encode_tensor(RawTensor{{h, w}, {v.begin(), v.end()}})));
        REQUIRE(back.dims == std::vector<std::size_t>{h, w});
        REQUIRE(std::memcmp(back.data.data(), v.data(), v.size() * sizeof(float)) == 0);
      }
    }
  }

  TEST_CASE("format errors") {
    CHECK_THROWS_WITH_AS(parse_tensor(bytes_of("XXXX\n1 1\n")), doctest::Contains("bad magic"),
                         ParseError);
    std::string short_payload = "TNSR1\n2 2 2\n" + std::string(12, '\0');
    CHECK_THROWS_WITH_AS(parse_tensor(bytes_of(short_payload)),
                         doctest::Contains("payload size mismatch"), ParseError);
    CHECK_THROWS_AS(parse_tensor(bytes_of("TNSR1\n2 0 2\n")), ParseError);
    CHECK_THROWS_AS(parse_tensor(bytes_of("TNSR1\n")), ParseError);
  }

  TEST_CASE("feature tensors use three dims") {
    const fs::path p = scratch("feature.tnsr");
    const FeatureTensor f(2, 3, 4, std::vector<double>(24, 0.25));
    save_feature(f, p);
    CHECK(load_feature(p) == f);
    CHECK_THROWS_AS(load_tensor(p), ParseError);
  }
}
