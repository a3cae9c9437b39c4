#include <catch_amalgamated.hpp>

#include <bit>
#include <cmath>
#include <filesystem>
#include <limits>
#include <random>

#include "npulse/error.hpp"
#include "npulse/io.hpp"

using namespace npulse;

TEST_CASE("doubles round-trip bit for bit", "[io]") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 100000; ++i) {
    double x = std::bit_cast<double>(rng());
    if (!std::isfinite(x)) continue;
    const double y = parse_double(format_double(x));
    REQUIRE(std::bit_cast<std::uint64_t>(y) == std::bit_cast<std::uint64_t>(x));
  }
  for (double x : {0.0, -0.0, 1.0, 0.1, 1e-300, 5e-324, std::numeric_limits<double>::max(), -2.5e-17})
    CHECK(std::bit_cast<std::uint64_t>(parse_double(format_double(x))) == std::bit_cast<std::uint64_t>(x));
  CHECK(format_double(0.1) == "0.1");
  CHECK(std::isnan(parse_double(format_double(std::nan("")))));
  CHECK(parse_double(format_double(-INFINITY)) == -INFINITY);
  CHECK(parse_double(" +2.5 ") == 2.5);
}

TEST_CASE("parse_double rejects malformed text", "[io]") {
  for (const char* s : {"", "abc", "1.0x", "1,5", "--1"}) CHECK_THROWS_AS(parse_double(s), FormatError);
}

TEST_CASE("fnv1a known vectors", "[io]") {
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a("foobar") == 0x85944171f73967e8ULL);
  CHECK(hex64(0xabcULL) == "0000000000000abc");
  CHECK(hex64(fnv1a("foobar")) == "85944171f73967e8");
}

TEST_CASE("csv tables keep metadata and values", "[io]") {
  CsvTable t;
  t.meta = {{"tool", "npulse"}, {"config", "{\"a\":1}"}};
  t.header = {"t", "x"};
  t.rows = {{0.0, 1.0 / 3.0}, {1e-9, -7.25}};
  const auto back = parse_csv(to_csv(t));
  CHECK(back.meta == t.meta);
  CHECK(back.header == t.header);
  CHECK(back.rows == t.rows);
  CHECK(back.meta_value("config") == "{\"a\":1}");
  CHECK(back.meta_value("absent").empty());
  CHECK(back.column("x") == 1);
  CHECK_THROWS_AS(back.column("y"), FormatError);

  const auto path = std::filesystem::temp_directory_path() / "npulse_test_io.csv";
  write_csv(path, t);
  CHECK(read_csv(path).rows == t.rows);
  std::filesystem::remove(path);
}

TEST_CASE("csv errors name the line", "[io]") {
  CHECK_THROWS_AS(parse_csv("# only: meta\n"), FormatError);
  try {
    parse_csv("a,b\n1,2\n3\n");
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_csv("a\nnope\n"), FormatError);
  CHECK_THROWS_AS(read_text("/nonexistent/npulse/file"), FormatError);
}
