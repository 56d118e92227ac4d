#include <cstdlib>
#include <string>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "varorder/errors.hpp"
#include "varorder/io.hpp"

using testutil::TempDir;
using varorder::UsageError;
namespace io = varorder::io;

namespace {

bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("csv reader: header, rows, CRLF and BOM tolerance") {
  TempDir dir;
  auto path = dir.file("t.csv");
  testutil::spit(path, "\xEF\xBB\xBFx,y\r\n1.5,2\r\n-3,4e-2\n");
  auto csv = io::read_csv(path);
  REQUIRE(csv.header.size() == 2);
  CHECK(csv.header[0] == "x");
  CHECK(csv.header[1] == "y");
  REQUIRE(csv.rows.size() == 2);
  CHECK(csv.rows[0][0] == 1.5);
  CHECK(csv.rows[1][1] == 0.04);
}

TEST_CASE("csv reader: errors carry the row and column") {
  TempDir dir;
  auto bad_cell = dir.file("bad.csv");
  testutil::spit(bad_cell, "a,b\n1,zap\n");
  CHECK_THROWS_WITH_AS(io::read_csv(bad_cell),
                       doctest::Contains("cannot parse 'zap' as a number at row 2, column 2"),
                       UsageError);

  auto missing = dir.file("missing.csv");
  testutil::spit(missing, "a,b\n1,\n");
  CHECK_THROWS_WITH_AS(io::read_csv(missing),
                       doctest::Contains("missing value at row 2, column 2"), UsageError);

  auto ragged = dir.file("ragged.csv");
  testutil::spit(ragged, "a,b\n1,2,3\n");
  CHECK_THROWS_WITH_AS(io::read_csv(ragged), doctest::Contains("row 2 has 3 cells, expected 2"),
                       UsageError);

  auto empty = dir.file("empty.csv");
  testutil::spit(empty, "");
  CHECK_THROWS_WITH_AS(io::read_csv(empty), doctest::Contains("file is empty"), UsageError);

  auto blank_header = dir.file("blank.csv");
  testutil::spit(blank_header, "\n1,2\n");
  CHECK_THROWS_WITH_AS(io::read_csv(blank_header), doctest::Contains("empty header row"),
                       UsageError);
}

TEST_CASE("dataset reader shapes and names") {
  TempDir dir;
  auto path = dir.file("d.csv");
  testutil::spit(path, "left,right\n1,2\n3,4\n5,6\n");
  auto d = io::read_dataset(path, 0.5);
  CHECK(d.n == 3);
  CHECK(d.m == 2);
  CHECK(d.time_step == 0.5);
  CHECK(d.names[1] == "right");
  CHECK(d.at(2, 0) == 5.0);

  auto no_rows = dir.file("h.csv");
  testutil::spit(no_rows, "a,b\n");
  CHECK_THROWS_WITH_AS(io::read_dataset(no_rows, 1.0), doctest::Contains("no data rows"),
                       UsageError);
}

TEST_CASE("doubles survive a text round trip") {
  for (double v : {0.1, -1.0 / 3.0, 1e-308, 123456789.123456789, 2.718281828459045e200, 0.0}) {
    std::string s = io::format_double(v);
    CHECK(std::strtod(s.c_str(), nullptr) == v);
  }
}

TEST_CASE("draws files round trip through disk") {
  varorder::ChainDraws ch;
  std::vector<std::string> names = {"a[1,1,1]", "log_delta[1]", "L[1,1]"};
  for (int t = 0; t < 5; ++t) {
    for (int d = 0; d < 3; ++d) ch.draws.push_back(0.1 * t + 0.01 * d);
    ch.lp.push_back(-1.5 * t);
    ch.divergent.push_back(t == 2 ? 1 : 0);
    ch.treedepth.push_back(t % 4);
    ch.stepsize.push_back(0.3);
  }
  TempDir dir;
  auto path = dir.file("draws.csv");
  io::write_draws_csv(path, ch, names);

  std::string text = testutil::slurp(path);
  // Bracketed names carry commas, so the writer quotes them.
  CHECK(contains(text,
                 "lp__,divergent__,treedepth__,stepsize__,\"a[1,1,1]\",log_delta[1],\"L[1,1]\""));

  auto back = io::read_draws_csv(path, names);
  CHECK(back.draws == ch.draws);
  CHECK(back.lp == ch.lp);
  CHECK(back.divergent == ch.divergent);
  CHECK(back.treedepth == ch.treedepth);

  std::vector<std::string> other = {"a[1,1,1]", "log_delta[1]", "L[2,2]"};
  CHECK_THROWS_WITH_AS(io::read_draws_csv(path, other),
                       doctest::Contains("parameter column mismatch"), UsageError);
  std::vector<std::string> fewer = {"a[1,1,1]"};
  CHECK_THROWS_WITH_AS(io::read_draws_csv(path, fewer), doctest::Contains("expected 5 columns"),
                       UsageError);
}

TEST_CASE("region table with and without positions") {
  TempDir dir;
  auto with_pos = dir.file("r1.csv");
  testutil::spit(with_pos, "name,x,y\nfrontal,0.1,0.9\noccipital,0.5,-0.25\n");
  auto regions = io::read_region_csv(with_pos);
  REQUIRE(regions.size() == 2);
  CHECK(regions[0].name == "frontal");
  CHECK(regions[0].has_pos);
  CHECK(regions[1].y == -0.25);

  auto names_only = dir.file("r2.csv");
  testutil::spit(names_only, "name\nfrontal\noccipital\n");
  auto plain = io::read_region_csv(names_only);
  REQUIRE(plain.size() == 2);
  CHECK(!plain[0].has_pos);

  auto bad_header = dir.file("r3.csv");
  testutil::spit(bad_header, "label,x,y\nfrontal,0,0\n");
  CHECK_THROWS_WITH_AS(io::read_region_csv(bad_header),
                       doctest::Contains("first header column must be 'name'"), UsageError);

  auto no_name = dir.file("r4.csv");
  testutil::spit(no_name, "name,x,y\n,0,0\n");
  CHECK_THROWS_WITH_AS(io::read_region_csv(no_name), doctest::Contains("missing region name"),
                       UsageError);
}

TEST_CASE("influence graph output") {
  std::vector<varorder::GrangerEdge> edges;
  varorder::GrangerEdge e;
  e.lag = 2;
  e.from = 1;
  e.to = 3;
  e.weight = 0.5;
  e.mean = -0.5;
  edges.push_back(e);
  e.lag = 1;
  e.from = 2;
  e.to = 2;
  e.weight = 0.25;
  e.mean = 0.25;
  edges.push_back(e);

  std::string plain = io::granger_dot(edges, 3, {});
  CHECK(contains(plain, "digraph granger"));
  CHECK(contains(plain, "n1 [label=\"y1\"]"));
  CHECK(contains(plain, "n3 [label=\"y3\"]"));
  CHECK(contains(plain, "n1 -> n3"));
  CHECK(contains(plain, "s=2"));
  // Strongest edge gets the fattest pen.
  CHECK(contains(plain, "penwidth=\"4.50\""));

  std::vector<io::RegionInfo> regions(3);
  regions[0] = {"fr\"ont", 0.0, 1.0, true};
  regions[1] = {"mid", 0.5, 0.5, true};
  regions[2] = {"back", 1.0, 0.0, true};
  std::string placed = io::granger_dot(edges, 3, regions);
  CHECK(contains(placed, "label=\"fr\\\"ont\""));
  CHECK(contains(placed, "pos=\"0.000,1.000!\""));

  CHECK_THROWS_WITH_AS(io::granger_dot(edges, 3, std::vector<io::RegionInfo>(2)),
                       doctest::Contains("fewer rows"), UsageError);
}

TEST_CASE("chart generators emit well formed SVG") {
  auto bars = io::svg_bar_chart({0.1, 0.6, 0.3}, {"0", "1", "2"}, "mass by order", 1.0);
  CHECK(contains(bars, "<svg"));
  CHECK(contains(bars, "</svg>"));
  CHECK(contains(bars, "mass by order"));
  CHECK_THROWS_AS(io::svg_bar_chart({0.1}, {"a", "b"}, "t", 1.0), UsageError);

  std::vector<std::pair<std::string, std::vector<double>>> series;
  series.emplace_back("one", std::vector<double>{0.1, 0.2, 0.15, 0.4, 0.3});
  series.emplace_back("two", std::vector<double>{1.1, 0.9, 1.3, 1.0, 1.2});
  auto dens = io::svg_density_chart(series, "posterior stuff");
  CHECK(contains(dens, "<svg"));
  CHECK(contains(dens, "</svg>"));
  CHECK(contains(dens, "posterior stuff"));
  CHECK(contains(dens, "polyline"));
}

TEST_CASE("fingerprint hashing matches the reference vectors") {
  CHECK(io::fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(io::fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(io::fnv1a64("foobar") == 0x85944171f73967e8ULL);
  CHECK(io::hex64(0xcbf29ce484222325ULL) == "cbf29ce484222325");
  CHECK(io::hex64(0x1ULL) == "0000000000000001");
}

}  // TEST_SUITE
