#include <atomic>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "fpp/io.hpp"
#include "fpp/parallel.hpp"

using namespace fpp;

TEST_CASE("format_double round trips") {
  for (double v : {0.1, 1.0 / 3.0, 12345.6789, 1e-12, 0.0, 2e17}) {
    CHECK(std::stod(format_double(v)) == v);
  }
}

TEST_CASE("csv output is deterministic and parseable") {
  std::vector<std::vector<double>> rows{{1, 0.5}, {2, 0.25}};
  auto s = csv_string({"n", "x"}, rows);
  CHECK(s == csv_string({"n", "x"}, rows));
  CHECK(s.substr(0, 4) == "n,x\n");
  CHECK(s.find("1,0.5\n") != std::string::npos);
}

TEST_CASE("verdict JSON") {
  std::vector<Verdict> vs{{"alpha", 1.5, 2.0, true}, {"beta", 3.0, 2.0, false}};
  CHECK(!all_pass(vs));
  auto j = verdicts_json(vs);
  CHECK(j.find("\"alpha\"") != std::string::npos);
  CHECK(j.find("\"all_pass\": false") != std::string::npos);
  CHECK(all_pass({vs[0]}));
}

TEST_CASE("svg plot embeds the series") {
  PlotSeries s{"demo", {{0, 0}, {1, 1}, {2, 0.5}}};
  auto svg = svg_line_plot({s}, "title");
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("polyline") != std::string::npos);
  CHECK(svg.find("demo") != std::string::npos);
}

TEST_CASE("text files round trip") {
  const char* path = "io_test_tmp.txt";
  write_text_file(path, "hello\n1,2,3\n");
  std::ifstream in(path);
  std::string a, b;
  std::getline(in, a);
  std::getline(in, b);
  CHECK(a == "hello");
  CHECK(b == "1,2,3");
  std::remove(path);
}

TEST_CASE("parallel_for covers every index exactly once") {
  const std::size_t n = 10'000;
  std::vector<std::atomic<int>> hits(n);
  parallel_for(n, [&](std::size_t i) { hits[i].fetch_add(1); });
  for (std::size_t i = 0; i < n; ++i) CHECK(hits[i].load() == 1);
}
