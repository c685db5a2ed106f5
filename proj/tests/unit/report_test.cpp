#include <doctest.h>

#include <sstream>

#include "elembed/report.hpp"
#include "test_support.hpp"

using namespace elembed;
using elembed::testing::TempDir;
using nlohmann::json;

namespace {

GridResult two_by_two() {
  GridResult g;
  g.terms = {"", "ferromagnet"};
  g.keys = {"", "iron"};
  g.cells = {GridCell{0.5, ""}, GridCell{-0.7999999999999999, ""}, GridCell{std::nullopt, "row: ProviderUnavailable: down"},
             GridCell{1.0 / 3.0, ""}};
  g.metadata.model_id = "mock";
  g.metadata.dataset_name = "fixture";
  g.metadata.strategy = "composition_averaged";
  g.metadata.pooling = "whole_input";
  g.metadata.timestamp = "2026-01-01T00:00:00Z";
  g.metadata.spec_hash = "0123456789abcdef";
  g.metadata.config = json{{"terms", {"", "ferromagnet"}}};
  return g;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST_SUITE("report") {

TEST_CASE("grid CSV has a header plus one line per term") {
  const auto lines = lines_of(grid_to_csv(two_by_two()));
  REQUIRE(lines.size() == 3);
  for (const auto& l : lines) CHECK(split_csv_line(l).size() == 3);
  CHECK(lines[0] == "term,,iron");
  CHECK(lines[1] == ",0.5,-0.7999999999999999");
  CHECK(lines[2] == "ferromagnet,ERR," + format_double(1.0 / 3.0));
}

TEST_CASE("failed cells become error objects in JSON") {
  const json j = grid_to_json(two_by_two());
  CHECK(j["rho"][1][0] == json{{"error", "row: ProviderUnavailable: down"}});
  CHECK(j["rho"][0][1].get<double>() == -0.7999999999999999);
  CHECK(j["metadata"]["model_id"] == "mock");
  CHECK(j["metadata"]["spec_hash"] == "0123456789abcdef");
  CHECK(j["metadata"]["config"]["terms"][1] == "ferromagnet");
}

TEST_CASE("JSON round trip reproduces the matrix exactly") {
  const auto g = two_by_two();
  const auto back = grid_from_json(json::parse(grid_to_json(g).dump()));
  CHECK(back.terms == g.terms);
  CHECK(back.keys == g.keys);
  REQUIRE(back.cells.size() == g.cells.size());
  for (std::size_t i = 0; i < g.cells.size(); ++i) {
    CHECK(back.cells[i].rho == g.cells[i].rho);
    CHECK(back.cells[i].error == g.cells[i].error);
  }
  CHECK(back.metadata.timestamp == g.metadata.timestamp);
  CHECK(grid_to_csv(back) == grid_to_csv(g));
  CHECK_THROWS_AS(grid_from_json(json{{"terms", {"a"}}, {"keys", {"b"}}, {"rho", json::array()}}), Error);
}

TEST_CASE("SVG heat map") {
  const std::string svg = grid_to_svg(two_by_two());
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("(none)") != std::string::npos);
  CHECK(svg.find("ferromagnet") != std::string::npos);
  CHECK(svg.find("ERR") != std::string::npos);
}

TEST_CASE("parity CSV") {
  const auto truth = RankTable::from_ranks({"a", "b", "c"}, {1, 2, 3});
  const auto sim = RankTable::from_ranks({"a", "b", "c"}, {1, 3, 2});
  const auto lines = lines_of(parity_to_csv(make_parity(truth, sim, 3)));
  REQUIRE(lines.size() == 4);
  CHECK(lines[0] == "truth_rank,similarity_rank,bin_count");
  CHECK(lines[1] == "1,1,1");
  CHECK(lines[2] == "2,3,1");
}

TEST_CASE("emit writes the requested formats") {
  TempDir dir;
  const auto written = emit_grid_reports(two_by_two(), {"csv", "json", "svg"}, dir / "nested");
  CHECK(written.size() == 3);
  for (const auto& p : written) CHECK(std::filesystem::exists(p));
  CHECK(elembed::testing::read_file(dir / "nested/grid.csv") == grid_to_csv(two_by_two()));
  CHECK(json::parse(elembed::testing::read_file(dir / "nested/grid.json")) == grid_to_json(two_by_two()));

  elembed::testing::write_file(dir / "blocker", "x");
  try {
    emit_grid_reports(two_by_two(), {"csv"}, dir / "blocker/sub");
    FAIL("expected OutputUnwritable");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::OutputUnwritable);
  }
}

}  // TEST_SUITE
