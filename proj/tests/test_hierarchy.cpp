#include <sstream>
#include <string>

#include "doctest.h"
#include "ezag/harness.hpp"
#include "ezag/hierarchy.hpp"
#include "ezag/world.hpp"

using namespace ezag;

namespace {

int field_count(const std::string& line) {
  int commas = 0;
  for (char c : line)
    if (c == ',') ++commas;
  return commas + 1;
}

}  // namespace

TEST_CASE("hierarchy config validation") {
  HierarchyConfig cfg;
  CHECK_NOTHROW(cfg.validate(256));

  SUBCASE("delta must be positive") {
    cfg.delta = 0;
    CHECK_THROWS_AS(cfg.validate(256), ConfigError);
  }
  SUBCASE("refresh cycles must be positive") {
    cfg.refresh_cycles = 0;
    CHECK_THROWS_AS(cfg.validate(256), ConfigError);
  }
  SUBCASE("refresh base must be positive") {
    cfg.refresh_base = 0.0;
    CHECK_THROWS_AS(cfg.validate(256), ConfigError);
  }
  SUBCASE("pinned level count must roughly cover the deployment") {
    cfg.levels = 6;  // 4^5 * 16 cells for 64 nodes is nonsense
    CHECK_THROWS_AS(cfg.validate(64), ConfigError);
  }
  SUBCASE("walk options are validated too") {
    cfg.walk.horizon = -1.0;
    CHECK_THROWS_AS(cfg.validate(256), ConfigError);
  }
}

TEST_CASE("derived level count follows quarter splits down to delta") {
  HierarchyConfig cfg;
  cfg.delta = 16;
  CHECK(cfg.derived_levels(16) == 1);
  CHECK(cfg.derived_levels(100) == 2);
  CHECK(cfg.derived_levels(256) == 3);
  CHECK(cfg.derived_levels(1024) == 4);
}

TEST_CASE("static hierarchy run completes with per-level accounting") {
  auto s = run_hier_trial(256, 16, 0.011, 1.4, MobilityModel::Static, 0.0, 1, 0.0, 777);

  CHECK(s.complete);
  CHECK(s.n_nodes == 256);
  CHECK(s.delta == 16);
  CHECK(s.levels == 3);
  CHECK(s.level.size() == 3);
  CHECK(s.completion_time > 0.0);

  // Message conservation: per-level sums equal the global counters exactly.
  int64_t level_sum = 0;
  for (const auto& L : s.level) level_sum += L.messages;
  CHECK(s.total_messages == level_sum);
  CHECK(s.total_messages == total_messages(s.messages));

  int prev_cells = 1 << 30;
  double prev_completion = 0.0;
  for (int j = 0; j < 3; ++j) {
    const auto& L = s.level[j];
    CHECK(L.level == j);
    CHECK(L.cells >= 1);
    CHECK(L.cells <= prev_cells);
    prev_cells = L.cells;
    int populated = L.cells - L.empty_cells;
    CHECK(populated >= 1);
    CHECK(L.stranded == 0);  // static nodes cannot leave their cell
    CHECK(L.per_cell_transfers.size() == static_cast<size_t>(populated));
    CHECK(L.per_cell_completion.size() == static_cast<size_t>(populated));
    CHECK(L.messages > 0);
    CHECK(L.transfers >= populated);  // each instance moves the token at least once
    CHECK(L.median_transfers_per_cell > 0.0);
    CHECK(L.median_completion > prev_completion);  // coarser cells take longer
    prev_completion = L.median_completion;
  }

  // Expected populations quadruple per level, so one top instance spans all.
  CHECK(s.level[2].cells - s.level[2].empty_cells == 1);
  // Level-0 instances finish well ahead of level-1 ones.
  CHECK(s.level[1].median_completion / s.level[0].median_completion > 1.5);
}

TEST_CASE("level-0 cells are cliques so the walk never revisits") {
  auto s = run_hier_trial(256, 16, 0.011, 1.4, MobilityModel::Static, 0.0, 1, 0.0, 31);
  REQUIRE(s.complete);
  const auto& L0 = s.level[0];
  // A min-visit walk on a complete graph covers m members in m-1 transfers.
  int64_t members_seen = 0;
  for (int64_t t : L0.per_cell_transfers) members_seen += t + 1;
  CHECK(members_seen == 256);
}

TEST_CASE("extra refresh cycles rerun every instance") {
  auto once = run_hier_trial(256, 16, 0.011, 1.4, MobilityModel::Static, 0.0, 1, 0.0, 777);
  auto twice = run_hier_trial(256, 16, 0.011, 1.4, MobilityModel::Static, 0.0, 2, 0.0, 777);
  CHECK(twice.complete);
  CHECK(twice.total_messages > once.total_messages);
  CHECK(twice.completion_time > once.completion_time);
}

TEST_CASE("direct run carries config into the stats header") {
  World w = make_hier_world(100, 16, 0.011, 4242);
  HierarchyConfig hc;
  hc.delta = 16;
  MediumConfig med;
  med.gray_range_factor = 1.4;
  auto s = run_hier(w, MobilityConfig::make(MobilityModel::Static, 0.0), hc, med, 99);
  CHECK(s.seed == 99);
  CHECK(s.n_nodes == 100);
  CHECK(s.delta == 16);
  CHECK(s.levels == 2);
  CHECK(s.mobility == MobilityModel::Static);
  CHECK(s.speed == 0.0);
  CHECK(s.complete);
}

TEST_CASE("hier csv rows match the header shape") {
  auto s = run_hier_trial(256, 16, 0.011, 1.4, MobilityModel::Static, 0.0, 1, 0.0, 777);
  const std::string header = hier_csv_header();
  const std::string rows = hier_csv_rows(s);

  std::istringstream in(rows);
  std::string line;
  int n_rows = 0;
  while (std::getline(in, line)) {
    REQUIRE(field_count(line) == field_count(header));
    CHECK(line.rfind("777,256,16," + std::to_string(n_rows) + ",", 0) == 0);
    ++n_rows;
  }
  CHECK(n_rows == 3);
}

TEST_CASE("hierarchy runs replay exactly by seed") {
  auto a = run_hier_trial(100, 16, 0.011, 1.4, MobilityModel::Static, 0.0, 1, 0.0, 5);
  auto b = run_hier_trial(100, 16, 0.011, 1.4, MobilityModel::Static, 0.0, 1, 0.0, 5);
  auto c = run_hier_trial(100, 16, 0.011, 1.4, MobilityModel::Static, 0.0, 1, 0.0, 6);
  CHECK(hier_csv_rows(a) == hier_csv_rows(b));
  CHECK(a.total_messages == b.total_messages);
  CHECK(a.completion_time == b.completion_time);
  CHECK(hier_csv_rows(a) != hier_csv_rows(c));
}
