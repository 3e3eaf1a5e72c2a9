#include <algorithm>
#include <vector>

#include "doctest.h"
#include "ezag/tree.hpp"
#include "test_util.hpp"

using namespace ezag;

namespace {

const MobilityConfig kStatic = MobilityConfig::make(MobilityModel::Static, 0.0);

MediumConfig sharp_medium() {
  MediumConfig m;
  m.gray_range_factor = 1.0;
  return m;
}

int64_t count_of(const TrialStats& s, MsgKind k) {
  return s.messages[static_cast<size_t>(k)];
}

}  // namespace

TEST_CASE("tree options validation") {
  TreeOptions opt;
  CHECK_NOTHROW(opt.validate());
  SUBCASE("refresh") {
    opt.refresh_period = 0.0;
    CHECK_THROWS_AS(opt.validate(), ConfigError);
  }
  SUBCASE("retransmit timeout") {
    opt.retx_timeout = 0.0;
    CHECK_THROWS_AS(opt.validate(), ConfigError);
  }
  SUBCASE("horizon") {
    opt.horizon = -1.0;
    CHECK_THROWS_AS(opt.validate(), ConfigError);
  }
}

TEST_CASE("static clique collects every contribution at the root") {
  const int n = 10;
  TreeDebug debug;
  const TrialStats s = run_tree(testutil::clique_world(n), kStatic, TreeOptions{},
                                sharp_medium(), 71, nullptr, &debug);
  CHECK(s.protocol == Protocol::Tree);
  CHECK(s.complete);
  CHECK(s.covered == n);
  CHECK(s.has_final_value);
  CHECK(s.final_value == doctest::Approx(n - 1));
  CHECK(s.completion_time < 1.0);  // well before the first refresh
  // one-hop star: everyone heard the root's single flood directly
  CHECK(count_of(s, MsgKind::TreeRequest) == n);
  REQUIRE(static_cast<int>(debug.parents.size()) == n);
  CHECK(debug.parents[0] == -1);
  for (int i = 1; i < n; ++i) CHECK(debug.parents[i] == 0);
  for (int i = 0; i < n; ++i) CHECK(debug.epochs[i] == 1);
  // each member sends at least one data bundle; every bundle is acked
  CHECK(count_of(s, MsgKind::TreeData) >= n - 1);
  CHECK(count_of(s, MsgKind::TreeAck) == count_of(s, MsgKind::TreeData));
}

TEST_CASE("a two-hop line forms a chain of parents") {
  TreeDebug debug;
  const TrialStats s = run_tree(testutil::line_world(3, 9.0, 10.0), kStatic,
                                TreeOptions{}, sharp_medium(), 73, nullptr, &debug);
  CHECK(s.complete);
  CHECK(debug.parents == std::vector<int>{-1, 0, 1});
  CHECK(count_of(s, MsgKind::TreeRequest) == 3);
}

TEST_CASE("losses delay but do not break completion") {
  const int n = 12;
  MediumConfig clean = sharp_medium();
  MediumConfig lossy = sharp_medium();
  lossy.loss_probability = 0.3;
  TreeDebug clean_dbg, lossy_dbg;
  const TrialStats a =
      run_tree(testutil::clique_world(n), kStatic, TreeOptions{}, clean, 79, nullptr, &clean_dbg);
  const TrialStats b =
      run_tree(testutil::clique_world(n), kStatic, TreeOptions{}, lossy, 79, nullptr, &lossy_dbg);
  CHECK(a.complete);
  CHECK(b.complete);
  CHECK(b.covered == n);
  // retransmissions until ack: lost bundles cost extra sends
  CHECK(count_of(b, MsgKind::TreeData) > count_of(a, MsgKind::TreeData));
  CHECK(lossy_dbg.max_sends_per_bundle > 1);
  CHECK(clean_dbg.max_sends_per_bundle >= 1);
}

TEST_CASE("mobile runs re-home on refresh floods") {
  const World w = build_connected_world(WorldConfig::geo_dense(50, 0.011, 3.0, 5151));
  const MobilityConfig mob = MobilityConfig::make(MobilityModel::RandomDirection, 9.0);
  TreeOptions opt;
  opt.horizon = 120.0;
  TreeDebug debug;
  const TrialStats s = run_tree(w, mob, opt, sharp_medium(), 83, nullptr, &debug);
  CHECK(s.complete);
  CHECK(s.covered == 50);
  CHECK(s.completion_time < 120.0);
  // epochs only ever advance from the root's floods
  const int64_t root_epoch = debug.epochs[0];
  CHECK(root_epoch >= 1);
  for (int64_t e : debug.epochs) CHECK(e <= root_epoch);
}

TEST_CASE("tree runs replay under one seed") {
  const World w = build_connected_world(WorldConfig::geo_dense(40, 0.011, 3.0, 6161));
  const TrialStats a = run_tree(w, kStatic, TreeOptions{}, sharp_medium(), 89);
  const TrialStats b = run_tree(w, kStatic, TreeOptions{}, sharp_medium(), 89);
  CHECK(a.messages == b.messages);
  CHECK(a.completion_time == b.completion_time);
}
