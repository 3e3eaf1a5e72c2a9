#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "ezag/protocol.hpp"
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

TEST_CASE("options validation") {
  EzagOptions opt;
  CHECK_NOTHROW(opt.validate());
  SUBCASE("window") {
    opt.request_window = 0.0;
    CHECK_THROWS_AS(opt.validate(), ConfigError);
  }
  SUBCASE("slope") {
    opt.request_slope = -0.1;
    CHECK_THROWS_AS(opt.validate(), ConfigError);
  }
  SUBCASE("horizon") {
    opt.horizon = 0.0;
    CHECK_THROWS_AS(opt.validate(), ConfigError);
  }
  SUBCASE("initiator range") {
    opt.initiator = 5;
    CHECK_THROWS_AS(run_ezag(testutil::clique_world(3), kStatic, opt, sharp_medium(), 1),
                    ConfigError);
  }
}

TEST_CASE("full run on a static clique reaches everyone") {
  const int n = 8;
  const TrialStats s = run_ezag(testutil::clique_world(n), kStatic, EzagOptions{},
                                sharp_medium(), 101);
  CHECK(s.protocol == Protocol::Ezag);
  CHECK(s.complete);
  CHECK(s.covered == n);
  CHECK(s.n_nodes == n);
  CHECK(s.has_final_value);
  CHECK(s.final_value == doctest::Approx(n - 1));  // MAX over node ids
  CHECK(count_of(s, MsgKind::AggRequestFlood) == n);
  CHECK(count_of(s, MsgKind::Push) == n);
  CHECK(count_of(s, MsgKind::ResultFlood) == n);
  CHECK(s.completion_time > 0.0);
  CHECK(s.completion_time < 1.0);
  // the push covers the whole clique, so the initiator's first visit finishes
  CHECK(s.transfers == 0);
  REQUIRE(!s.holder_sequence.empty());
  CHECK(s.holder_sequence.front() == 0);
}

TEST_CASE("floods and pushes cost exactly one message per node") {
  // connected static deployments of several sizes
  for (int n : {1, 10, 100}) {
    const World w =
        build_connected_world(WorldConfig::geo_dense(n, 0.011, 3.0, 1000 + n));
    EzagOptions opt;
    const TrialStats s = run_ezag(w, kStatic, opt, sharp_medium(), 55 + n);
    CHECK(count_of(s, MsgKind::AggRequestFlood) == n);
    CHECK(count_of(s, MsgKind::Push) == n);
    CHECK(count_of(s, MsgKind::ResultFlood) == n);
    CHECK(s.complete);
    CHECK(s.covered == n);
  }
}

TEST_CASE("phase stops cut the run after dissemination") {
  const int n = 12;
  SUBCASE("flood only") {
    EzagOptions opt;
    opt.push_enabled = false;
    opt.stop_after = StopAfter::Flood;
    const TrialStats s =
        run_ezag(testutil::clique_world(n), kStatic, opt, sharp_medium(), 7);
    CHECK(count_of(s, MsgKind::AggRequestFlood) == n);
    CHECK(count_of(s, MsgKind::Push) == 0);
    CHECK(count_of(s, MsgKind::TokenAnnounce) == 0);
    CHECK(s.transfers == 0);
  }
  SUBCASE("flood plus push") {
    EzagOptions opt;
    opt.stop_after = StopAfter::Push;
    const TrialStats s =
        run_ezag(testutil::clique_world(n), kStatic, opt, sharp_medium(), 7);
    CHECK(count_of(s, MsgKind::AggRequestFlood) == n);
    CHECK(count_of(s, MsgKind::Push) == n);
    CHECK(count_of(s, MsgKind::TokenAnnounce) == 0);
  }
}

TEST_CASE("aggregate kinds deliver the central answer") {
  const int n = 10;
  EzagOptions opt;
  SUBCASE("min") {
    opt.aggregate = SynopsisKind::Min;
    const TrialStats s =
        run_ezag(testutil::clique_world(n), kStatic, opt, sharp_medium(), 3);
    CHECK(s.final_value == doctest::Approx(0.0));
  }
  SUBCASE("count sketch equals a centrally built one") {
    opt.aggregate = SynopsisKind::CountSketch;
    opt.sketch_registers = 32;
    opt.sketch_seed = 12;
    const TrialStats s =
        run_ezag(testutil::clique_world(n), kStatic, opt, sharp_medium(), 3);
    OdiSynopsis central = OdiSynopsis::make_count(32, 12);
    for (int i = 0; i < n; ++i) central.insert_node(i);
    CHECK(s.has_final_value);
    CHECK(s.final_value == central.estimate_count());
  }
}

TEST_CASE("srrw walks a line and covers it") {
  const int n = 6;
  EzagOptions opt;
  const TrialStats s = run_srrw(testutil::line_world(n, 9.0, 10.0), kStatic, opt,
                                sharp_medium(), 11);
  CHECK(s.protocol == Protocol::Srrw);
  CHECK(s.complete);
  CHECK(s.covered == n);
  CHECK(count_of(s, MsgKind::Push) == 0);
  // every accepted transfer is one visit; the initiator's start is one more
  CHECK(std::accumulate(s.visits.begin(), s.visits.end(), 0) == s.transfers + 1);
  CHECK(static_cast<int64_t>(s.holder_sequence.size()) == s.transfers + 1);
  // walking a 6-line from one end takes at least 5 transfers
  CHECK(s.transfers >= n - 1);
  // consecutive holders are adjacent on the line
  for (size_t i = 1; i < s.holder_sequence.size(); ++i)
    CHECK(std::abs(s.holder_sequence[i] - s.holder_sequence[i - 1]) == 1);
}

TEST_CASE("min-visit selection always picks an argmin requester") {
  EzagOptions opt;
  opt.record_selection_trace = true;
  const World w = build_connected_world(WorldConfig::geo_dense(60, 0.011, 3.0, 2222));
  const TrialStats s = run_srrw(w, kStatic, opt, sharp_medium(), 13);
  CHECK(s.complete);
  REQUIRE(!s.selection_trace.empty());
  for (const auto& [advertised, min_seen] : s.selection_trace)
    CHECK(advertised == min_seen);
}

TEST_CASE("terminate-after-n stops at exactly n transfers") {
  const int n = 6;
  EzagOptions opt;
  opt.mode = RunMode::TerminateAfterN;
  const TrialStats s =
      run_ezag(testutil::clique_world(n), kStatic, opt, sharp_medium(), 17);
  CHECK(s.transfers == n);
  CHECK(s.complete);  // clique push covers everyone on the first visit
  CHECK(s.covered == n);
}

TEST_CASE("max_transfers hook caps the walk") {
  EzagOptions opt;
  opt.max_transfers = 2;
  const TrialStats s =
      run_srrw(testutil::square_world(10.0, 10.0), kStatic, opt, sharp_medium(), 19);
  CHECK(s.transfers == 2);
  CHECK(s.covered == 3);  // self-repelling on a 4-cycle never backtracks here
  CHECK_FALSE(s.complete);
}

TEST_CASE("suppression keeps the request economy lean") {
  EzagOptions opt;
  const TrialStats ez =
      run_ezag(testutil::clique_world(20), kStatic, opt, sharp_medium(), 23);
  const TrialStats pl =
      run_plain_rw(testutil::clique_world(20), kStatic, opt, sharp_medium(), 23);
  // plain disables suppression: every neighbor answers every announce
  CHECK(pl.requests_per_transfer() > 10.0);
  CHECK(ez.transfers == 0);  // push finishes the clique instantly
  const TrialStats sr =
      run_srrw(testutil::clique_world(20), kStatic, opt, sharp_medium(), 23);
  CHECK(sr.requests_per_transfer() < 6.0);
}

TEST_CASE("isolated initiator reports isolation and stops") {
  // two nodes far out of range
  World w = testutil::fixed_world({{10.0, 10.0}, {90.0, 90.0}}, 100.0, 10.0);
  EzagOptions opt;
  opt.horizon = 30.0;
  const TrialStats s = run_ezag(std::move(w), kStatic, opt, sharp_medium(), 29);
  CHECK_FALSE(s.complete);
  CHECK(s.covered == 1);
  CHECK(s.transfers == 0);
  CHECK(s.isolation_events >= 1);
  CHECK(s.completion_time < 30.0);
}

TEST_CASE("single-node world completes immediately") {
  const TrialStats s =
      run_ezag(testutil::clique_world(1), kStatic, EzagOptions{}, sharp_medium(), 31);
  CHECK(s.complete);
  CHECK(s.covered == 1);
  CHECK(s.transfers == 0);
  CHECK(count_of(s, MsgKind::AggRequestFlood) == 1);
  CHECK(s.final_value == doctest::Approx(0.0));
}

TEST_CASE("horizon cuts an unfinished run") {
  EzagOptions opt;
  opt.horizon = 0.005;  // before the token can even start
  const TrialStats s =
      run_ezag(testutil::clique_world(8), kStatic, opt, sharp_medium(), 37);
  CHECK_FALSE(s.complete);
  CHECK(s.completion_time == doctest::Approx(0.005));
}

TEST_CASE("token visits rescue nodes the flood missed") {
  // the second node sits in the gray zone: floods can't decode there, but
  // announces sometimes do, and the transfer unicast is reliable
  World w = testutil::fixed_world({{50.0, 50.0}, {62.0, 50.0}}, 100.0, 10.0);
  MediumConfig medium;
  medium.gray_range_factor = 1.4;
  EzagOptions opt;
  opt.push_enabled = false;
  const TrialStats s = run_ezag(std::move(w), kStatic, opt, medium, 41);
  CHECK(s.complete);
  CHECK(s.covered == 2);
  CHECK(count_of(s, MsgKind::AggRequestFlood) == 1);  // the flood never spread
}

TEST_CASE("runs replay byte-for-byte under one seed") {
  const World w = build_connected_world(WorldConfig::geo_dense(80, 0.011, 3.0, 3333));
  const MobilityConfig mob = MobilityConfig::make(MobilityModel::RandomWaypoint, 6.0);
  MediumConfig medium;
  medium.gray_range_factor = 1.4;
  EzagOptions opt;
  const TrialStats a = run_ezag(w, mob, opt, medium, 43);
  const TrialStats b = run_ezag(w, mob, opt, medium, 43);
  CHECK(a.messages == b.messages);
  CHECK(a.transfers == b.transfers);
  CHECK(a.completion_time == b.completion_time);
  CHECK(a.holder_sequence == b.holder_sequence);
  CHECK(a.final_value == b.final_value);
  const TrialStats c = run_ezag(w, mob, opt, medium, 44);
  CHECK(a.completion_time != c.completion_time);
}

TEST_CASE("push keeps the walk overhead below one on a mid-size world") {
  std::vector<double> overheads;
  for (int t = 0; t < 6; ++t) {
    const World w =
        build_connected_world(WorldConfig::with_mean_degree(150, 0.011, 3.0 * std::log(150.0), 4000 + t));
    const MobilityConfig mob = MobilityConfig::make(MobilityModel::RandomDirection, 9.0);
    MediumConfig medium;
    medium.gray_range_factor = 1.4;
    const TrialStats s = run_ezag(w, mob, EzagOptions{}, medium, 900 + t);
    REQUIRE(s.complete);
    overheads.push_back(static_cast<double>(s.transfers) / s.covered);
  }
  std::sort(overheads.begin(), overheads.end());
  const double median = overheads[overheads.size() / 2];
  CHECK(median > 0.3);
  CHECK(median < 1.1);
}
