#include <cmath>
#include <vector>

#include "doctest.h"
#include "ezag/netsim.hpp"
#include "test_util.hpp"

using namespace ezag;

namespace {

// Sender at index 0 plus receivers at the given distances along +x.
World radial_world(const std::vector<double>& distances, double range) {
  double maxd = 0.0;
  for (double d : distances) maxd = std::max(maxd, d);
  const double side = 4.0 * std::max(range, maxd);
  std::vector<Vec2> pos{{side / 2.0, side / 2.0}};
  for (double d : distances) pos.push_back(pos[0] + Vec2(d, 0.0));
  return testutil::fixed_world(std::move(pos), side, range);
}

struct Bench {
  World world;
  EventQueue queue;
  Rng rng{99};
  MessageCounts counts{};
  EventLog log;
  Medium medium;

  Bench(World w, const MediumConfig& cfg)
      : world(std::move(w)), medium(cfg, &world, &queue, &rng, &counts, &log) {}

  std::vector<Event> drain() {
    std::vector<Event> out;
    while (!queue.empty()) out.push_back(queue.pop());
    return out;
  }
};

}  // namespace

TEST_CASE("event queue pops by time then insertion order") {
  EventQueue q;
  Event a, b, c;
  a.t = 2.0;
  a.from = 1;
  b.t = 1.0;
  b.from = 2;
  c.t = 2.0;
  c.from = 3;
  q.push(a);
  q.push(b);
  q.push(c);
  CHECK(q.pop().from == 2);
  CHECK(q.pop().from == 1);  // same time: first pushed wins
  CHECK(q.pop().from == 3);
  CHECK(q.empty());
}

TEST_CASE("medium config validation") {
  MediumConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  SUBCASE("zero latency") {
    cfg.announce_latency = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
  SUBCASE("jitter out of range") {
    cfg.jitter = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
  SUBCASE("loss out of range") {
    cfg.loss_probability = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
  SUBCASE("sense factor below one") {
    cfg.sense_range_factor = 0.5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
  SUBCASE("gray factor below one") {
    cfg.gray_range_factor = 0.9;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
  SUBCASE("gray factor beyond the sense range") {
    cfg.gray_range_factor = 2.5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
}

TEST_CASE("mean latency follows the message role") {
  const MediumConfig cfg;
  CHECK(cfg.mean_latency(MsgKind::AggRequestFlood) == cfg.flood_latency);
  CHECK(cfg.mean_latency(MsgKind::Push) == cfg.flood_latency);
  CHECK(cfg.mean_latency(MsgKind::ResultFlood) == cfg.flood_latency);
  CHECK(cfg.mean_latency(MsgKind::TreeRequest) == cfg.flood_latency);
  CHECK(cfg.mean_latency(MsgKind::TokenAnnounce) == cfg.announce_latency);
  CHECK(cfg.mean_latency(MsgKind::TokenRequest) == cfg.request_latency);
  CHECK(cfg.mean_latency(MsgKind::TokenTransfer) == cfg.transfer_latency);
  CHECK(cfg.mean_latency(MsgKind::TreeData) == cfg.data_latency);
  CHECK(cfg.mean_latency(MsgKind::TreeAck) == cfg.ack_latency);
}

TEST_CASE("hard-edge broadcasts stop at the nominal range") {
  // receivers at 0.5R, 0.99R, 1.2R, 1.9R, 2.5R
  Bench b(radial_world({5.0, 9.9, 12.0, 19.0, 25.0}, 10.0), MediumConfig{});
  CHECK(b.medium.broadcast(0.0, MsgKind::Push, 0) == 2);
  CHECK(b.counts[static_cast<size_t>(MsgKind::Push)] == 1);  // one transmission
  for (const Event& e : b.drain()) CHECK((e.to == 1 || e.to == 2));
}

TEST_CASE("token requests are overheard to the sense range") {
  Bench b(radial_world({5.0, 9.9, 12.0, 19.0, 25.0}, 10.0), MediumConfig{});
  CHECK(b.medium.broadcast(0.0, MsgKind::TokenRequest, 0) == 4);  // all but 2.5R
  for (const Event& e : b.drain()) CHECK(e.to != 5);
}

TEST_CASE("announce decode probability falls across the gray zone") {
  MediumConfig cfg;
  cfg.gray_range_factor = 1.4;
  SUBCASE("inside the nominal range decode is sure") {
    Bench b(radial_world({5.0, 9.9}, 10.0), cfg);
    for (int i = 0; i < 200; ++i) CHECK(b.medium.broadcast(0.0, MsgKind::TokenAnnounce, 0) == 2);
  }
  SUBCASE("beyond gray_range_factor * R nothing decodes") {
    Bench b(radial_world({14.5, 19.0}, 10.0), cfg);
    for (int i = 0; i < 200; ++i) CHECK(b.medium.broadcast(0.0, MsgKind::TokenAnnounce, 0) == 0);
  }
  SUBCASE("mid-zone decodes at the linear fade rate") {
    // d = 1.2R: expected probability (1.4R - 1.2R) / (0.4R) = 0.5
    Bench b(radial_world({12.0}, 10.0), cfg);
    int got = 0;
    const int sends = 4000;
    for (int i = 0; i < sends; ++i) got += b.medium.broadcast(0.0, MsgKind::TokenAnnounce, 0);
    CHECK(got > 0);
    CHECK(got < sends);
    CHECK(static_cast<double>(got) / sends == doctest::Approx(0.5).epsilon(0.06));
  }
  SUBCASE("factor 1.0 restores the sharp disk") {
    MediumConfig sharp;
    Bench b(radial_world({12.0}, 10.0), sharp);
    CHECK(b.medium.broadcast(0.0, MsgKind::TokenAnnounce, 0) == 0);
  }
}

TEST_CASE("unicast rides retries across the whole gray zone") {
  MediumConfig cfg;
  cfg.gray_range_factor = 1.4;
  Bench b(radial_world({12.0, 15.0}, 10.0), cfg);
  for (int i = 0; i < 50; ++i) CHECK(b.medium.unicast(0.0, MsgKind::TokenTransfer, 0, 1) == 1);
  CHECK(b.medium.unicast(0.0, MsgKind::TokenTransfer, 0, 2) == 0);  // out of reach
  CHECK(b.counts[static_cast<size_t>(MsgKind::TokenTransfer)] == 51);  // sends still count
}

TEST_CASE("independent loss thins deliveries binomially") {
  MediumConfig cfg;
  cfg.loss_probability = 0.5;
  Bench b(radial_world({5.0}, 10.0), cfg);
  int got = 0;
  const int sends = 10000;
  for (int i = 0; i < sends; ++i) got += b.medium.broadcast(0.0, MsgKind::Push, 0);
  // 3 sigma of Binomial(10^4, 0.5) is 150
  CHECK(std::abs(got - 5000) < 150);
}

TEST_CASE("one latency draw covers all receivers of a broadcast") {
  Bench b(radial_world({3.0, 5.0, 7.0}, 10.0), MediumConfig{});
  b.medium.broadcast(0.0, MsgKind::AggRequestFlood, 0);
  const auto events = b.drain();
  REQUIRE(events.size() == 3);
  for (const Event& e : events) {
    CHECK(e.t == events[0].t);
    CHECK(e.t >= 0.002 * 0.8);
    CHECK(e.t <= 0.002 * 1.2);
  }
}

TEST_CASE("delivery events carry the payload fields") {
  Bench b(radial_world({5.0}, 10.0), MediumConfig{});
  b.medium.broadcast(1.5, MsgKind::TokenAnnounce, 0, 7, 8, 9);
  const auto events = b.drain();
  REQUIRE(events.size() == 1);
  CHECK(events[0].kind == EventKind::Delivery);
  CHECK(events[0].msg == MsgKind::TokenAnnounce);
  CHECK(events[0].from == 0);
  CHECK(events[0].to == 1);
  CHECK(events[0].a == 7);
  CHECK(events[0].b == 8);
  CHECK(events[0].c == 9);
  CHECK(events[0].t > 1.5);
}

TEST_CASE("event log records sends and deliveries") {
  Bench b(radial_world({5.0, 7.0}, 10.0), MediumConfig{});
  b.log.enable();
  b.medium.broadcast(0.0, MsgKind::Push, 0);
  b.medium.unicast(0.0, MsgKind::TokenTransfer, 0, 1);
  const std::string& text = b.log.text();
  CHECK(text.find("send,PUSH,0,-1") != std::string::npos);
  CHECK(text.find("send,TOKEN_TRANSFER,0,1") != std::string::npos);
}
