#include <algorithm>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "ezag/rng.hpp"
#include "ezag/synopsis.hpp"

using namespace ezag;

namespace {

// Random synopsis of the given kind over ids drawn below `universe`.
OdiSynopsis random_synopsis(SynopsisKind kind, Rng& rng, int universe) {
  OdiSynopsis s = kind == SynopsisKind::Max   ? OdiSynopsis::make_max()
                  : kind == SynopsisKind::Min ? OdiSynopsis::make_min()
                                              : OdiSynopsis::make_count(16, 9);
  const int k = rng.index(8);
  for (int i = 0; i < k; ++i) s.insert_node(rng.index(universe));
  return s;
}

}  // namespace

TEST_CASE("max and min track the scalar extremes") {
  OdiSynopsis mx = OdiSynopsis::make_max();
  OdiSynopsis mn = OdiSynopsis::make_min();
  CHECK(mx.empty());
  CHECK_THROWS_AS(mx.value(), SynopsisError);
  for (double v : {3.0, -1.5, 7.25, 7.25, 0.0}) {
    mx.insert(v);
    mn.insert(v);
  }
  CHECK(mx.value() == 7.25);
  CHECK(mn.value() == -1.5);
  CHECK_FALSE(mx.empty());
}

TEST_CASE("kind mismatches are rejected") {
  OdiSynopsis mx = OdiSynopsis::make_max();
  OdiSynopsis ct = OdiSynopsis::make_count(8, 3);
  CHECK_THROWS_AS(mx.insert_id(4), SynopsisError);
  CHECK_THROWS_AS(ct.insert(1.0), SynopsisError);
  CHECK_THROWS_AS(ct.value(), SynopsisError);
  CHECK_THROWS_AS(mx.absorb(ct), SynopsisError);
  OdiSynopsis other_regs = OdiSynopsis::make_count(16, 3);
  CHECK_THROWS_AS(ct.absorb(other_regs), SynopsisError);
  OdiSynopsis other_seed = OdiSynopsis::make_count(8, 4);
  CHECK_THROWS_AS(ct.absorb(other_seed), SynopsisError);
}

TEST_CASE("count sketch estimates distinct ids") {
  OdiSynopsis ct = OdiSynopsis::make_count(64, 1);
  CHECK(ct.estimate_count() == 0.0);
  for (int64_t id = 0; id < 1000; ++id) ct.insert_id(id);
  // FM with 64 registers: sigma ~ 13%; this pinned hash can't drift.
  CHECK(ct.estimate_count() > 650.0);
  CHECK(ct.estimate_count() < 1350.0);
  // feeding every id again must not move the estimate
  const double before = ct.estimate_count();
  for (int64_t id = 0; id < 1000; ++id) ct.insert_id(id);
  CHECK(ct.estimate_count() == before);
}

TEST_CASE("serialization round-trips every kind") {
  Rng rng(2024);
  for (SynopsisKind kind :
       {SynopsisKind::Max, SynopsisKind::Min, SynopsisKind::CountSketch}) {
    for (int rep = 0; rep < 20; ++rep) {
      const OdiSynopsis s = random_synopsis(kind, rng, 500);
      const std::vector<uint8_t> wire = s.serialize();
      CHECK(OdiSynopsis::deserialize(wire) == s);
    }
  }
  CHECK_THROWS_AS(OdiSynopsis::deserialize(nullptr, 0), SynopsisError);
  std::vector<uint8_t> junk{0xff, 0x00, 0x01};
  CHECK_THROWS_AS(OdiSynopsis::deserialize(junk), SynopsisError);
}

TEST_CASE("semilattice laws hold over randomized cases") {
  Rng rng(777);
  const SynopsisKind kinds[] = {SynopsisKind::Max, SynopsisKind::Min,
                                SynopsisKind::CountSketch};
  int failures = 0;
  for (int rep = 0; rep < 10000; ++rep) {
    const SynopsisKind kind = kinds[rep % 3];
    const OdiSynopsis a = random_synopsis(kind, rng, 200);
    const OdiSynopsis b = random_synopsis(kind, rng, 200);
    const OdiSynopsis c = random_synopsis(kind, rng, 200);
    if (!(merged(a, a) == a)) ++failures;                                // idempotent
    if (!(merged(a, b) == merged(b, a))) ++failures;                     // commutative
    if (!(merged(merged(a, b), c) == merged(a, merged(b, c)))) ++failures;  // associative
  }
  CHECK(failures == 0);
}

TEST_CASE("duplicate contributions never skew the sketch") {
  Rng rng(31);
  int failures = 0;
  for (int rep = 0; rep < 10000; ++rep) {
    OdiSynopsis once = OdiSynopsis::make_count(16, 5);
    OdiSynopsis many = OdiSynopsis::make_count(16, 5);
    const int k = 1 + rng.index(12);
    for (int i = 0; i < k; ++i) {
      const int64_t id = rng.index(300);
      once.insert_id(id);
      const int copies = 1 + rng.index(4);
      for (int c = 0; c < copies; ++c) many.insert_id(id);
    }
    if (!(once == many)) ++failures;
    // re-absorbing a partial view is also a no-op
    OdiSynopsis self = once;
    self.absorb(once);
    if (!(self == once)) ++failures;
  }
  CHECK(failures == 0);
}

TEST_CASE("insert_node feeds the id as the scalar") {
  OdiSynopsis mx = OdiSynopsis::make_max();
  OdiSynopsis mn = OdiSynopsis::make_min();
  for (int id : {5, 2, 9}) {
    mx.insert_node(id);
    mn.insert_node(id);
  }
  CHECK(mx.value() == 9.0);
  CHECK(mn.value() == 2.0);
}
