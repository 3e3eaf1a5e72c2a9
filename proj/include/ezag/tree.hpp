#pragma once

#include <cstdint>
#include <vector>

#include "ezag/metrics.hpp"
#include "ezag/mobility.hpp"
#include "ezag/netsim.hpp"
#include "ezag/protocol.hpp"
#include "ezag/world.hpp"

namespace ezag {

struct TreeOptions {
  double refresh_period = 2.0;   // s between root re-floods
  double send_window = 0.025;    // data transmission scheduled within this window
  double retx_timeout = 0.1;     // s between retransmissions of unacked data
  double horizon = 300.0;        // simulated seconds
  int initiator = 0;             // tree root

  SynopsisKind aggregate = SynopsisKind::Max;
  int sketch_registers = 64;
  uint64_t sketch_seed = 1;
  double mobility_dt = 0.1;

  void validate() const;
};

// Extra instrumentation for tests (state at end of run).
struct TreeDebug {
  std::vector<int> parents;
  std::vector<int64_t> epochs;
  int64_t max_sends_per_bundle = 0;
};

// Tree-based aggregation baseline: the root floods TREE_REQUEST with an
// increasing epoch every refresh_period; first hearing of an epoch sets the
// parent; nodes unicast opportunistically merged TREE_DATA bundles upstream,
// retransmitting every retx_timeout until acked. Completion = root's covered
// set reaching N.
TrialStats run_tree(World world, const MobilityConfig& mobility, const TreeOptions& opt,
                    const MediumConfig& medium, uint64_t seed, EventLog* log = nullptr,
                    TreeDebug* debug = nullptr);

}  // namespace ezag
