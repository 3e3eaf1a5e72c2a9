#pragma once

#include <cstdint>

#include "ezag/metrics.hpp"
#include "ezag/mobility.hpp"
#include "ezag/netsim.hpp"
#include "ezag/synopsis.hpp"
#include "ezag/world.hpp"

namespace ezag {

enum class RunMode : uint8_t {
  CoverageOracle,   // stop when |covered| = N (instrumentation-assisted)
  TerminateAfterN,  // stop after exactly N token transfers
};

enum class SelectionRule : uint8_t {
  MinVisits,      // least-visited requester, ties uniform (self-repelling)
  UniformRandom,  // uniform over requesters (plain random walk)
};

// Early-exit hooks for tests that only exercise the dissemination phases.
enum class StopAfter : uint8_t { Full, Flood, Push };

struct EzagOptions {
  bool push_enabled = true;
  RunMode mode = RunMode::CoverageOracle;
  SelectionRule selection = SelectionRule::MinVisits;
  bool suppression = true;

  // Request timer: t_r = uniform(0, request_window) + request_slope * visits,
  // capped at request_window so often-visited nodes still reach the holder
  // before the window closes instead of going permanently silent.
  double request_slope = 0.003;
  double request_window = 0.009;
  double transfer_timeout = 0.05;  // re-announce delay after a silent window
  int max_announce_attempts = 5;   // silent windows before reporting isolation
  double token_start_delay = 0.008;  // initiator's first visit after the flood starts

  double horizon = 600.0;  // simulated seconds
  int initiator = 0;
  StopAfter stop_after = StopAfter::Full;
  int64_t max_transfers = 0;  // > 0 caps the walk (test hook)

  SynopsisKind aggregate = SynopsisKind::Max;
  int sketch_registers = 64;
  uint64_t sketch_seed = 1;

  double mobility_dt = 0.1;  // s between mobility ticks
  bool record_selection_trace = false;

  void validate() const;
};

// Empty aggregate of the configured kind / a node's own contribution (node id
// as the MAX/MIN scalar, hashed id for COUNT).
OdiSynopsis make_aggregate(const EzagOptions& opt);
OdiSynopsis node_contribution(const EzagOptions& opt, int id);

// Full protocol run: request flood, push phase (if enabled), self-repelling
// token walk, result flood. The world is taken by value (each run owns and
// mutates its copy).
TrialStats run_ezag(World world, const MobilityConfig& mobility, const EzagOptions& opt,
                    const MediumConfig& medium, uint64_t seed, EventLog* log = nullptr);

// Baselines sharing the exact run_ezag code path with switched rules:
// SRRW = no push, min-visit selection; plain = no push, uniform selection,
// no suppression.
TrialStats run_srrw(World world, const MobilityConfig& mobility, EzagOptions opt,
                    const MediumConfig& medium, uint64_t seed, EventLog* log = nullptr);
TrialStats run_plain_rw(World world, const MobilityConfig& mobility, EzagOptions opt,
                        const MediumConfig& medium, uint64_t seed,
                        EventLog* log = nullptr);

}  // namespace ezag
