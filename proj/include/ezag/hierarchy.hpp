#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ezag/metrics.hpp"
#include "ezag/mobility.hpp"
#include "ezag/netsim.hpp"
#include "ezag/oracles.hpp"
#include "ezag/protocol.hpp"
#include "ezag/world.hpp"

namespace ezag {

struct HierarchyConfig {
  int delta = 16;        // target level-0 cell population
  int levels = 0;        // P+1; 0 derives floor(log4(N/delta)) + 1
  int refresh_cycles = 1;      // walk rounds per instance
  double refresh_base = 2.0;   // level-j refresh period = refresh_base * 4^j
  double start_window = 0.05;  // per-instance start jitter, seconds
  EzagOptions walk;            // timer constants, aggregate kind, horizon, dt

  void validate(int n_nodes) const;
  int derived_levels(int n_nodes) const;
};

struct LevelStats {
  int level = 0;
  int cells = 0;
  int empty_cells = 0;
  int stranded = 0;   // instances whose members all left / never answered
  int64_t messages = 0;
  int64_t transfers = 0;
  double mean_transfers_per_cell = 0.0;
  double median_transfers_per_cell = 0.0;
  double mean_completion = 0.0;    // seconds from instance start to result quiesce
  double median_completion = 0.0;
  std::vector<int64_t> per_cell_transfers;
  std::vector<double> per_cell_completion;
};

struct HierStats {
  uint64_t seed = 0;
  int n_nodes = 0;
  int delta = 0;
  int levels = 0;
  MobilityModel mobility = MobilityModel::Static;
  double speed = 0.0;
  bool complete = false;
  double completion_time = 0.0;
  int64_t total_messages = 0;
  MessageCounts messages{};
  std::vector<LevelStats> level;
};

// Independent cell-confined aggregation instances at every level 0..P, all
// interleaved on one event loop. Each instance floods its cell, walks a
// min-visit token over in-cell requesters (per-level visit counts), and floods
// its result within the cell.
HierStats run_hier(World world, const MobilityConfig& mobility,
                   const HierarchyConfig& cfg, const MediumConfig& medium,
                   uint64_t seed);

// Per-level CSV emission.
std::string hier_csv_header();
std::string hier_csv_rows(const HierStats& s);

}  // namespace ezag
