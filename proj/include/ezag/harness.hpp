#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ezag/hierarchy.hpp"
#include "ezag/metrics.hpp"
#include "ezag/mobility.hpp"
#include "ezag/protocol.hpp"
#include "ezag/tree.hpp"
#include "ezag/world.hpp"

namespace ezag {

enum class ExperimentKind : uint8_t { Walk = 0, LinkRate, Hier, Gossip };

const char* to_string(ExperimentKind k);
bool parse_experiment_kind(const std::string& name, ExperimentKind& out);

// Declarative sweep: the cross product protocols x n x models x speeds, each
// point run `trials` times with seed = base_seed + global trial index
// (expansion order, so runs are reproducible and parallelism-invariant).
struct ExperimentSpec {
  std::string name = "custom";
  ExperimentKind kind = ExperimentKind::Walk;
  std::vector<Protocol> protocols{Protocol::Ezag};
  std::vector<int> n_list{100};
  std::vector<MobilityModel> models{MobilityModel::RandomDirection};
  std::vector<double> speeds{9.0};
  int trials = 50;
  uint64_t base_seed = 1;
  RunMode mode = RunMode::CoverageOracle;
  double density = 0.011;      // nodes per m^2
  double degree_factor = 3.0;  // mean disk degree = degree_factor * ln N
  int delta = 16;              // hier: target level-0 cell population
  int refresh_cycles = 1;      // hier: walk rounds per instance
  double loss = 0.0;
  double horizon = 600.0;
  double gray_range_factor = 1.4;  // soft decode edge of the medium
  SynopsisKind aggregate = SynopsisKind::Max;
  double gossip_exponent = 1.0;
  std::string out;  // output directory; empty = $EZAG_OUT_DIR or ./out

  // Throws ConfigError naming the violated invariant.
  void validate() const;
  // Deterministic key = value text (the manifest embeds this).
  std::string serialize() const;
};

// Flat key = value lines, '#' comments, comma-separated lists.
ExperimentSpec parse_spec_text(const std::string& text, const std::string& name);
ExperimentSpec load_spec_file(const std::string& path);

std::vector<std::string> builtin_spec_names();
bool find_builtin_spec(const std::string& name, ExperimentSpec& out);
// Existing file path, else builtin name; throws ConfigError when neither.
ExperimentSpec resolve_spec(const std::string& ref);

// One sweep point of a walk experiment.
struct CellSpec {
  Protocol protocol = Protocol::Ezag;
  int n = 100;
  MobilityModel model = MobilityModel::RandomDirection;
  double speed = 9.0;
  RunMode mode = RunMode::CoverageOracle;
  double density = 0.011;
  double degree_factor = 3.0;
  double loss = 0.0;
  double horizon = 600.0;
  double gray_range_factor = 1.4;  // soft decode edge of the medium
  SynopsisKind aggregate = SynopsisKind::Max;
};

// Connected deployment for a sweep point; the world seed is derived from the
// trial seed, so every trial draws a fresh placement.
World make_walk_world(int n, double density, double degree_factor, uint64_t seed);
// Deployment sized so the expected level-0 cell population is delta.
World make_hier_world(int n, int delta, double density, uint64_t seed);

TrialStats run_walk_trial(const CellSpec& cell, uint64_t seed);
std::vector<TrialStats> run_walk_cell(const CellSpec& cell, int trials, uint64_t seed0,
                                      int jobs);

// Random-direction link volatility: mean link changes per node per second
// after warmup, observed at 1 s intervals.
double link_rate_trial(int n, double density, double degree_factor, double speed,
                       uint64_t seed);

HierStats run_hier_trial(int n, int delta, double density, double gray_range_factor,
                         MobilityModel model,
                         double speed, int refresh_cycles, double loss, uint64_t seed);

// fn(i) for i in [0, count), spread over `jobs` threads (0 = hardware
// concurrency). Exceptions propagate after all workers join.
void parallel_for(int count, int jobs, const std::function<void(int)>& fn);

struct RunOverrides {
  int trials = 0;     // > 0 replaces spec.trials
  uint64_t seed = 0;  // applied when has_seed
  bool has_seed = false;
  int jobs = 1;       // 0 = hardware concurrency
  std::string out;    // replaces spec.out when nonempty
  bool full = false;  // unlocks N > 1000 points
};

struct ExperimentResult {
  ExperimentSpec spec;  // effective spec (overrides applied, N list filtered)
  std::vector<TrialStats> walk_trials;  // walk kind, expansion order
  std::vector<HierStats> hier_trials;   // hier kind, expansion order
  std::vector<std::string> files;       // paths written
  std::string out_dir;
};

// Runs the sweep and writes <name>_trials.csv, <name>_summary.csv,
// <name>_manifest.txt and <name>_runstamp.txt (plus <name>_levels.csv for
// hier) under the resolved output directory. Output files are opened before
// any simulation starts; CSV and manifest bodies are byte-identical across
// re-runs (the timestamp lives only in the runstamp file).
ExperimentResult run_experiment(const ExperimentSpec& spec, const RunOverrides& ov);

// $EZAG_OUT_DIR when set, else "out".
std::string default_out_dir();

}  // namespace ezag
