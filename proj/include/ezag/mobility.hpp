#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ezag/rng.hpp"
#include "ezag/world.hpp"

namespace ezag {

enum class MobilityModel : uint8_t { Static, RandomDirection, RandomWaypoint, GaussMarkov };

const char* to_string(MobilityModel m);
bool parse_mobility_model(const std::string& name, MobilityModel& out);

struct MobilityConfig {
  MobilityModel model = MobilityModel::Static;
  double v_low = 0.0;               // m/s
  double v_high = 0.0;              // m/s
  double direction_interval = 10.0; // s, random-direction re-draw period
  double pause_time = 2.0;          // s, waypoint pause
  double gm_alpha = 0.75;           // Gauss-Markov memory
  double gm_update = 1.0;           // s, Gauss-Markov update period
  double mean_speed = 0.0;          // m/s, Gauss-Markov asymptotic mean
  double warmup = 0.0;              // s, stepped inside init() so runs start
                                    // from the model's steady-state positions
                                    // instead of the uniform placement

  void validate() const;

  // Named model at a nominal sweep speed: direction/waypoint draw leg speeds
  // uniformly from a +-30% band around `speed`; Gauss-Markov uses it as the
  // stationary mean.
  static MobilityConfig make(MobilityModel model, double speed);
};

// Per-node kinematic state for the configured model. init() draws initial
// headings; step() advances world positions by dt with boundary reflection.
class Mobility {
 public:
  Mobility(const MobilityConfig& cfg, uint64_t seed);

  void init(World& w);
  void step(World& w, double dt);

  const MobilityConfig& config() const { return cfg_; }

 private:
  void redraw_direction(World& w, int i);
  void pick_waypoint(World& w, int i);
  void gm_update_node(World& w, int i);
  static void reflect(World& w, int i);

  MobilityConfig cfg_;
  Rng rng_;
  std::vector<double> timer_;     // time to next re-draw / update / unpause
  std::vector<Vec2> waypoint_;    // waypoint model destination
  std::vector<uint8_t> paused_;   // waypoint model
  std::vector<double> gm_speed_, gm_dir_, gm_mean_dir_;
};

inline void mobility_step(World& w, Mobility& m, double dt) { m.step(w, dt); }

// Average neighbor-set symmetric difference per node per second / 2, over a
// trace of per-node sorted neighbor snapshots taken every dt seconds.
// Throws ConfigError with fewer than 2 snapshots.
double link_change_rate(const std::vector<std::vector<std::vector<int>>>& snapshots,
                        double dt);

// Incremental form of the same statistic for long runs.
class LinkChangeMeter {
 public:
  // Snapshot current neighbor sets; call at fixed dt intervals.
  void observe(const World& w);
  double rate(double dt) const;
  int snapshots() const { return count_; }

 private:
  std::vector<std::vector<int>> prev_;
  double sym_diff_total_ = 0.0;
  int count_ = 0;
  int n_nodes_ = 0;
};

}  // namespace ezag
