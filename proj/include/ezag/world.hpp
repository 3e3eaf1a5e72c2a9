#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ezag/rng.hpp"

namespace ezag {

using Vec2 = Eigen::Vector2d;

// Configuration / input validation failure; the message names the violated rule.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Out-of-range id or level lookup.
struct LookupError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

struct WorldConfig {
  int n_nodes = 0;
  double area_side = 0.0;    // square side, meters
  double density = 0.0;      // nodes per m^2
  double comm_range = 0.0;   // broadcast radius R, meters
  double geo_dense_c = 0.0;  // density margin c in R^2 = 2*c*ln(N)/density
  uint64_t rng_seed = 0;

  // Throws ConfigError naming the violated invariant.
  void validate() const;

  // Sizes area and range from N, density and margin c so R^2 = 2*c*ln(N)/density.
  static WorldConfig geo_dense(int n_nodes, double density, double c, uint64_t seed);
  // Sizes range so the mean in-range disk holds `degree` expected nodes
  // (degree = pi * R^2 * density).
  static WorldConfig with_mean_degree(int n_nodes, double density, double degree,
                                      uint64_t seed);
  // Sizes range so the expected level-0 cell population is `cell_pop`
  // (cell side R/sqrt(2), population = density * R^2 / 2).
  static WorldConfig with_cell_population(int n_nodes, double density, double cell_pop,
                                          uint64_t seed);
};

// Immutable deployment parameters plus mutable kinematic state. Positions and
// velocities are flat public arrays mutated by the mobility models; the
// neighbor index must be refreshed after positions change.
class World {
 public:
  explicit World(const WorldConfig& cfg);
  World(const WorldConfig& cfg, std::vector<Vec2> positions);

  const WorldConfig& config() const { return cfg_; }
  int size() const { return cfg_.n_nodes; }

  // Ids of nodes within comm_range of `id` (closed ball, excluding id itself).
  std::vector<int> neighbors(int id) const;

  // Calls f(j) for every neighbor j of id; avoids the vector allocation.
  template <class F>
  void for_each_neighbor(int id, F&& f) const {
    for_each_within(id, cfg_.comm_range, static_cast<F&&>(f));
  }

  // Same scan for an arbitrary radius (e.g. the carrier-sense range).
  template <class F>
  void for_each_within(int id, double range, F&& f) const {
    check_id(id);
    const Vec2 p = pos[id];
    const double r2 = range * range;
    const int ring = std::max(1, static_cast<int>(std::ceil(range / bin_side_)));
    int bc, br;
    bin_of(p, bc, br);
    for (int row = std::max(0, br - ring); row <= std::min(bin_rows_ - 1, br + ring);
         ++row) {
      for (int col = std::max(0, bc - ring); col <= std::min(bin_cols_ - 1, bc + ring);
           ++col) {
        for (int j : bins_[row * bin_cols_ + col]) {
          if (j == id) continue;
          if ((pos[j] - p).squaredNorm() <= r2) f(j);
        }
      }
    }
  }

  bool in_range(int a, int b) const {
    check_id(a);
    check_id(b);
    return (pos[a] - pos[b]).squaredNorm() <= cfg_.comm_range * cfg_.comm_range;
  }

  // Rebuild the spatial index from current positions (after a mobility step).
  void refresh_index();

  // --- cell hierarchy -------------------------------------------------------
  // Level-0 cells are squares of side comm_range/sqrt(2) (cell diagonal = R, so
  // any two nodes in one cell are mutual neighbors); each level-(i+1) cell is a
  // 2x2 block of level-i cells. top_level() is the smallest level whose grid is
  // a single cell.

  int top_level() const { return top_level_; }
  double cell_side(int level) const;
  int cell_cols(int level) const;
  int cell_rows(int level) const;
  int num_cells(int level) const { return cell_cols(level) * cell_rows(level); }
  int cell_of(const Vec2& p, int level) const;
  int cell_of_node(int id, int level) const;

  // --- connectivity ---------------------------------------------------------
  bool is_connected() const;

  // Mutable kinematic state (size n_nodes).
  std::vector<Vec2> pos;
  std::vector<Vec2> vel;
  // Token-walk visit counts, maintained by the protocol drivers.
  std::vector<int> visit_count;

 private:
  void init_grid();
  void check_id(int id) const;
  void check_level(int level) const;
  void bin_of(const Vec2& p, int& col, int& row) const;

  WorldConfig cfg_;
  // Spatial hash for neighbor queries: square bins of side >= comm_range.
  double bin_side_ = 0.0;
  int bin_cols_ = 0, bin_rows_ = 0;
  std::vector<std::vector<int>> bins_;
  // Cell hierarchy.
  double cell0_side_ = 0.0;
  int cell0_cols_ = 0, cell0_rows_ = 0;
  int top_level_ = 0;
};

// Uniform i.i.d. placement from cfg.rng_seed.
World build_world(const WorldConfig& cfg);

// Resamples the deployment (derived seeds) until the static graph is connected.
// Throws ConfigError after max_attempts failures.
World build_connected_world(const WorldConfig& cfg, int max_attempts = 32);

}  // namespace ezag
