#include "ezag/world.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace ezag {

namespace {

double safe_log_n(int n) { return std::log(static_cast<double>(std::max(n, 2))); }

}  // namespace

void WorldConfig::validate() const {
  if (n_nodes < 1) throw ConfigError("WorldConfig: n_nodes must be >= 1");
  if (!(area_side > 0.0)) throw ConfigError("WorldConfig: area_side must be > 0");
  if (!(density > 0.0)) throw ConfigError("WorldConfig: density must be > 0");
  if (!(comm_range > 0.0)) throw ConfigError("WorldConfig: comm_range must be > 0");
  if (!(geo_dense_c > 0.0)) throw ConfigError("WorldConfig: geo_dense_c must be > 0");
  const double nodes = density * area_side * area_side;
  if (std::abs(nodes - n_nodes) > 1e-6 * std::max(1.0, static_cast<double>(n_nodes)))
    throw ConfigError("WorldConfig: density * area_side^2 must equal n_nodes");
  const double r2_min = 2.0 * geo_dense_c * safe_log_n(n_nodes) / density;
  if (comm_range * comm_range < r2_min * (1.0 - 1e-9))
    throw ConfigError("WorldConfig: comm_range^2 must be >= 2*c*ln(N)/density (geo-dense)");
}

WorldConfig WorldConfig::geo_dense(int n_nodes, double density, double c, uint64_t seed) {
  if (n_nodes < 1) throw ConfigError("WorldConfig: n_nodes must be >= 1");
  if (!(density > 0.0)) throw ConfigError("WorldConfig: density must be > 0");
  if (!(c > 0.0)) throw ConfigError("WorldConfig: geo_dense_c must be > 0");
  WorldConfig cfg;
  cfg.n_nodes = n_nodes;
  cfg.density = density;
  cfg.area_side = std::sqrt(static_cast<double>(n_nodes) / density);
  cfg.geo_dense_c = c;
  cfg.comm_range = std::sqrt(2.0 * c * safe_log_n(n_nodes) / density);
  cfg.rng_seed = seed;
  return cfg;
}

WorldConfig WorldConfig::with_mean_degree(int n_nodes, double density, double degree,
                                          uint64_t seed) {
  if (!(degree > 0.0)) throw ConfigError("WorldConfig: mean degree must be > 0");
  // degree = pi * R^2 * density  =>  c = degree / (2 pi ln N)
  const double c = degree / (2.0 * M_PI * safe_log_n(n_nodes));
  return geo_dense(n_nodes, density, c, seed);
}

WorldConfig WorldConfig::with_cell_population(int n_nodes, double density, double cell_pop,
                                              uint64_t seed) {
  if (!(cell_pop > 0.0)) throw ConfigError("WorldConfig: cell population must be > 0");
  // population = density * (R/sqrt(2))^2  =>  c = cell_pop / ln N
  const double c = cell_pop / safe_log_n(n_nodes);
  return geo_dense(n_nodes, density, c, seed);
}

World::World(const WorldConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(cfg_.rng_seed);
  pos.resize(cfg_.n_nodes);
  for (auto& p : pos) {
    p.x() = rng.uniform(0.0, cfg_.area_side);
    p.y() = rng.uniform(0.0, cfg_.area_side);
  }
  vel.assign(cfg_.n_nodes, Vec2::Zero());
  visit_count.assign(cfg_.n_nodes, 0);
  init_grid();
  refresh_index();
}

World::World(const WorldConfig& cfg, std::vector<Vec2> positions) : cfg_(cfg) {
  cfg_.validate();
  if (static_cast<int>(positions.size()) != cfg_.n_nodes)
    throw ConfigError("World: positions size must equal n_nodes");
  pos = std::move(positions);
  vel.assign(cfg_.n_nodes, Vec2::Zero());
  visit_count.assign(cfg_.n_nodes, 0);
  init_grid();
  refresh_index();
}

void World::init_grid() {
  bin_side_ = std::max(cfg_.comm_range, cfg_.area_side * 1e-9);
  bin_cols_ = std::max(1, static_cast<int>(cfg_.area_side / bin_side_));
  bin_rows_ = bin_cols_;
  bins_.assign(static_cast<size_t>(bin_cols_) * bin_rows_, {});

  cell0_side_ = cfg_.comm_range / std::sqrt(2.0);
  cell0_cols_ = std::max(1, static_cast<int>(std::ceil(cfg_.area_side / cell0_side_)));
  cell0_rows_ = cell0_cols_;
  top_level_ = 0;
  while ((std::max(cell0_cols_, cell0_rows_) + (1 << top_level_) - 1) >> top_level_ > 1)
    ++top_level_;
}

void World::bin_of(const Vec2& p, int& col, int& row) const {
  col = std::clamp(static_cast<int>(p.x() / bin_side_), 0, bin_cols_ - 1);
  row = std::clamp(static_cast<int>(p.y() / bin_side_), 0, bin_rows_ - 1);
}

void World::refresh_index() {
  for (auto& b : bins_) b.clear();
  for (int i = 0; i < cfg_.n_nodes; ++i) {
    int c, r;
    bin_of(pos[i], c, r);
    bins_[static_cast<size_t>(r) * bin_cols_ + c].push_back(i);
  }
}

void World::check_id(int id) const {
  if (id < 0 || id >= cfg_.n_nodes) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "World: node id %d out of range", id);
    throw LookupError(buf);
  }
}

void World::check_level(int level) const {
  if (level < 0 || level > top_level_) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "World: cell level %d out of range", level);
    throw LookupError(buf);
  }
}

std::vector<int> World::neighbors(int id) const {
  std::vector<int> out;
  for_each_neighbor(id, [&](int j) { out.push_back(j); });
  std::sort(out.begin(), out.end());
  return out;
}

double World::cell_side(int level) const {
  check_level(level);
  return cell0_side_ * static_cast<double>(1 << level);
}

int World::cell_cols(int level) const {
  check_level(level);
  return (cell0_cols_ + (1 << level) - 1) >> level;
}

int World::cell_rows(int level) const {
  check_level(level);
  return (cell0_rows_ + (1 << level) - 1) >> level;
}

int World::cell_of(const Vec2& p, int level) const {
  check_level(level);
  // Level-0 coordinates first, then integer halving per level; this makes the
  // 4-into-1 nesting exact regardless of floating-point rounding.
  int col0 = std::clamp(static_cast<int>(p.x() / cell0_side_), 0, cell0_cols_ - 1);
  int row0 = std::clamp(static_cast<int>(p.y() / cell0_side_), 0, cell0_rows_ - 1);
  const int col = col0 >> level;
  const int row = row0 >> level;
  return row * cell_cols(level) + col;
}

int World::cell_of_node(int id, int level) const {
  check_id(id);
  return cell_of(pos[id], level);
}

bool World::is_connected() const {
  const int n = cfg_.n_nodes;
  if (n <= 1) return true;
  std::vector<uint8_t> seen(n, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for_each_neighbor(u, [&](int v) {
      if (!seen[v]) {
        seen[v] = 1;
        ++count;
        stack.push_back(v);
      }
    });
  }
  return count == n;
}

World build_world(const WorldConfig& cfg) { return World(cfg); }

World build_connected_world(const WorldConfig& cfg, int max_attempts) {
  WorldConfig c = cfg;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    c.rng_seed = attempt == 0 ? cfg.rng_seed : splitmix64(cfg.rng_seed + attempt);
    World w(c);
    if (w.is_connected()) return w;
  }
  throw ConfigError("build_connected_world: no connected deployment found; "
                    "raise density or comm_range");
}

}  // namespace ezag
