#include "ezag/mobility.hpp"

#include <algorithm>
#include <cmath>

namespace ezag {

namespace {
constexpr double kTwoPi = 6.283185307179586;
// Fraction of the area side treated as the boundary margin where the
// Gauss-Markov mean heading is steered back toward the interior.
constexpr double kGmEdgeMargin = 0.1;
}  // namespace

const char* to_string(MobilityModel m) {
  switch (m) {
    case MobilityModel::Static: return "static";
    case MobilityModel::RandomDirection: return "random_direction";
    case MobilityModel::RandomWaypoint: return "random_waypoint";
    case MobilityModel::GaussMarkov: return "gauss_markov";
  }
  return "?";
}

bool parse_mobility_model(const std::string& name, MobilityModel& out) {
  if (name == "static") out = MobilityModel::Static;
  else if (name == "random_direction") out = MobilityModel::RandomDirection;
  else if (name == "random_waypoint") out = MobilityModel::RandomWaypoint;
  else if (name == "gauss_markov") out = MobilityModel::GaussMarkov;
  else return false;
  return true;
}

void MobilityConfig::validate() const {
  if (v_low < 0.0 || v_high < v_low)
    throw ConfigError("MobilityConfig: need 0 <= v_low <= v_high");
  if (pause_time < 0.0) throw ConfigError("MobilityConfig: pause_time must be >= 0");
  if (warmup < 0.0) throw ConfigError("MobilityConfig: warmup must be >= 0");
  if (gm_alpha < 0.0 || gm_alpha > 1.0)
    throw ConfigError("MobilityConfig: gm_alpha must be within [0, 1]");
  if (model == MobilityModel::RandomDirection && !(direction_interval > 0.0))
    throw ConfigError("MobilityConfig: direction_interval must be > 0");
  if (model == MobilityModel::GaussMarkov) {
    if (!(gm_update > 0.0)) throw ConfigError("MobilityConfig: gm_update must be > 0");
    if (!(mean_speed >= 0.0)) throw ConfigError("MobilityConfig: mean_speed must be >= 0");
  }
}

MobilityConfig MobilityConfig::make(MobilityModel model, double speed) {
  if (speed < 0.0) throw ConfigError("MobilityConfig: speed must be >= 0");
  MobilityConfig cfg;
  cfg.model = model;
  cfg.v_low = 0.7 * speed;
  cfg.v_high = 1.3 * speed;
  cfg.mean_speed = speed;
  cfg.validate();
  return cfg;
}

Mobility::Mobility(const MobilityConfig& cfg, uint64_t seed) : cfg_(cfg), rng_(seed) {
  cfg_.validate();
}

void Mobility::init(World& w) {
  const int n = w.size();
  timer_.assign(n, 0.0);
  switch (cfg_.model) {
    case MobilityModel::Static:
      for (auto& v : w.vel) v = Vec2::Zero();
      return;
    case MobilityModel::RandomDirection:
      for (int i = 0; i < n; ++i) {
        redraw_direction(w, i);
        // Stagger the first re-draws so they do not fire in lockstep.
        timer_[i] = rng_.uniform(0.0, cfg_.direction_interval);
      }
      break;
    case MobilityModel::RandomWaypoint:
      waypoint_.assign(n, Vec2::Zero());
      paused_.assign(n, 0);
      for (int i = 0; i < n; ++i) pick_waypoint(w, i);
      break;
    case MobilityModel::GaussMarkov:
      gm_speed_.assign(n, 0.0);
      gm_dir_.assign(n, 0.0);
      gm_mean_dir_.assign(n, 0.0);
      for (int i = 0; i < n; ++i) {
        gm_speed_[i] = std::max(0.0, cfg_.mean_speed + 0.2 * cfg_.mean_speed * rng_.normal());
        gm_dir_[i] = rng_.uniform(0.0, kTwoPi);
        gm_mean_dir_[i] = gm_dir_[i];
        w.vel[i] = gm_speed_[i] * Vec2(std::cos(gm_dir_[i]), std::sin(gm_dir_[i]));
        timer_[i] = rng_.uniform(0.0, cfg_.gm_update);
      }
      break;
  }
  // Burn in the transient: uniform placement is not the stationary
  // distribution (waypoint motion concentrates toward the center), so runs
  // that should see steady-state conditions start after a silent advance.
  constexpr double kWarmupDt = 0.1;
  for (double t = 0.0; t < cfg_.warmup; t += kWarmupDt) step(w, kWarmupDt);
  if (cfg_.warmup > 0.0) w.refresh_index();
}

void Mobility::redraw_direction(World& w, int i) {
  const double speed = rng_.uniform(cfg_.v_low, cfg_.v_high);
  const double dir = rng_.uniform(0.0, kTwoPi);
  w.vel[i] = speed * Vec2(std::cos(dir), std::sin(dir));
}

void Mobility::pick_waypoint(World& w, int i) {
  const double side = w.config().area_side;
  waypoint_[i] = Vec2(rng_.uniform(0.0, side), rng_.uniform(0.0, side));
  const double speed = rng_.uniform(cfg_.v_low, cfg_.v_high);
  Vec2 d = waypoint_[i] - w.pos[i];
  const double dist = d.norm();
  w.vel[i] = dist > 1e-12 ? Vec2(speed * d / dist) : Vec2::Zero();
  paused_[i] = 0;
}

void Mobility::gm_update_node(World& w, int i) {
  const double side = w.config().area_side;
  const double margin = kGmEdgeMargin * side;
  const Vec2& p = w.pos[i];
  if (p.x() < margin || p.x() > side - margin || p.y() < margin ||
      p.y() > side - margin) {
    // Steer the mean heading back toward the interior near the boundary.
    gm_mean_dir_[i] = std::atan2(side / 2 - p.y(), side / 2 - p.x());
  }
  const double a = cfg_.gm_alpha;
  const double noise = std::sqrt(std::max(0.0, 1.0 - a * a));
  const double sigma_s = 0.2 * cfg_.mean_speed;
  // Keep the direction recurrence wander moderate; the boundary steering above
  // supplies the long-term drift.
  const double sigma_d = 0.6;
  gm_speed_[i] = a * gm_speed_[i] + (1.0 - a) * cfg_.mean_speed +
                 noise * sigma_s * rng_.normal();
  gm_speed_[i] = std::max(0.0, gm_speed_[i]);
  gm_dir_[i] = a * gm_dir_[i] + (1.0 - a) * gm_mean_dir_[i] + noise * sigma_d * rng_.normal();
  w.vel[i] = gm_speed_[i] * Vec2(std::cos(gm_dir_[i]), std::sin(gm_dir_[i]));
}

void Mobility::reflect(World& w, int i) {
  const double side = w.config().area_side;
  Vec2& p = w.pos[i];
  Vec2& v = w.vel[i];
  for (int axis = 0; axis < 2; ++axis) {
    double& x = p[axis];
    // Repeated folding handles multiple bounces in one step.
    while (x < 0.0 || x > side) {
      if (x < 0.0) {
        x = -x;
        v[axis] = std::abs(v[axis]);
      } else {
        x = 2.0 * side - x;
        v[axis] = -std::abs(v[axis]);
      }
    }
  }
}

void Mobility::step(World& w, double dt) {
  if (!(dt > 0.0)) throw ConfigError("mobility_step: dt must be > 0");
  const int n = w.size();
  switch (cfg_.model) {
    case MobilityModel::Static:
      return;
    case MobilityModel::RandomDirection:
      for (int i = 0; i < n; ++i) {
        w.pos[i] += w.vel[i] * dt;
        reflect(w, i);
        timer_[i] -= dt;
        if (timer_[i] <= 0.0) {
          redraw_direction(w, i);
          timer_[i] += cfg_.direction_interval;
        }
      }
      break;
    case MobilityModel::RandomWaypoint:
      for (int i = 0; i < n; ++i) {
        if (paused_[i]) {
          timer_[i] -= dt;
          if (timer_[i] <= 0.0) pick_waypoint(w, i);
          continue;
        }
        const double speed = w.vel[i].norm();
        const double dist = (waypoint_[i] - w.pos[i]).norm();
        if (dist <= speed * dt || speed <= 1e-12) {
          w.pos[i] = waypoint_[i];
          w.vel[i] = Vec2::Zero();
          paused_[i] = 1;
          timer_[i] = cfg_.pause_time;
          if (cfg_.pause_time <= 0.0) pick_waypoint(w, i);
        } else {
          w.pos[i] += w.vel[i] * dt;
        }
      }
      break;
    case MobilityModel::GaussMarkov:
      for (int i = 0; i < n; ++i) {
        w.pos[i] += w.vel[i] * dt;
        if (w.pos[i].x() < 0.0 || w.pos[i].x() > w.config().area_side ||
            w.pos[i].y() < 0.0 || w.pos[i].y() > w.config().area_side) {
          reflect(w, i);
          // Keep the model state consistent with the reflected velocity.
          gm_dir_[i] = std::atan2(w.vel[i].y(), w.vel[i].x());
        }
        timer_[i] -= dt;
        if (timer_[i] <= 0.0) {
          gm_update_node(w, i);
          timer_[i] += cfg_.gm_update;
        }
      }
      break;
  }
  w.refresh_index();
}

double link_change_rate(const std::vector<std::vector<std::vector<int>>>& snapshots,
                        double dt) {
  if (snapshots.size() < 2)
    throw ConfigError("link_change_rate: need at least 2 snapshots");
  if (!(dt > 0.0)) throw ConfigError("link_change_rate: dt must be > 0");
  const size_t n = snapshots.front().size();
  double total = 0.0;
  std::vector<int> diff;
  for (size_t t = 1; t < snapshots.size(); ++t) {
    for (size_t i = 0; i < n; ++i) {
      const auto& a = snapshots[t - 1][i];
      const auto& b = snapshots[t][i];
      diff.clear();
      std::set_symmetric_difference(a.begin(), a.end(), b.begin(), b.end(),
                                    std::back_inserter(diff));
      total += static_cast<double>(diff.size());
    }
  }
  const double span = static_cast<double>(snapshots.size() - 1) * dt;
  return total / 2.0 / static_cast<double>(n) / span;
}

void LinkChangeMeter::observe(const World& w) {
  const int n = w.size();
  std::vector<std::vector<int>> cur(n);
  for (int i = 0; i < n; ++i) cur[i] = w.neighbors(i);
  if (count_ > 0) {
    std::vector<int> diff;
    for (int i = 0; i < n; ++i) {
      diff.clear();
      std::set_symmetric_difference(prev_[i].begin(), prev_[i].end(), cur[i].begin(),
                                    cur[i].end(), std::back_inserter(diff));
      sym_diff_total_ += static_cast<double>(diff.size());
    }
  }
  prev_ = std::move(cur);
  n_nodes_ = n;
  ++count_;
}

double LinkChangeMeter::rate(double dt) const {
  if (count_ < 2) throw ConfigError("LinkChangeMeter: need at least 2 snapshots");
  const double span = static_cast<double>(count_ - 1) * dt;
  return sym_diff_total_ / 2.0 / static_cast<double>(n_nodes_) / span;
}

}  // namespace ezag
