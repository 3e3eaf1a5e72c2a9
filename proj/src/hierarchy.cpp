#include "ezag/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace ezag {

void HierarchyConfig::validate(int n_nodes) const {
  if (delta < 1) throw ConfigError("HierarchyConfig: delta must be >= 1");
  if (levels < 0) throw ConfigError("HierarchyConfig: levels must be >= 0");
  if (refresh_cycles < 1) throw ConfigError("HierarchyConfig: refresh_cycles must be >= 1");
  if (!(refresh_base > 0.0)) throw ConfigError("HierarchyConfig: refresh_base must be > 0");
  if (start_window < 0.0) throw ConfigError("HierarchyConfig: start_window must be >= 0");
  walk.validate();
  const int p = derived_levels(n_nodes) - 1;
  // 4^P * delta should track N within a factor of 4.
  const double top = std::pow(4.0, p) * delta;
  if (top * 4.0 < n_nodes || top > 4.0 * n_nodes)
    throw ConfigError("HierarchyConfig: 4^P * delta is not within a factor of 4 of N");
}

int HierarchyConfig::derived_levels(int n_nodes) const {
  if (levels > 0) return levels;
  int p = 0;
  while (n_nodes / delta >= (1ll << (2 * (p + 1)))) ++p;
  return p + 1;
}

namespace {

struct Instance {
  int level = 0;
  int cell = 0;
  int initiator = -1;
  int holder = -1;
  int64_t round = 0;
  int64_t cycle = 0;  // guards flood deliveries across refresh restarts
  int silent = 0;
  int cycles_left = 0;
  bool started = false;
  bool window_open = false;
  bool walk_done = false;
  bool done = false;
  bool stranded = false;
  bool empty = false;
  double start_t = 0.0;
  int64_t transfers = 0;       // cumulative over cycles
  int64_t messages = 0;        // sends attributed to this instance
  double completion_sum = 0.0; // per-cycle completion durations
  int completions = 0;
  OdiSynopsis syn;
  std::vector<uint64_t> covered, flood_seen, result_seen;
  int covered_count = 0;
  int flood_outstanding = 0;
  int result_outstanding = 0;
  std::vector<std::pair<int, int>> requests;  // (advertised visits, node)
  std::vector<int> static_members;            // cached for static mobility
};

inline bool bit(const std::vector<uint64_t>& bits, int id) {
  return bits[static_cast<size_t>(id) >> 6] & (uint64_t{1} << (id & 63));
}

inline bool set_bit(std::vector<uint64_t>& bits, int id) {
  uint64_t& w = bits[static_cast<size_t>(id) >> 6];
  const uint64_t b = uint64_t{1} << (id & 63);
  if (w & b) return false;
  w |= b;
  return true;
}

class HierDriver {
 public:
  HierDriver(World world, const MobilityConfig& mobility, const HierarchyConfig& cfg,
             const MediumConfig& med_cfg, uint64_t seed)
      : world_(std::move(world)),
        cfg_(cfg),
        mob_cfg_(mobility),
        mobility_(mobility, splitmix64(seed ^ 0x6d6f6269ull)),
        rng_(splitmix64(seed)),
        medium_(med_cfg, &world_, &queue_, &rng_, &counts_, nullptr) {
    cfg_.validate(world_.size());
    mob_cfg_.validate();

    stats_.seed = seed;
    stats_.n_nodes = world_.size();
    stats_.delta = cfg_.delta;
    stats_.mobility = mob_cfg_.model;
    stats_.speed = mob_cfg_.model == MobilityModel::GaussMarkov
                       ? mob_cfg_.mean_speed
                       : 0.5 * (mob_cfg_.v_low + mob_cfg_.v_high);

    levels_ = cfg_.derived_levels(world_.size());
    if (levels_ - 1 > world_.top_level())
      throw ConfigError("HierarchyConfig: more levels than the world's cell grid has");
    stats_.levels = levels_;

    const int n = world_.size();
    const size_t words = (static_cast<size_t>(n) + 63) / 64;
    for (int j = 0; j < levels_; ++j) {
      const int cells = world_.num_cells(j);
      for (int c = 0; c < cells; ++c) {
        Instance inst;
        inst.level = j;
        inst.cell = c;
        inst.cycles_left = cfg_.refresh_cycles;
        inst.syn = make_aggregate(cfg_.walk);
        inst.covered.assign(words, 0);
        inst.flood_seen.assign(words, 0);
        inst.result_seen.assign(words, 0);
        instances_.push_back(std::move(inst));
      }
    }
    visits_.assign(static_cast<size_t>(levels_) * n, 0);
    pending_inst_.assign(static_cast<size_t>(levels_) * n, -1);
    pending_round_.assign(static_cast<size_t>(levels_) * n, -1);
  }

  HierStats run() {
    mobility_.init(world_);
    world_.refresh_index();
    if (mob_cfg_.model != MobilityModel::Static)
      schedule(cfg_.walk.mobility_dt, EventKind::MobilityTick);

    for (size_t i = 0; i < instances_.size(); ++i)
      schedule(rng_.uniform(0.0, cfg_.start_window), EventKind::InstanceStart,
               static_cast<int64_t>(i));

    while (open_instances_() && !queue_.empty()) {
      if (queue_.top().t > cfg_.walk.horizon) break;
      const Event e = queue_.pop();
      now_ = e.t;
      handle(e);
    }

    finalize();
    return std::move(stats_);
  }

 private:
  bool open_instances_() const { return done_instances_ < instances_.size(); }

  int& visits(int level, int node) {
    return visits_[static_cast<size_t>(level) * world_.size() + node];
  }
  int64_t& pending_inst(int level, int node) {
    return pending_inst_[static_cast<size_t>(level) * world_.size() + node];
  }
  int64_t& pending_round(int level, int node) {
    return pending_round_[static_cast<size_t>(level) * world_.size() + node];
  }

  bool in_cell(int node, const Instance& inst) const {
    return world_.cell_of_node(node, inst.level) == inst.cell;
  }

  void schedule(double dt, EventKind kind, int64_t a = 0, int64_t b = 0, int from = -1) {
    Event e;
    e.t = now_ + dt;
    e.kind = kind;
    e.from = from;
    e.a = a;
    e.b = b;
    queue_.push(e);
  }

  int send(Instance& inst, MsgKind kind, int from, int64_t b = 0, int64_t c = 0) {
    ++inst.messages;
    return medium_.broadcast(now_, kind, from, instance_id(inst), b, c);
  }

  int64_t instance_id(const Instance& inst) const {
    return static_cast<int64_t>(&inst - instances_.data());
  }

  void instance_finished(Instance& inst) {
    inst.completion_sum += now_ - inst.start_t;
    ++inst.completions;
    if (--inst.cycles_left > 0) {
      // Distance-sensitive refresh: restart this cell's instance after its
      // level-proportional period. Visit counts persist across cycles.
      const double period = cfg_.refresh_base * std::pow(4.0, inst.level);
      const double next = inst.start_t + period;
      schedule(std::max(0.0, next - now_), EventKind::InstanceStart, instance_id(inst));
      return;
    }
    inst.done = true;
    ++done_instances_;
  }

  void strand(Instance& inst) {
    inst.stranded = true;
    if (--inst.cycles_left > 0) {
      const double period = cfg_.refresh_base * std::pow(4.0, inst.level);
      schedule(std::max(0.0, inst.start_t + period - now_), EventKind::InstanceStart,
               instance_id(inst));
      return;
    }
    inst.done = true;
    ++done_instances_;
  }

  void start_instance(Instance& inst) {
    // (Re)initialize per-cycle state.
    inst.syn = make_aggregate(cfg_.walk);
    std::fill(inst.covered.begin(), inst.covered.end(), 0);
    std::fill(inst.flood_seen.begin(), inst.flood_seen.end(), 0);
    std::fill(inst.result_seen.begin(), inst.result_seen.end(), 0);
    inst.covered_count = 0;
    inst.flood_outstanding = 0;
    inst.result_outstanding = 0;
    inst.silent = 0;
    inst.window_open = false;
    inst.walk_done = false;
    inst.requests.clear();
    inst.start_t = now_;
    ++inst.cycle;

    std::vector<int> members;
    for (int v = 0; v < world_.size(); ++v)
      if (in_cell(v, inst)) members.push_back(v);
    if (members.empty()) {
      // Possible under non-uniform mobility; reported, not an error.
      inst.empty = true;
      inst.started = true;
      strand_empty(inst);
      return;
    }
    inst.empty = false;
    inst.started = true;
    if (mob_cfg_.model == MobilityModel::Static) inst.static_members = members;

    inst.initiator = members[static_cast<size_t>(rng_.index(static_cast<int>(members.size())))];
    set_bit(inst.flood_seen, inst.initiator);
    inst.flood_outstanding += send(inst, MsgKind::AggRequestFlood, inst.initiator, inst.cycle);
    visit(inst, inst.initiator, /*initial=*/true);
  }

  void strand_empty(Instance& inst) {
    if (--inst.cycles_left > 0) {
      const double period = cfg_.refresh_base * std::pow(4.0, inst.level);
      schedule(std::max(0.0, inst.start_t + period - now_), EventKind::InstanceStart,
               instance_id(inst));
      return;
    }
    inst.done = true;
    ++done_instances_;
  }

  bool members_covered(const Instance& inst) const {
    if (mob_cfg_.model == MobilityModel::Static) {
      for (int v : inst.static_members)
        if (!bit(inst.covered, v)) return false;
      return true;
    }
    for (int v = 0; v < world_.size(); ++v)
      if (world_.cell_of_node(v, inst.level) == inst.cell && !bit(inst.covered, v))
        return false;
    return true;
  }

  void visit(Instance& inst, int v, bool initial) {
    inst.holder = v;
    ++visits(inst.level, v);
    if (!initial) ++inst.transfers;
    inst.syn.absorb(node_contribution(cfg_.walk, v));
    if (set_bit(inst.covered, v)) ++inst.covered_count;
    if (members_covered(inst)) {
      inst.walk_done = true;
      set_bit(inst.result_seen, v);
      inst.result_outstanding += send(inst, MsgKind::ResultFlood, v, inst.cycle);
      if (inst.result_outstanding == 0) instance_finished(inst);
      return;
    }
    announce(inst);
  }

  void announce(Instance& inst) {
    ++inst.round;
    inst.requests.clear();
    inst.window_open = true;
    send(inst, MsgKind::TokenAnnounce, inst.holder, inst.round);
    const auto& mc = medium_.config();
    const double close_after = mc.announce_latency * (1.0 + mc.jitter) +
                               cfg_.walk.request_window +
                               mc.request_latency * (1.0 + mc.jitter) + 2e-4;
    schedule(close_after, EventKind::WindowClose, instance_id(inst), inst.round);
  }

  void handle(const Event& e) {
    switch (e.kind) {
      case EventKind::Delivery: on_delivery(e); return;
      case EventKind::MobilityTick:
        mobility_.step(world_, cfg_.walk.mobility_dt);
        if (open_instances_()) schedule(cfg_.walk.mobility_dt, EventKind::MobilityTick);
        return;
      case EventKind::InstanceStart:
        start_instance(instances_[static_cast<size_t>(e.a)]);
        return;
      case EventKind::RequestFire: on_request_fire(e); return;
      case EventKind::WindowClose: on_window_close(e); return;
      case EventKind::TransferTimeout: {
        Instance& inst = instances_[static_cast<size_t>(e.a)];
        if (!inst.done && !inst.walk_done && e.b == inst.round) announce(inst);
        return;
      }
      default: return;
    }
  }

  void on_delivery(const Event& e) {
    Instance& inst = instances_[static_cast<size_t>(e.a)];
    const int v = e.to;
    switch (e.msg) {
      case MsgKind::AggRequestFlood:
        if (e.b != inst.cycle) return;  // stale cycle
        --inst.flood_outstanding;
        if (!inst.done && !bit(inst.flood_seen, v) && in_cell(v, inst)) {
          set_bit(inst.flood_seen, v);
          inst.flood_outstanding += send(inst, MsgKind::AggRequestFlood, v, inst.cycle);
        }
        return;
      case MsgKind::TokenAnnounce: {
        if (inst.done || inst.walk_done || e.b != inst.round || !inst.window_open) return;
        if (!in_cell(v, inst)) return;
        const double t_r = std::min(rng_.uniform(0.0, cfg_.walk.request_window) +
                                        cfg_.walk.request_slope * visits(inst.level, v),
                                    cfg_.walk.request_window);
        pending_inst(inst.level, v) = e.a;
        pending_round(inst.level, v) = e.b;
        schedule(t_r, EventKind::RequestFire, e.a, e.b, v);
        return;
      }
      case MsgKind::TokenRequest:
        if (inst.done || inst.walk_done) return;
        if (v == inst.holder) {
          if (e.b == inst.round && inst.window_open)
            inst.requests.emplace_back(static_cast<int>(e.c), e.from);
        } else if (pending_inst(inst.level, v) == e.a &&
                   pending_round(inst.level, v) == e.b &&
                   e.c <= visits(inst.level, v)) {
          pending_round(inst.level, v) = -1;  // suppressed
        }
        return;
      case MsgKind::TokenTransfer:
        if (inst.done || inst.walk_done || e.b != inst.round) return;
        // Cell confinement: a recipient that drifted out of the cell between
        // request and delivery refuses the token (holder re-announces).
        if (!in_cell(v, inst)) return;
        visit(inst, v, /*initial=*/false);
        return;
      case MsgKind::ResultFlood:
        if (e.b != inst.cycle) return;  // stale cycle
        --inst.result_outstanding;
        if (!inst.done && !bit(inst.result_seen, v) && in_cell(v, inst)) {
          set_bit(inst.result_seen, v);
          inst.result_outstanding += send(inst, MsgKind::ResultFlood, v, inst.cycle);
        }
        if (!inst.done && inst.walk_done && inst.result_outstanding == 0)
          instance_finished(inst);
        return;
      default: return;
    }
  }

  void on_request_fire(const Event& e) {
    Instance& inst = instances_[static_cast<size_t>(e.a)];
    const int v = e.from;
    if (inst.done || inst.walk_done || e.b != inst.round || !inst.window_open) return;
    if (pending_inst(inst.level, v) != e.a || pending_round(inst.level, v) != e.b) return;
    pending_round(inst.level, v) = -1;
    if (!in_cell(v, inst)) return;  // drifted out since the announce
    send(inst, MsgKind::TokenRequest, v, inst.round, visits(inst.level, v));
    return;
  }

  void on_window_close(const Event& e) {
    Instance& inst = instances_[static_cast<size_t>(e.a)];
    if (inst.done || inst.walk_done || e.b != inst.round || !inst.window_open) return;
    inst.window_open = false;
    // Keep only requesters still inside the cell (confinement at transfer).
    std::vector<std::pair<int, int>> eligible;
    eligible.reserve(inst.requests.size());
    for (const auto& r : inst.requests)
      if (in_cell(r.second, inst)) eligible.push_back(r);
    if (eligible.empty()) {
      if (++inst.silent >= cfg_.walk.max_announce_attempts) {
        strand(inst);
        return;
      }
      schedule(cfg_.walk.transfer_timeout, EventKind::TransferTimeout, e.a, inst.round);
      return;
    }
    inst.silent = 0;
    int min_visits = eligible[0].first;
    for (const auto& [vis, id] : eligible) min_visits = std::min(min_visits, vis);
    int ties = 0;
    for (const auto& [vis, id] : eligible)
      if (vis == min_visits) ++ties;
    int which = rng_.index(ties);
    int winner = -1;
    for (const auto& [vis, id] : eligible) {
      if (vis == min_visits && which-- == 0) {
        winner = id;
        break;
      }
    }
    ++inst.messages;
    medium_.unicast(now_, MsgKind::TokenTransfer, inst.holder, winner, e.a, inst.round);
    schedule(cfg_.walk.transfer_timeout, EventKind::TransferTimeout, e.a, inst.round);
  }

  void finalize() {
    stats_.messages = counts_;
    stats_.total_messages = total_messages(counts_);
    stats_.complete = done_instances_ == instances_.size();
    stats_.completion_time = now_;
    stats_.level.assign(static_cast<size_t>(levels_), {});
    for (int j = 0; j < levels_; ++j) {
      LevelStats& ls = stats_.level[static_cast<size_t>(j)];
      ls.level = j;
      ls.cells = world_.num_cells(j);
    }
    for (const Instance& inst : instances_) {
      LevelStats& ls = stats_.level[static_cast<size_t>(inst.level)];
      if (inst.empty) {
        ++ls.empty_cells;
        continue;
      }
      if (inst.stranded) ++ls.stranded;
      ls.messages += inst.messages;
      ls.transfers += inst.transfers;
      ls.per_cell_transfers.push_back(inst.transfers);
      if (inst.completions > 0)
        ls.per_cell_completion.push_back(inst.completion_sum / inst.completions);
    }
    for (LevelStats& ls : stats_.level) {
      const size_t n = ls.per_cell_transfers.size();
      if (n == 0) continue;
      double tsum = 0.0;
      std::vector<double> t(n);
      for (size_t i = 0; i < n; ++i) {
        tsum += static_cast<double>(ls.per_cell_transfers[i]);
        t[i] = static_cast<double>(ls.per_cell_transfers[i]);
      }
      ls.mean_transfers_per_cell = tsum / static_cast<double>(n);
      ls.median_transfers_per_cell = quantile(t, 0.5);
      if (!ls.per_cell_completion.empty()) {
        double csum = 0.0;
        for (double c : ls.per_cell_completion) csum += c;
        ls.mean_completion = csum / static_cast<double>(ls.per_cell_completion.size());
        ls.median_completion = quantile(ls.per_cell_completion, 0.5);
      }
    }
  }

  World world_;
  HierarchyConfig cfg_;
  MobilityConfig mob_cfg_;
  Mobility mobility_;
  Rng rng_;
  EventQueue queue_;
  MessageCounts counts_{};
  Medium medium_;
  HierStats stats_;

  double now_ = 0.0;
  int levels_ = 1;
  std::vector<Instance> instances_;
  size_t done_instances_ = 0;
  std::vector<int> visits_;
  std::vector<int64_t> pending_inst_, pending_round_;
};

}  // namespace

HierStats run_hier(World world, const MobilityConfig& mobility, const HierarchyConfig& cfg,
                   const MediumConfig& medium, uint64_t seed) {
  HierDriver d(std::move(world), mobility, cfg, medium, seed);
  return d.run();
}

std::string hier_csv_header() {
  return "seed,n,delta,level,cells,empty_cells,stranded,messages,transfers,"
         "mean_transfers_per_cell,median_transfers_per_cell,mean_completion,"
         "median_completion";
}

std::string hier_csv_rows(const HierStats& s) {
  std::string out;
  char buf[128];
  for (const LevelStats& ls : s.level) {
    std::snprintf(buf, sizeof(buf), "%llu,%d,%d,%d,",
                  static_cast<unsigned long long>(s.seed), s.n_nodes, s.delta, ls.level);
    out += buf;
    std::snprintf(buf, sizeof(buf), "%d,%d,%d,", ls.cells, ls.empty_cells, ls.stranded);
    out += buf;
    std::snprintf(buf, sizeof(buf), "%lld,%lld,", static_cast<long long>(ls.messages),
                  static_cast<long long>(ls.transfers));
    out += buf;
    std::snprintf(buf, sizeof(buf), "%.12g,%.12g,%.12g,%.12g\n",
                  ls.mean_transfers_per_cell, ls.median_transfers_per_cell,
                  ls.mean_completion, ls.median_completion);
    out += buf;
  }
  return out;
}

}  // namespace ezag
