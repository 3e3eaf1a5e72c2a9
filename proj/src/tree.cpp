#include "ezag/tree.hpp"

#include <algorithm>

namespace ezag {

void TreeOptions::validate() const {
  if (!(refresh_period > 0.0)) throw ConfigError("TreeOptions: refresh_period must be > 0");
  if (!(send_window > 0.0)) throw ConfigError("TreeOptions: send_window must be > 0");
  if (!(retx_timeout > 0.0)) throw ConfigError("TreeOptions: retx_timeout must be > 0");
  if (!(horizon > 0.0)) throw ConfigError("TreeOptions: horizon must be > 0");
  if (!(mobility_dt > 0.0)) throw ConfigError("TreeOptions: mobility_dt must be > 0");
  if (sketch_registers < 1) throw ConfigError("TreeOptions: sketch_registers must be >= 1");
}

namespace {

// Synopsis bundle with exact id accounting (instrumentation mirror of the
// duplicate-insensitive payload).
struct Bundle {
  OdiSynopsis syn;
  std::vector<int> ids;
  std::vector<uint64_t> bits;
  bool nonempty = false;

  void init(const OdiSynopsis& empty, int n) {
    syn = empty;
    ids.clear();
    bits.assign((static_cast<size_t>(n) + 63) / 64, 0);
    nonempty = false;
  }
  bool has(int id) const {
    return bits[static_cast<size_t>(id) >> 6] & (uint64_t{1} << (id & 63));
  }
  void add_id(int id) {
    if (!has(id)) {
      bits[static_cast<size_t>(id) >> 6] |= uint64_t{1} << (id & 63);
      ids.push_back(id);
    }
  }
  void absorb(const Bundle& other) {
    syn.absorb(other.syn);
    for (int id : other.ids) add_id(id);
    nonempty = nonempty || other.nonempty;
  }
  void clear(const OdiSynopsis& empty) {
    syn = empty;
    for (int id : ids)
      bits[static_cast<size_t>(id) >> 6] &= ~(uint64_t{1} << (id & 63));
    ids.clear();
    nonempty = false;
  }
};

struct TreeNode {
  int parent = -1;
  int64_t epoch = 0;
  bool contributed = false;   // own value already queued once
  bool awaiting_ack = false;
  bool send_scheduled = false;
  int64_t inflight_seq = 0;
  int64_t sends_this_bundle = 0;
  Bundle pending;
  Bundle inflight;
};

class TreeDriver {
 public:
  TreeDriver(World world, const MobilityConfig& mobility, const TreeOptions& opt,
             const MediumConfig& med_cfg, uint64_t seed, EventLog* log)
      : world_(std::move(world)),
        opt_(opt),
        mob_cfg_(mobility),
        mobility_(mobility, splitmix64(seed ^ 0x6d6f6269ull)),
        rng_(splitmix64(seed)),
        log_(log),
        medium_(med_cfg, &world_, &queue_, &rng_, &stats_.messages, log) {
    opt_.validate();
    mob_cfg_.validate();
    if (opt_.initiator < 0 || opt_.initiator >= world_.size())
      throw ConfigError("TreeOptions: initiator id out of range");

    stats_.protocol = Protocol::Tree;
    stats_.seed = seed;
    stats_.n_nodes = world_.size();
    stats_.mobility = mob_cfg_.model;
    stats_.speed = mob_cfg_.model == MobilityModel::GaussMarkov
                       ? mob_cfg_.mean_speed
                       : 0.5 * (mob_cfg_.v_low + mob_cfg_.v_high);

    EzagOptions agg;
    agg.aggregate = opt_.aggregate;
    agg.sketch_registers = opt_.sketch_registers;
    agg.sketch_seed = opt_.sketch_seed;
    empty_syn_ = make_aggregate(agg);
    root_syn_ = node_contribution(agg, opt_.initiator);
    agg_opts_ = agg;

    const int n = world_.size();
    nodes_.resize(n);
    for (auto& node : nodes_) {
      node.pending.init(empty_syn_, n);
      node.inflight.init(empty_syn_, n);
    }
    covered_bits_.assign((static_cast<size_t>(n) + 63) / 64, 0);
  }

  TrialStats run(TreeDebug* debug) {
    mobility_.init(world_);
    world_.refresh_index();
    if (mob_cfg_.model != MobilityModel::Static)
      schedule(opt_.mobility_dt, EventKind::MobilityTick);

    const int root = opt_.initiator;
    nodes_[root].epoch = 1;
    set_covered(root);
    medium_.broadcast(0.0, MsgKind::TreeRequest, root, /*epoch=*/1);
    schedule(opt_.refresh_period, EventKind::TreeRefresh);
    if (covered_count_ == world_.size()) finish(0.0);

    while (!done_ && !queue_.empty()) {
      if (queue_.top().t > opt_.horizon) {
        stats_.complete = false;
        stats_.completion_time = opt_.horizon;
        break;
      }
      const Event e = queue_.pop();
      now_ = e.t;
      if (log_ && log_->enabled() && e.kind == EventKind::Delivery)
        log_->record(e.t, "deliver", e.msg, e.from, e.to);
      handle(e);
    }

    stats_.covered = covered_count_;
    stats_.visits = world_.visit_count;  // all zero: no token in this protocol
    if (stats_.complete) {
      if (opt_.aggregate == SynopsisKind::CountSketch) {
        stats_.final_value = root_syn_.estimate_count();
        stats_.has_final_value = true;
      } else if (!root_syn_.empty()) {
        stats_.final_value = root_syn_.value();
        stats_.has_final_value = true;
      }
    }
    if (debug) {
      debug->parents.resize(nodes_.size());
      debug->epochs.resize(nodes_.size());
      for (size_t i = 0; i < nodes_.size(); ++i) {
        debug->parents[i] = nodes_[i].parent;
        debug->epochs[i] = nodes_[i].epoch;
      }
      debug->max_sends_per_bundle = max_sends_per_bundle_;
    }
    return std::move(stats_);
  }

 private:
  void schedule(double dt, EventKind kind, int64_t a = 0, int64_t b = 0, int from = -1) {
    Event e;
    e.t = now_ + dt;
    e.kind = kind;
    e.from = from;
    e.a = a;
    e.b = b;
    queue_.push(e);
  }

  void set_covered(int id) {
    uint64_t& word = covered_bits_[static_cast<size_t>(id) >> 6];
    const uint64_t bit = uint64_t{1} << (id & 63);
    if (!(word & bit)) {
      word |= bit;
      ++covered_count_;
    }
  }

  void finish(double t) {
    stats_.complete = true;
    stats_.completion_time = t;
    done_ = true;
  }

  void maybe_schedule_send(int v) {
    TreeNode& node = nodes_[v];
    if (node.send_scheduled || node.awaiting_ack || !node.pending.nonempty) return;
    node.send_scheduled = true;
    schedule(rng_.uniform(0.0, opt_.send_window), EventKind::TreeSend, node.epoch, 0, v);
  }

  void handle(const Event& e) {
    switch (e.kind) {
      case EventKind::Delivery: on_delivery(e); return;
      case EventKind::MobilityTick:
        mobility_.step(world_, opt_.mobility_dt);
        if (!done_) schedule(opt_.mobility_dt, EventKind::MobilityTick);
        return;
      case EventKind::TreeRefresh: {
        const int root = opt_.initiator;
        ++nodes_[root].epoch;
        medium_.broadcast(now_, MsgKind::TreeRequest, root, nodes_[root].epoch);
        schedule(opt_.refresh_period, EventKind::TreeRefresh);
        return;
      }
      case EventKind::TreeSend: on_send(e); return;
      case EventKind::TreeRetx: on_retx(e); return;
      default: return;
    }
  }

  void on_delivery(const Event& e) {
    const int v = e.to;
    TreeNode& node = nodes_[v];
    switch (e.msg) {
      case MsgKind::TreeRequest:
        if (v == opt_.initiator || e.a <= node.epoch) return;
        node.epoch = e.a;
        node.parent = e.from;
        medium_.broadcast(now_, MsgKind::TreeRequest, v, e.a);
        if (node.awaiting_ack) {
          // Unacked data is re-homed: fold it back into the queue and retry
          // under the new parent.
          node.pending.absorb(node.inflight);
          node.awaiting_ack = false;
        }
        if (!node.contributed) {
          node.contributed = true;
          node.pending.syn.absorb(node_contribution(agg_opts_, v));
          node.pending.add_id(v);
          node.pending.nonempty = true;
        }
        maybe_schedule_send(v);
        return;
      case MsgKind::TreeData: {
        if (e.a < node.epoch) return;  // never ack data from an older epoch
        const int child = e.from;
        medium_.unicast(now_, MsgKind::TreeAck, v, child, e.a, e.b);
        // Fold the child's in-flight bundle. Re-delivery is harmless: the
        // payload is duplicate-insensitive and ids dedupe.
        const Bundle& bundle = nodes_[child].inflight;
        if (v == opt_.initiator) {
          root_syn_.absorb(bundle.syn);
          for (int id : bundle.ids) set_covered(id);
          if (covered_count_ == world_.size()) finish(now_);
        } else {
          node.pending.absorb(bundle);
          maybe_schedule_send(v);
        }
        return;
      }
      case MsgKind::TreeAck:
        if (node.awaiting_ack && e.b == node.inflight_seq) {
          node.awaiting_ack = false;
          maybe_schedule_send(v);
        }
        return;
      default: return;
    }
  }

  void on_send(const Event& e) {
    const int v = e.from;
    TreeNode& node = nodes_[v];
    node.send_scheduled = false;
    if (node.awaiting_ack || !node.pending.nonempty || node.parent < 0) return;
    // Move the queue into the in-flight bundle (opportunistic aggregation:
    // everything queued goes out as one message).
    std::swap(node.pending, node.inflight);
    node.pending.clear(empty_syn_);
    node.awaiting_ack = true;
    node.inflight_seq = ++seq_counter_;
    node.sends_this_bundle = 1;
    medium_.unicast(now_, MsgKind::TreeData, v, node.parent, node.epoch,
                    node.inflight_seq);
    schedule(opt_.retx_timeout, EventKind::TreeRetx, 0, node.inflight_seq, v);
  }

  void on_retx(const Event& e) {
    const int v = e.from;
    TreeNode& node = nodes_[v];
    if (!node.awaiting_ack || e.b != node.inflight_seq) return;  // acked or re-homed
    // Extend the bundle with anything queued since, then retransmit under a
    // fresh sequence number.
    if (node.pending.nonempty) {
      node.inflight.absorb(node.pending);
      node.pending.clear(empty_syn_);
    }
    node.inflight_seq = ++seq_counter_;
    ++node.sends_this_bundle;
    max_sends_per_bundle_ = std::max(max_sends_per_bundle_, node.sends_this_bundle);
    medium_.unicast(now_, MsgKind::TreeData, v, node.parent, node.epoch,
                    node.inflight_seq);
    schedule(opt_.retx_timeout, EventKind::TreeRetx, 0, node.inflight_seq, v);
  }

  World world_;
  TreeOptions opt_;
  MobilityConfig mob_cfg_;
  Mobility mobility_;
  Rng rng_;
  EventLog* log_ = nullptr;
  EventQueue queue_;
  TrialStats stats_;
  Medium medium_;
  EzagOptions agg_opts_;

  double now_ = 0.0;
  std::vector<TreeNode> nodes_;
  OdiSynopsis empty_syn_, root_syn_;
  std::vector<uint64_t> covered_bits_;
  int covered_count_ = 0;
  int64_t seq_counter_ = 0;
  int64_t max_sends_per_bundle_ = 1;
  bool done_ = false;
};

}  // namespace

TrialStats run_tree(World world, const MobilityConfig& mobility, const TreeOptions& opt,
                    const MediumConfig& medium, uint64_t seed, EventLog* log,
                    TreeDebug* debug) {
  TreeDriver d(std::move(world), mobility, opt, medium, seed, log);
  return d.run(debug);
}

}  // namespace ezag
