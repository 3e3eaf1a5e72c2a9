#include "ezag/protocol.hpp"

#include <algorithm>
#include <cmath>

namespace ezag {

void EzagOptions::validate() const {
  if (!(request_window > 0.0)) throw ConfigError("EzagOptions: request_window must be > 0");
  if (request_slope < 0.0) throw ConfigError("EzagOptions: request_slope must be >= 0");
  if (!(transfer_timeout > 0.0))
    throw ConfigError("EzagOptions: transfer_timeout must be > 0");
  if (max_announce_attempts < 1)
    throw ConfigError("EzagOptions: max_announce_attempts must be >= 1");
  if (!(horizon > 0.0)) throw ConfigError("EzagOptions: horizon must be > 0");
  if (!(mobility_dt > 0.0)) throw ConfigError("EzagOptions: mobility_dt must be > 0");
  if (token_start_delay < 0.0)
    throw ConfigError("EzagOptions: token_start_delay must be >= 0");
  if (max_transfers < 0) throw ConfigError("EzagOptions: max_transfers must be >= 0");
  if (sketch_registers < 1) throw ConfigError("EzagOptions: sketch_registers must be >= 1");
}

OdiSynopsis make_aggregate(const EzagOptions& opt) {
  switch (opt.aggregate) {
    case SynopsisKind::Max: return OdiSynopsis::make_max();
    case SynopsisKind::Min: return OdiSynopsis::make_min();
    case SynopsisKind::CountSketch:
      return OdiSynopsis::make_count(opt.sketch_registers, opt.sketch_seed);
  }
  return OdiSynopsis::make_max();
}

OdiSynopsis node_contribution(const EzagOptions& opt, int id) {
  OdiSynopsis s = make_aggregate(opt);
  s.insert_node(id);
  return s;
}

namespace {

class Driver {
 public:
  Driver(World world, const MobilityConfig& mobility, const EzagOptions& opt,
         const MediumConfig& med_cfg, uint64_t seed, Protocol label, EventLog* log)
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
      throw ConfigError("EzagOptions: initiator id out of range");

    stats_.protocol = label;
    stats_.seed = seed;
    stats_.n_nodes = world_.size();
    stats_.mobility = mob_cfg_.model;
    stats_.speed = mob_cfg_.model == MobilityModel::GaussMarkov
                       ? mob_cfg_.mean_speed
                       : 0.5 * (mob_cfg_.v_low + mob_cfg_.v_high);

    const int n = world_.size();
    got_request_.assign(n, 0);
    got_result_.assign(n, 0);
    pending_round_.assign(n, -1);
    if (opt_.push_enabled) {
      push_syn_.reserve(n);
      push_cover_.resize(n);
      for (int i = 0; i < n; ++i) {
        push_syn_.push_back(node_contribution(opt_, i));
        push_cover_[i].push_back(i);
      }
    }
    token_syn_ = make_aggregate(opt_);
    covered_bits_.assign((static_cast<size_t>(n) + 63) / 64, 0);
  }

  TrialStats run() {
    mobility_.init(world_);
    world_.refresh_index();
    if (mob_cfg_.model != MobilityModel::Static)
      schedule(opt_.mobility_dt, EventKind::MobilityTick);

    // The initiator floods the aggregate request and pushes like everyone else;
    // its own first token visit happens shortly after, once nearby pushes have
    // had time to land.
    got_request_[opt_.initiator] = 1;
    flood_outstanding_ += medium_.broadcast(0.0, MsgKind::AggRequestFlood, opt_.initiator);
    if (opt_.push_enabled)
      flood_outstanding_ += medium_.broadcast(0.0, MsgKind::Push, opt_.initiator);
    if (opt_.stop_after == StopAfter::Full) {
      schedule(opt_.token_start_delay, EventKind::TokenStart);
    } else if (flood_outstanding_ == 0) {
      // Single-node world: the dissemination phases are already over.
      finish(now_);
    }

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
    if (!done_ && queue_.empty()) stats_.completion_time = now_;

    stats_.covered = covered_count_;
    stats_.visits = world_.visit_count;
    return std::move(stats_);
  }

 private:
  void schedule(double dt, EventKind kind, int64_t a = 0, int from = -1) {
    Event e;
    e.t = now_ + dt;
    e.kind = kind;
    e.from = from;
    e.a = a;
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

  void handle(const Event& e) {
    switch (e.kind) {
      case EventKind::Delivery: on_delivery(e); return;
      case EventKind::MobilityTick:
        mobility_.step(world_, opt_.mobility_dt);
        if (!done_) schedule(opt_.mobility_dt, EventKind::MobilityTick);
        return;
      case EventKind::TokenStart:
        visit(opt_.initiator, /*initial=*/true);
        return;
      case EventKind::RequestFire: on_request_fire(e); return;
      case EventKind::WindowClose: on_window_close(e); return;
      case EventKind::TransferTimeout:
        // Still in the same round: the transfer (or the whole window) went
        // unanswered, so the holder runs another round.
        if (!aggregation_done_ && e.a == round_id_) announce();
        return;
      default: return;
    }
  }

  void on_delivery(const Event& e) {
    const int v = e.to;
    switch (e.msg) {
      case MsgKind::AggRequestFlood:
        --flood_outstanding_;
        if (!got_request_[v]) {
          got_request_[v] = 1;
          flood_outstanding_ += medium_.broadcast(now_, MsgKind::AggRequestFlood, v);
          if (opt_.push_enabled)
            flood_outstanding_ += medium_.broadcast(now_, MsgKind::Push, v);
        }
        check_phase_stop();
        return;
      case MsgKind::Push:
        --flood_outstanding_;
        if (opt_.push_enabled) {
          push_syn_[v].absorb(node_contribution(opt_, e.from));
          push_cover_[v].push_back(e.from);
        }
        check_phase_stop();
        return;
      case MsgKind::TokenAnnounce: {
        if (aggregation_done_ || e.a != round_id_ || !window_open_) return;
        const double t_r =
            opt_.selection == SelectionRule::UniformRandom
                ? rng_.uniform(0.0, opt_.request_window)
                : std::min(rng_.uniform(0.0, opt_.request_window) +
                               opt_.request_slope * world_.visit_count[v],
                           opt_.request_window);
        pending_round_[v] = e.a;
        schedule(t_r, EventKind::RequestFire, e.a, v);
        return;
      }
      case MsgKind::TokenRequest:
        if (aggregation_done_) return;
        if (v == holder_) {
          if (e.a == round_id_ && window_open_)
            requests_.emplace_back(static_cast<int>(e.b), e.from);
        } else if (opt_.suppression && pending_round_[v] == e.a &&
                   e.b <= world_.visit_count[v]) {
          // Someone visited no more often than us already asked; stand down.
          pending_round_[v] = -1;
        }
        return;
      case MsgKind::TokenTransfer:
        if (aggregation_done_ || e.a != round_id_) return;
        visit(v, /*initial=*/false);
        return;
      case MsgKind::ResultFlood:
        --result_outstanding_;
        if (!got_result_[v]) {
          got_result_[v] = 1;
          result_outstanding_ += medium_.broadcast(now_, MsgKind::ResultFlood, v);
        }
        if (result_outstanding_ == 0) finish(now_);
        return;
      default: return;
    }
  }

  void check_phase_stop() {
    if (opt_.stop_after != StopAfter::Full && flood_outstanding_ == 0) finish(now_);
  }

  void on_request_fire(const Event& e) {
    const int v = e.from;
    if (aggregation_done_ || e.a != round_id_ || pending_round_[v] != e.a) return;
    if (!window_open_) return;
    pending_round_[v] = -1;
    medium_.broadcast(now_, MsgKind::TokenRequest, v, round_id_, world_.visit_count[v]);
  }

  void on_window_close(const Event& e) {
    if (aggregation_done_ || e.a != round_id_ || !window_open_) return;
    window_open_ = false;
    if (requests_.empty()) {
      if (++silent_rounds_ >= opt_.max_announce_attempts) {
        // Nobody in range answered repeatedly; report isolation and stop.
        ++stats_.isolation_events;
        stats_.complete = false;
        stats_.completion_time = now_;
        done_ = true;
        return;
      }
      schedule(opt_.transfer_timeout, EventKind::TransferTimeout, round_id_);
      return;
    }
    silent_rounds_ = 0;

    int min_visits = requests_[0].first;
    for (const auto& [visits, id] : requests_) min_visits = std::min(min_visits, visits);
    int pick = 0;
    if (opt_.selection == SelectionRule::UniformRandom) {
      pick = rng_.index(static_cast<int>(requests_.size()));
    } else {
      int ties = 0;
      for (const auto& [visits, id] : requests_)
        if (visits == min_visits) ++ties;
      int which = rng_.index(ties);
      for (size_t i = 0; i < requests_.size(); ++i) {
        if (requests_[i].first == min_visits && which-- == 0) {
          pick = static_cast<int>(i);
          break;
        }
      }
    }
    const auto [advertised, winner] = requests_[static_cast<size_t>(pick)];
    if (opt_.record_selection_trace)
      stats_.selection_trace.emplace_back(advertised, min_visits);
    medium_.unicast(now_, MsgKind::TokenTransfer, holder_, winner, round_id_);
    schedule(opt_.transfer_timeout, EventKind::TransferTimeout, round_id_);
  }

  void visit(int v, bool initial) {
    holder_ = v;
    ++world_.visit_count[v];
    if (!initial) ++stats_.transfers;
    stats_.holder_sequence.push_back(v);
    if (opt_.push_enabled) {
      token_syn_.absorb(push_syn_[v]);
      for (int id : push_cover_[v]) set_covered(id);
    } else {
      token_syn_.absorb(node_contribution(opt_, v));
      set_covered(v);
    }
    stats_.coverage_curve.emplace_back(stats_.transfers, covered_count_);

    const bool walk_done =
        opt_.mode == RunMode::CoverageOracle
            ? covered_count_ == world_.size()
            : stats_.transfers >= world_.size();
    if (walk_done || (opt_.max_transfers > 0 && stats_.transfers >= opt_.max_transfers)) {
      finish_aggregation();
      return;
    }
    announce();
  }

  void announce() {
    ++round_id_;
    requests_.clear();
    window_open_ = true;
    medium_.broadcast(now_, MsgKind::TokenAnnounce, holder_, round_id_);
    // Latest possible request arrival: announce delivery + capped timer +
    // request latency, each with jitter, plus a small margin.
    const auto& mc = medium_.config();
    const double close_after = mc.announce_latency * (1.0 + mc.jitter) +
                               opt_.request_window +
                               mc.request_latency * (1.0 + mc.jitter) + 2e-4;
    schedule(close_after, EventKind::WindowClose, round_id_);
  }

  void finish_aggregation() {
    aggregation_done_ = true;
    stats_.complete = covered_count_ == world_.size();
    if (opt_.aggregate == SynopsisKind::CountSketch) {
      stats_.final_value = token_syn_.estimate_count();
      stats_.has_final_value = true;
    } else if (!token_syn_.empty()) {
      stats_.final_value = token_syn_.value();
      stats_.has_final_value = true;
    }
    got_result_[holder_] = 1;
    result_outstanding_ += medium_.broadcast(now_, MsgKind::ResultFlood, holder_);
    if (result_outstanding_ == 0) finish(now_);
  }

  void finish(double t) {
    stats_.completion_time = t;
    done_ = true;
  }

  World world_;
  EzagOptions opt_;
  MobilityConfig mob_cfg_;
  Mobility mobility_;
  Rng rng_;
  EventLog* log_ = nullptr;
  EventQueue queue_;
  TrialStats stats_;
  Medium medium_;

  double now_ = 0.0;
  std::vector<uint8_t> got_request_, got_result_;
  std::vector<OdiSynopsis> push_syn_;
  std::vector<std::vector<int>> push_cover_;
  std::vector<int64_t> pending_round_;
  int flood_outstanding_ = 0;
  int result_outstanding_ = 0;

  int holder_ = -1;
  int64_t round_id_ = 0;
  int silent_rounds_ = 0;
  bool window_open_ = false;
  bool aggregation_done_ = false;
  bool done_ = false;
  std::vector<std::pair<int, int>> requests_;  // (advertised visits, node id)
  OdiSynopsis token_syn_;
  std::vector<uint64_t> covered_bits_;
  int covered_count_ = 0;
};

}  // namespace

TrialStats run_ezag(World world, const MobilityConfig& mobility, const EzagOptions& opt,
                    const MediumConfig& medium, uint64_t seed, EventLog* log) {
  Driver d(std::move(world), mobility, opt, medium, seed,
           opt.push_enabled ? Protocol::Ezag : Protocol::Srrw, log);
  return d.run();
}

TrialStats run_srrw(World world, const MobilityConfig& mobility, EzagOptions opt,
                    const MediumConfig& medium, uint64_t seed, EventLog* log) {
  opt.push_enabled = false;
  opt.selection = SelectionRule::MinVisits;
  opt.suppression = true;
  Driver d(std::move(world), mobility, opt, medium, seed, Protocol::Srrw, log);
  return d.run();
}

TrialStats run_plain_rw(World world, const MobilityConfig& mobility, EzagOptions opt,
                        const MediumConfig& medium, uint64_t seed, EventLog* log) {
  opt.push_enabled = false;
  opt.selection = SelectionRule::UniformRandom;
  opt.suppression = false;
  Driver d(std::move(world), mobility, opt, medium, seed, Protocol::PlainRw, log);
  return d.run();
}

}  // namespace ezag
