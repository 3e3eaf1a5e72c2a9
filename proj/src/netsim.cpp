#include "ezag/netsim.hpp"

namespace ezag {

const char* to_string(MsgKind k) {
  switch (k) {
    case MsgKind::AggRequestFlood: return "AGG_REQUEST_FLOOD";
    case MsgKind::Push: return "PUSH";
    case MsgKind::TokenAnnounce: return "TOKEN_ANNOUNCE";
    case MsgKind::TokenRequest: return "TOKEN_REQUEST";
    case MsgKind::TokenTransfer: return "TOKEN_TRANSFER";
    case MsgKind::ResultFlood: return "RESULT_FLOOD";
    case MsgKind::TreeRequest: return "TREE_REQUEST";
    case MsgKind::TreeData: return "TREE_DATA";
    case MsgKind::TreeAck: return "TREE_ACK";
  }
  return "?";
}

void MediumConfig::validate() const {
  for (double l : {flood_latency, announce_latency, request_latency, transfer_latency,
                   data_latency, ack_latency})
    if (!(l > 0.0)) throw ConfigError("MediumConfig: latencies must be > 0");
  if (jitter < 0.0 || jitter >= 1.0)
    throw ConfigError("MediumConfig: jitter must be within [0, 1)");
  if (loss_probability < 0.0 || loss_probability >= 1.0)
    throw ConfigError("MediumConfig: loss_probability must be within [0, 1)");
  if (sense_range_factor < 1.0)
    throw ConfigError("MediumConfig: sense_range_factor must be >= 1");
  if (gray_range_factor < 1.0)
    throw ConfigError("MediumConfig: gray_range_factor must be >= 1");
  if (gray_range_factor > sense_range_factor)
    throw ConfigError("MediumConfig: gray_range_factor must not exceed sense_range_factor");
}

double MediumConfig::mean_latency(MsgKind k) const {
  switch (k) {
    case MsgKind::AggRequestFlood:
    case MsgKind::Push:
    case MsgKind::ResultFlood:
    case MsgKind::TreeRequest: return flood_latency;
    case MsgKind::TokenAnnounce: return announce_latency;
    case MsgKind::TokenRequest: return request_latency;
    case MsgKind::TokenTransfer: return transfer_latency;
    case MsgKind::TreeData: return data_latency;
    case MsgKind::TreeAck: return ack_latency;
  }
  return flood_latency;
}

void EventLog::record(double t, const char* what, MsgKind k, int sender, int receiver) {
  if (!enabled_) return;
  char line[96];
  std::snprintf(line, sizeof(line), "%.9f,%s,%s,%d,%d\n", t, what, to_string(k), sender,
                receiver);
  text_ += line;
}

Medium::Medium(const MediumConfig& cfg, World* world, EventQueue* queue, Rng* rng,
               MessageCounts* counts, EventLog* log)
    : cfg_(cfg), world_(world), queue_(queue), rng_(rng), counts_(counts), log_(log) {
  cfg_.validate();
}

double Medium::draw_latency(MsgKind kind) {
  const double mean = cfg_.mean_latency(kind);
  return mean * (1.0 + cfg_.jitter * (2.0 * rng_->uniform01() - 1.0));
}

int Medium::broadcast(double now, MsgKind kind, int from, int64_t a, int64_t b,
                      int64_t c) {
  ++(*counts_)[static_cast<size_t>(kind)];
  if (log_ && log_->enabled()) log_->record(now, "send", kind, from, -1);
  // Long data frames (floods, pushes, tree traffic) decode only inside the
  // nominal range. Short control frames go out at base rate: requests are
  // overheard for suppression to the sense range, and announces decode with
  // falling probability across the gray zone.
  const double comm = world_->config().comm_range;
  const bool soft = kind == MsgKind::TokenAnnounce && cfg_.gray_range_factor > 1.0;
  double range = comm;
  if (kind == MsgKind::TokenRequest) range = cfg_.sense_range_factor * comm;
  if (soft) range = cfg_.gray_range_factor * comm;
  // One latency draw per transmission: a broadcast reaches every receiver at
  // (essentially) the same instant; jitter models the sender's airtime.
  const double latency = draw_latency(kind);
  int delivered = 0;
  world_->for_each_within(from, range, [&](int to) {
    if (soft) {
      const double d = (world_->pos[to] - world_->pos[from]).norm();
      if (d > comm && !rng_->chance((range - d) / (range - comm))) return;
    }
    if (cfg_.loss_probability > 0.0 && rng_->chance(cfg_.loss_probability)) return;
    Event e;
    e.t = now + latency;
    e.kind = EventKind::Delivery;
    e.msg = kind;
    e.from = from;
    e.to = to;
    e.a = a;
    e.b = b;
    e.c = c;
    queue_->push(e);
    ++delivered;
  });
  return delivered;
}

int Medium::unicast(double now, MsgKind kind, int from, int to, int64_t a, int64_t b,
                    int64_t c) {
  ++(*counts_)[static_cast<size_t>(kind)];
  if (log_ && log_->enabled()) log_->record(now, "send", kind, from, to);
  const double reach = cfg_.gray_range_factor * world_->config().comm_range;
  if ((world_->pos[to] - world_->pos[from]).norm() > reach) return 0;
  if (cfg_.loss_probability > 0.0 && rng_->chance(cfg_.loss_probability)) return 0;
  Event e;
  e.t = now + draw_latency(kind);
  e.kind = EventKind::Delivery;
  e.msg = kind;
  e.from = from;
  e.to = to;
  e.a = a;
  e.b = b;
  e.c = c;
  queue_->push(e);
  return 1;
}

}  // namespace ezag
