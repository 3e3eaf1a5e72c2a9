#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <queue>
#include <string>
#include <vector>

#include "ezag/rng.hpp"
#include "ezag/world.hpp"

namespace ezag {

enum class MsgKind : uint8_t {
  AggRequestFlood = 0,
  Push,
  TokenAnnounce,
  TokenRequest,
  TokenTransfer,
  ResultFlood,
  TreeRequest,
  TreeData,
  TreeAck,
};
constexpr int kMsgKindCount = 9;

const char* to_string(MsgKind k);

using MessageCounts = std::array<int64_t, kMsgKindCount>;

inline int64_t total_messages(const MessageCounts& m) {
  int64_t t = 0;
  for (int64_t v : m) t += v;
  return t;
}

enum class EventKind : uint8_t {
  Delivery = 0,     // message arrival at `to`
  MobilityTick,
  RequestFire,      // node decides to transmit its queued token request
  WindowClose,      // holder closes the request-collection window
  TransferTimeout,  // holder re-announces if the transfer went unanswered
  TokenStart,       // initiator performs its initial visit
  TreeSend,         // node transmits its pending bundle upstream
  TreeRetx,         // retransmit an unacknowledged bundle
  TreeRefresh,      // root re-floods the request with a new epoch
  InstanceStart,    // hierarchy: per-cell instance kickoff
};

// POD event; `a`, `b`, `c` are kind-specific fields (round ids, instance ids,
// advertised visit counts, epochs, ...).
struct Event {
  double t = 0.0;
  uint64_t seq = 0;
  EventKind kind = EventKind::Delivery;
  MsgKind msg = MsgKind::AggRequestFlood;
  int32_t from = -1;
  int32_t to = -1;
  int64_t a = 0;
  int64_t b = 0;
  int64_t c = 0;
};

// Deterministic queue: pops in (fire_time, insertion sequence) order.
class EventQueue {
 public:
  void push(Event e) {
    e.seq = next_seq_++;
    heap_.push(e);
  }
  bool empty() const { return heap_.empty(); }
  const Event& top() const { return heap_.top(); }
  Event pop() {
    Event e = heap_.top();
    heap_.pop();
    return e;
  }
  size_t size() const { return heap_.size(); }

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.t != b.t) return a.t > b.t;
      return a.seq > b.seq;
    }
  };
  std::priority_queue<Event, std::vector<Event>, Later> heap_;
  uint64_t next_seq_ = 0;
};

struct MediumConfig {
  // Mean one-hop latencies by role, seconds. Announce + the 9 ms request
  // window + transfer make up the nominal 25 ms token transaction. Token
  // requests are short control packets: competitors react (suppress) at
  // header-detection time, so their delivery latency is carrier-sense scale,
  // well under the window granularity.
  double flood_latency = 0.002;     // request/result flood and push hops
  double announce_latency = 0.008;
  double request_latency = 0.0001;
  double transfer_latency = 0.008;
  double data_latency = 0.008;      // tree data
  double ack_latency = 0.001;       // tree ack
  double jitter = 0.2;              // +- fraction of the mean, uniform
  double loss_probability = 0.0;    // independent per delivery
  // Token requests are overheard for suppression out to the carrier-sense
  // range, a multiple of the data range (sensing reaches beyond decoding).
  double sense_range_factor = 2.0;
  // Reception has no hard edge: one-shot broadcasts beyond the nominal range
  // still decode with a probability that falls linearly to zero at
  // gray_range_factor times the range (fading margin). Unicast transfers ride
  // link-layer retries and stay reliable across the whole gray zone. 1.0
  // restores a sharp disk.
  double gray_range_factor = 1.0;

  void validate() const;
  double mean_latency(MsgKind k) const;
};

// Optional CSV event log: one line per send (`receiver` = -1) and per
// delivery. Lines go to an owned buffer fetched at the end of the run.
class EventLog {
 public:
  void enable() { enabled_ = true; }
  bool enabled() const { return enabled_; }
  void record(double t, const char* what, MsgKind k, int sender, int receiver);
  const std::string& text() const { return text_; }

 private:
  bool enabled_ = false;
  std::string text_;
};

// Broadcast medium over the world's current neighbor sets. One transmitted
// message = one counter increment regardless of receiver count; unicast is a
// broadcast heard only by its addressee.
class Medium {
 public:
  Medium(const MediumConfig& cfg, World* world, EventQueue* queue, Rng* rng,
         MessageCounts* counts, EventLog* log);

  // Returns the number of delivery events scheduled.
  int broadcast(double now, MsgKind kind, int from, int64_t a = 0, int64_t b = 0,
                int64_t c = 0);
  // Delivered only if the addressee is currently in range.
  int unicast(double now, MsgKind kind, int from, int to, int64_t a = 0, int64_t b = 0,
              int64_t c = 0);

  const MediumConfig& config() const { return cfg_; }

 private:
  double draw_latency(MsgKind kind);

  MediumConfig cfg_;
  World* world_;
  EventQueue* queue_;
  Rng* rng_;
  MessageCounts* counts_;
  EventLog* log_;
};

}  // namespace ezag
