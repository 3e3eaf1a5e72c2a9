#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ezag/mobility.hpp"
#include "ezag/netsim.hpp"

namespace ezag {

enum class Protocol : uint8_t { Ezag = 0, Srrw, PlainRw, Tree };

const char* to_string(Protocol p);
bool parse_protocol(const std::string& name, Protocol& out);

// One completed (or timed-out) simulation run.
struct TrialStats {
  Protocol protocol = Protocol::Ezag;
  uint64_t seed = 0;
  int n_nodes = 0;
  MobilityModel mobility = MobilityModel::Static;
  double speed = 0.0;

  MessageCounts messages{};
  int64_t transfers = 0;
  int covered = 0;                 // distinct node ids aggregated
  bool complete = false;           // run goal reached before the horizon
  double completion_time = 0.0;    // simulated seconds at finish/stop
  int isolation_events = 0;        // zero-request announce give-ups

  // (transfers, |covered|) at the start and after every accepted transfer.
  std::vector<std::pair<int64_t, int>> coverage_curve;
  // Per-node exclusive-visit counts at the end of the run.
  std::vector<int> visits;
  // Holder ids in visit order (instrumentation).
  std::vector<int> holder_sequence;
  // Per-round (selected requester's advertised visits, min advertised visits).
  std::vector<std::pair<int, int>> selection_trace;

  double final_value = 0.0;        // scalar result (MAX/MIN) or count estimate
  bool has_final_value = false;

  int64_t total() const { return total_messages(messages); }
  double requests_per_transfer() const;
  int max_visits() const;
  std::map<int, int> visit_histogram() const;
};

// Transfers divided by |covered| at the first curve point where |covered| >=
// fraction * N. Returns NaN when the fraction was never reached.
double exploration_overhead(const TrialStats& stats, double at_coverage_fraction);

// Population variance (1/N) * sum (n_i - mean)^2 of per-node visit counts.
double visit_variance(const std::vector<int>& visits);
double visit_variance(const std::map<int, int>& histogram);

struct BatchSummary {
  int count = 0;
  double median = 0.0, q1 = 0.0, q3 = 0.0, min = 0.0, max = 0.0;
};

// Quantile with linear interpolation over a sorted copy; NaN entries are
// dropped first.
double quantile(std::vector<double> values, double q);
BatchSummary summarize(const std::vector<double>& values);

// CSV emission. Schemas are fixed; see README for column meanings.
std::string trial_csv_header();
std::string trial_csv_row(const TrialStats& s);

}  // namespace ezag
