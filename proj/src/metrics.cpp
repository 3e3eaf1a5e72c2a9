#include "ezag/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace ezag {

const char* to_string(Protocol p) {
  switch (p) {
    case Protocol::Ezag: return "ezag";
    case Protocol::Srrw: return "srrw";
    case Protocol::PlainRw: return "plain_rw";
    case Protocol::Tree: return "tree";
  }
  return "?";
}

bool parse_protocol(const std::string& name, Protocol& out) {
  if (name == "ezag") out = Protocol::Ezag;
  else if (name == "srrw") out = Protocol::Srrw;
  else if (name == "plain_rw") out = Protocol::PlainRw;
  else if (name == "tree") out = Protocol::Tree;
  else return false;
  return true;
}

double TrialStats::requests_per_transfer() const {
  if (transfers == 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(messages[static_cast<size_t>(MsgKind::TokenRequest)]) /
         static_cast<double>(transfers);
}

int TrialStats::max_visits() const {
  int m = 0;
  for (int v : visits) m = std::max(m, v);
  return m;
}

std::map<int, int> TrialStats::visit_histogram() const {
  std::map<int, int> h;
  for (int v : visits) ++h[v];
  return h;
}

double exploration_overhead(const TrialStats& stats, double at_coverage_fraction) {
  const double target = at_coverage_fraction * stats.n_nodes;
  for (const auto& [transfers, covered] : stats.coverage_curve)
    if (static_cast<double>(covered) >= target)
      return covered > 0 ? static_cast<double>(transfers) / covered
                         : std::numeric_limits<double>::quiet_NaN();
  return std::numeric_limits<double>::quiet_NaN();
}

double visit_variance(const std::vector<int>& visits) {
  if (visits.empty()) throw ConfigError("visit_variance: empty visit set");
  double mean = 0.0;
  for (int v : visits) mean += v;
  mean /= static_cast<double>(visits.size());
  double acc = 0.0;
  for (int v : visits) acc += (v - mean) * (v - mean);
  return acc / static_cast<double>(visits.size());
}

double visit_variance(const std::map<int, int>& histogram) {
  int64_t n = 0;
  double sum = 0.0;
  for (const auto& [v, c] : histogram) {
    n += c;
    sum += static_cast<double>(v) * c;
  }
  if (n == 0) throw ConfigError("visit_variance: empty histogram");
  const double mean = sum / static_cast<double>(n);
  double acc = 0.0;
  for (const auto& [v, c] : histogram) acc += c * (v - mean) * (v - mean);
  return acc / static_cast<double>(n);
}

double quantile(std::vector<double> values, double q) {
  values.erase(std::remove_if(values.begin(), values.end(),
                              [](double v) { return std::isnan(v); }),
               values.end());
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const double idx = q * static_cast<double>(values.size() - 1);
  const size_t lo = static_cast<size_t>(idx);
  const size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = idx - static_cast<double>(lo);
  return values[lo] * (1.0 - frac) + values[hi] * frac;
}

BatchSummary summarize(const std::vector<double>& values) {
  BatchSummary s;
  std::vector<double> clean;
  clean.reserve(values.size());
  for (double v : values)
    if (!std::isnan(v)) clean.push_back(v);
  s.count = static_cast<int>(clean.size());
  if (clean.empty()) {
    s.median = s.q1 = s.q3 = s.min = s.max = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  std::sort(clean.begin(), clean.end());
  s.min = clean.front();
  s.max = clean.back();
  s.median = quantile(clean, 0.5);
  s.q1 = quantile(clean, 0.25);
  s.q3 = quantile(clean, 0.75);
  return s;
}

namespace {

// Fixed numeric formatting so identical runs produce byte-identical CSV.
std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace

std::string trial_csv_header() {
  return "protocol,seed,n,mobility,speed,flood_msgs,push_msgs,announce_msgs,"
         "request_msgs,transfer_msgs,result_msgs,tree_request_msgs,tree_data_msgs,"
         "tree_ack_msgs,total_msgs,transfers,covered,complete,completion_time,"
         "overhead_full,overhead_85,visit_variance,max_visits,requests_per_transfer,"
         "isolation_events,final_value";
}

std::string trial_csv_row(const TrialStats& s) {
  std::string row;
  row += to_string(s.protocol);
  row += ',';
  row += std::to_string(s.seed);
  row += ',';
  row += std::to_string(s.n_nodes);
  row += ',';
  row += to_string(s.mobility);
  row += ',';
  row += fmt(s.speed);
  for (int64_t m : s.messages) {
    row += ',';
    row += std::to_string(m);
  }
  row += ',';
  row += std::to_string(s.total());
  row += ',';
  row += std::to_string(s.transfers);
  row += ',';
  row += std::to_string(s.covered);
  row += ',';
  row += s.complete ? "1" : "0";
  row += ',';
  row += fmt(s.completion_time);
  row += ',';
  row += fmt(exploration_overhead(s, 1.0));
  row += ',';
  row += fmt(exploration_overhead(s, 0.85));
  row += ',';
  row += s.visits.empty() ? "nan" : fmt(visit_variance(s.visits));
  row += ',';
  row += std::to_string(s.max_visits());
  row += ',';
  row += fmt(s.requests_per_transfer());
  row += ',';
  row += std::to_string(s.isolation_events);
  row += ',';
  row += s.has_final_value ? fmt(s.final_value) : "nan";
  return row;
}

}  // namespace ezag
