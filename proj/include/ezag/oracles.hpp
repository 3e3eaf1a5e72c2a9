#pragma once

#include <cstdint>
#include <vector>

namespace ezag {

// Closed-form and brute-force reference values used to pin down simulator
// behavior in tests. These are implemented independently of the event-driven
// code paths on purpose.

// Expected draws to collect all b coupons: b * H_b.
double coupon_expected_draws(int b);

// Exact expected number of steps for a uniform random walk on a small
// undirected graph (adjacency list) to visit every vertex, starting at
// `start` (counted as already visited). Exponential-state DP over
// (visited-mask, current-vertex); limited to <= 8 vertices. Throws
// ConfigError for larger, disconnected, or degenerate graphs.
double markov_cover_expectation(const std::vector<std::vector<int>>& adj, int start = 0);

// Exact distinct count of a multiset of ids.
int64_t exact_distinct(const std::vector<int64_t>& ids);

// Hierarchical-aggregation total message budget: N * (P + 1) with
// P = floor(log4(n / delta)).
int64_t predicted_hier_messages(int64_t n, int64_t delta);

// Gossip-cost projection n * ln(n)^exponent.
double gossip_projection(double n, double exponent);

}  // namespace ezag
