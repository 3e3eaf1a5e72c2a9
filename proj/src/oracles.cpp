#include "ezag/oracles.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <bit>
#include <cmath>

#include "ezag/world.hpp"

namespace ezag {

double coupon_expected_draws(int b) {
  if (b < 1) throw ConfigError("coupon_expected_draws: b must be >= 1");
  double h = 0.0;
  for (int k = 1; k <= b; ++k) h += 1.0 / k;
  return b * h;
}

double markov_cover_expectation(const std::vector<std::vector<int>>& adj, int start) {
  const int n = static_cast<int>(adj.size());
  if (n < 1 || n > 8)
    throw ConfigError("markov_cover_expectation: graph must have 1..8 vertices");
  if (start < 0 || start >= n)
    throw ConfigError("markov_cover_expectation: start vertex out of range");
  for (const auto& nb : adj) {
    if (nb.empty() && n > 1)
      throw ConfigError("markov_cover_expectation: isolated vertex");
    for (int v : nb)
      if (v < 0 || v >= n) throw ConfigError("markov_cover_expectation: bad edge");
  }
  // Connectivity check (cover expectation is infinite otherwise).
  {
    std::vector<int> stack{0}, seen(n, 0);
    seen[0] = 1;
    int count = 1;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int v : adj[u])
        if (!seen[v]) {
          seen[v] = 1;
          ++count;
          stack.push_back(v);
        }
    }
    if (count != n) throw ConfigError("markov_cover_expectation: graph is disconnected");
  }
  if (n == 1) return 0.0;

  const uint32_t full = (1u << n) - 1;
  // expect[mask][u] = expected further steps from vertex u with visited set
  // `mask` (u in mask). Masks processed by decreasing popcount; within one
  // mask the already-visited transitions couple the unknowns, so each mask is
  // one small dense solve.
  std::vector<std::array<double, 8>> expect(full + 1);
  std::vector<uint32_t> masks;
  for (uint32_t m = 1; m <= full; ++m) masks.push_back(m);
  std::sort(masks.begin(), masks.end(), [](uint32_t a, uint32_t b) {
    return std::popcount(a) > std::popcount(b);
  });

  for (uint32_t mask : masks) {
    if (mask == full) {
      expect[mask].fill(0.0);
      continue;
    }
    std::vector<int> members;
    for (int u = 0; u < n; ++u)
      if (mask & (1u << u)) members.push_back(u);
    const int k = static_cast<int>(members.size());
    std::vector<int> slot(n, -1);
    for (int i = 0; i < k; ++i) slot[members[i]] = i;

    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(k, k);
    Eigen::VectorXd rhs = Eigen::VectorXd::Ones(k);
    for (int i = 0; i < k; ++i) {
      const int u = members[i];
      const double inv_deg = 1.0 / static_cast<double>(adj[u].size());
      for (int v : adj[u]) {
        if (mask & (1u << v))
          a(i, slot[v]) -= inv_deg;
        else
          rhs(i) += inv_deg * expect[mask | (1u << v)][v];
      }
    }
    Eigen::VectorXd x = a.partialPivLu().solve(rhs);
    expect[mask].fill(0.0);
    for (int i = 0; i < k; ++i) expect[mask][members[i]] = x(i);
  }
  return expect[1u << start][start];
}

int64_t exact_distinct(const std::vector<int64_t>& ids) {
  std::vector<int64_t> v = ids;
  std::sort(v.begin(), v.end());
  return static_cast<int64_t>(std::unique(v.begin(), v.end()) - v.begin());
}

int64_t predicted_hier_messages(int64_t n, int64_t delta) {
  if (n < 1 || delta < 1)
    throw ConfigError("predicted_hier_messages: n and delta must be >= 1");
  int64_t p = 0;
  while (n / delta >= (int64_t{1} << (2 * (p + 1)))) ++p;
  return n * (p + 1);
}

double gossip_projection(double n, double exponent) {
  if (!(n > 1.0)) throw ConfigError("gossip_projection: n must be > 1");
  return n * std::pow(std::log(n), exponent);
}

}  // namespace ezag
