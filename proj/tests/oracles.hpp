#pragma once

// Brute-force references the library is checked against. Nothing here calls
// into the library beyond its plain data types.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "spillover/graph.hpp"

namespace oracle {

using Matrix = std::vector<std::vector<int>>;
using Bits = std::vector<std::uint8_t>;

inline constexpr int kFar = std::numeric_limits<int>::max() / 4;

inline Matrix adjacency(const spillover::Graph& g) {
  Matrix a(g.size(), std::vector<int>(g.size(), 0));
  for (auto [u, v] : g.edges()) a[u][v] = a[v][u] = 1;
  return a;
}

// All-pairs hop counts.
inline Matrix floyd_warshall(const Matrix& adj) {
  const std::size_t n = adj.size();
  Matrix d(n, std::vector<int>(n, kFar));
  for (std::size_t i = 0; i < n; ++i) {
    d[i][i] = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (adj[i][j]) d[i][j] = 1;
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
    }
  }
  return d;
}

// Every 0/1 vector of length n with m ones.
inline std::vector<Bits> combinations(std::size_t n, std::size_t m) {
  std::vector<Bits> out;
  Bits z(n, 0);
  std::fill(z.end() - static_cast<std::ptrdiff_t>(m), z.end(), 1);
  do {
    out.push_back(z);
  } while (std::next_permutation(z.begin(), z.end()));
  return out;
}

// Exposure label straight from the definitions: own treatment, any treated
// unit at distance 1, any treated unit at distance 2. Returns the condition
// code (own, peer, second) as a bit string, most specific indicator last.
inline std::string exposure_code(const Matrix& dist, const Bits& z, std::size_t i, int hops) {
  std::string code(1, z[i] ? '1' : '0');
  for (int h = 1; h <= hops; ++h) {
    bool any = false;
    for (std::size_t j = 0; j < z.size(); ++j) {
      if (dist[i][j] == h && z[j]) any = true;
    }
    code += any ? '1' : '0';
  }
  return code;
}

inline double mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double population_variance(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size());
}

// Standard normal quantile by bisection on erfc.
inline double normal_quantile(double p) {
  double lo = -10, hi = 10;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double cdf = 0.5 * std::erfc(-mid / std::sqrt(2.0));
    (cdf < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace oracle
