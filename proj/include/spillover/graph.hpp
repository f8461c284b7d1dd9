#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace spillover {

using UnitId = std::uint32_t;
using Edge = std::pair<UnitId, UnitId>;

// Undirected, unweighted interference network over units 0..n-1.
//
// Row i of the (implicit) adjacency matrix is the trait vector of unit i used
// by the exposure mappings. The graph is immutable once built: construction
// validates that ids are in range, that there are no self-loops and no
// duplicate ties, and stores sorted neighbor lists.
class Graph {
 public:
  Graph() = default;
  explicit Graph(std::size_t n) : adjacency_(n) {}

  // Throws ParameterError on out-of-range ids, self-loops or duplicate edges.
  static Graph from_edges(std::size_t n, std::span<const Edge> edges);

  std::size_t size() const noexcept { return adjacency_.size(); }
  std::size_t edge_count() const noexcept { return edge_count_; }

  std::span<const UnitId> neighbors(UnitId i) const { return adjacency_.at(i); }
  std::size_t degree(UnitId i) const { return adjacency_.at(i).size(); }
  bool has_edge(UnitId i, UnitId j) const;

  // Edges as (u, v) with u < v, sorted lexicographically.
  std::vector<Edge> edges() const;

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  std::vector<std::vector<UnitId>> adjacency_;
  std::size_t edge_count_ = 0;
};

// Ring lattice with mean_degree/2 neighbors per side, each lattice edge
// rewired with probability rewire_prob to a uniformly drawn endpoint.
// Rewiring re-draws on self-loops or duplicates, so the edge count is exactly
// n * mean_degree / 2.
Graph generate_small_world(std::size_t n, std::size_t mean_degree, double rewire_prob,
                           std::uint64_t seed);

// Shortest-path hop counts from `source`; unreachable units get SIZE_MAX.
// Search stops after `max_depth` hops when given.
std::vector<std::size_t> bfs_distances(const Graph& g, UnitId source,
                                       std::size_t max_depth = SIZE_MAX);

// Units at distance exactly 2 from i, sorted.
std::vector<UnitId> second_degree_set(const Graph& g, UnitId i);

// second_degree_set for every unit.
std::vector<std::vector<UnitId>> second_degree_sets(const Graph& g);

// Copy of g without round(proportion * |E|) edges chosen uniformly without
// replacement (round half to even).
Graph remove_ties(const Graph& g, double proportion, std::uint64_t seed);

enum class GraphFormat { kEdgeList, kDense };

// Edge-list CSV: optional "# n=<count>" line, header "u,v", one edge per row
// with u < v. Dense CSV: n rows of n comma separated 0/1 values, symmetric with
// a zero diagonal. load_graph detects the format from the first data line.
Graph load_graph(const std::filesystem::path& path);
Graph parse_graph(std::string_view text);
void save_graph(const Graph& g, const std::filesystem::path& path,
                GraphFormat format = GraphFormat::kEdgeList);
std::string format_graph(const Graph& g, GraphFormat format = GraphFormat::kEdgeList);

}  // namespace spillover
