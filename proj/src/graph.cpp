#include "spillover/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <queue>
#include <set>
#include <sstream>

#include "spillover/csv.hpp"
#include "spillover/errors.hpp"
#include "spillover/rng.hpp"

namespace spillover {

Graph Graph::from_edges(std::size_t n, std::span<const Edge> edges) {
  Graph g(n);
  for (auto [u, v] : edges) {
    if (u >= n || v >= n) {
      throw ParameterError("edge (" + std::to_string(u) + "," + std::to_string(v) +
                           ") has an id outside [0, " + std::to_string(n) + ")");
    }
    if (u == v) throw ParameterError("self-loop on unit " + std::to_string(u));
    g.adjacency_[u].push_back(v);
    g.adjacency_[v].push_back(u);
  }
  for (UnitId i = 0; i < n; ++i) {
    auto& row = g.adjacency_[i];
    std::sort(row.begin(), row.end());
    if (std::adjacent_find(row.begin(), row.end()) != row.end()) {
      throw ParameterError("duplicate edge at unit " + std::to_string(i));
    }
  }
  g.edge_count_ = edges.size();
  return g;
}

bool Graph::has_edge(UnitId i, UnitId j) const {
  const auto& row = adjacency_.at(i);
  return std::binary_search(row.begin(), row.end(), j);
}

std::vector<Edge> Graph::edges() const {
  std::vector<Edge> out;
  out.reserve(edge_count_);
  for (UnitId u = 0; u < adjacency_.size(); ++u) {
    for (UnitId v : adjacency_[u]) {
      if (u < v) out.emplace_back(u, v);
    }
  }
  return out;
}

Graph generate_small_world(std::size_t n, std::size_t mean_degree, double rewire_prob,
                           std::uint64_t seed) {
  if (mean_degree % 2 != 0) {
    throw ParameterError("mean_degree must be even, got " + std::to_string(mean_degree));
  }
  if (mean_degree >= n) {
    throw ParameterError("mean_degree must be below n (" + std::to_string(mean_degree) +
                         " >= " + std::to_string(n) + ")");
  }
  if (!(rewire_prob >= 0.0 && rewire_prob <= 1.0)) {
    throw ParameterError("rewire_prob must lie in [0, 1]");
  }

  std::vector<std::set<UnitId>> adj(n);
  std::vector<Edge> lattice;
  lattice.reserve(n * mean_degree / 2);
  for (std::size_t step = 1; step <= mean_degree / 2; ++step) {
    for (UnitId i = 0; i < n; ++i) {
      const auto j = static_cast<UnitId>((i + step) % n);
      lattice.emplace_back(i, j);
      adj[i].insert(j);
      adj[j].insert(i);
    }
  }

  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<UnitId> pick(0, static_cast<UnitId>(n - 1));
  for (auto& [u, v] : lattice) {
    if (coin(rng) >= rewire_prob) continue;
    // u already tied to everyone: no admissible endpoint.
    if (adj[u].size() >= n - 1) continue;
    UnitId w = pick(rng);
    while (w == u || adj[u].contains(w)) w = pick(rng);
    adj[u].erase(v);
    adj[v].erase(u);
    adj[u].insert(w);
    adj[w].insert(u);
    v = w;
  }

  std::vector<Edge> edges;
  edges.reserve(lattice.size());
  for (auto [u, v] : lattice) edges.emplace_back(std::min(u, v), std::max(u, v));
  return Graph::from_edges(n, edges);
}

std::vector<std::size_t> bfs_distances(const Graph& g, UnitId source, std::size_t max_depth) {
  std::vector<std::size_t> dist(g.size(), SIZE_MAX);
  std::queue<UnitId> frontier;
  dist.at(source) = 0;
  frontier.push(source);
  while (!frontier.empty()) {
    const UnitId u = frontier.front();
    frontier.pop();
    if (dist[u] >= max_depth) continue;
    for (UnitId v : g.neighbors(u)) {
      if (dist[v] == SIZE_MAX) {
        dist[v] = dist[u] + 1;
        frontier.push(v);
      }
    }
  }
  return dist;
}

std::vector<UnitId> second_degree_set(const Graph& g, UnitId i) {
  std::vector<UnitId> out;
  for (UnitId j : g.neighbors(i)) {
    for (UnitId k : g.neighbors(j)) {
      if (k != i && !g.has_edge(i, k)) out.push_back(k);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::vector<UnitId>> second_degree_sets(const Graph& g) {
  std::vector<std::vector<UnitId>> out(g.size());
  for (UnitId i = 0; i < g.size(); ++i) out[i] = second_degree_set(g, i);
  return out;
}

Graph remove_ties(const Graph& g, double proportion, std::uint64_t seed) {
  if (!(proportion >= 0.0 && proportion <= 1.0)) {
    throw ParameterError("proportion of removed ties must lie in [0, 1]");
  }
  auto edges = g.edges();
  const auto drop = static_cast<std::size_t>(
      std::nearbyint(proportion * static_cast<double>(edges.size())));
  Rng rng = make_rng(seed);
  std::shuffle(edges.begin(), edges.end(), rng);
  edges.erase(edges.begin(), edges.begin() + static_cast<std::ptrdiff_t>(drop));
  return Graph::from_edges(g.size(), edges);
}

namespace {

Graph parse_edge_list(const std::vector<csv::Line>& lines, std::size_t header_index,
                      std::optional<std::size_t> declared_n) {
  std::vector<Edge> edges;
  std::size_t max_id = 0;
  std::set<Edge> seen;
  for (std::size_t idx = header_index + 1; idx < lines.size(); ++idx) {
    const auto& line = lines[idx];
    if (line.text.front() == '#') continue;
    const auto fields = csv::split(line.text);
    if (fields.size() != 2) throw ParseError(line.number, "expected two fields 'u,v'");
    const auto u = csv::parse_int(fields[0], line.number);
    const auto v = csv::parse_int(fields[1], line.number);
    if (u < 0 || v < 0) throw ParseError(line.number, "negative unit id");
    if (u == v) throw ParseError(line.number, "self-loop on unit " + std::to_string(u));
    if (u > v) throw ParseError(line.number, "edge rows must satisfy u < v");
    if (declared_n && static_cast<std::size_t>(v) >= *declared_n) {
      throw ParseError(line.number, "unit id " + std::to_string(v) + " >= n=" +
                                        std::to_string(*declared_n));
    }
    const Edge e{static_cast<UnitId>(u), static_cast<UnitId>(v)};
    if (!seen.insert(e).second) throw ParseError(line.number, "duplicate edge");
    edges.push_back(e);
    max_id = std::max<std::size_t>(max_id, static_cast<std::size_t>(v));
  }
  const std::size_t n = declared_n ? *declared_n : (edges.empty() ? 0 : max_id + 1);
  return Graph::from_edges(n, edges);
}

Graph parse_dense(const std::vector<csv::Line>& lines) {
  std::vector<std::vector<int>> rows;
  std::vector<std::size_t> numbers;
  for (const auto& line : lines) {
    if (line.text.front() == '#') continue;
    std::vector<int> row;
    for (auto field : csv::split(line.text)) {
      const auto value = csv::parse_int(field, line.number);
      if (value != 0 && value != 1) throw ParseError(line.number, "dense entries must be 0 or 1");
      row.push_back(static_cast<int>(value));
    }
    rows.push_back(std::move(row));
    numbers.push_back(line.number);
  }
  const std::size_t n = rows.size();
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i].size() != n) {
      throw ParseError(numbers[i], "expected " + std::to_string(n) + " columns, got " +
                                       std::to_string(rows[i].size()));
    }
    if (rows[i][i] != 0) throw ParseError(numbers[i], "nonzero diagonal (self-loop)");
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (rows[i][j] != rows[j][i]) {
        throw ParseError(numbers[i], "adjacency is not symmetric at (" + std::to_string(i) + "," +
                                         std::to_string(j) + ")");
      }
      if (rows[i][j] == 1) edges.emplace_back(static_cast<UnitId>(i), static_cast<UnitId>(j));
    }
  }
  return Graph::from_edges(n, edges);
}

}  // namespace

Graph parse_graph(std::string_view text) {
  const auto all = csv::lines(text);
  std::optional<std::size_t> declared_n;
  for (std::size_t idx = 0; idx < all.size(); ++idx) {
    const auto& line = all[idx];
    if (line.text.front() == '#') {
      auto body = csv::trim(line.text.substr(1));
      if (body.starts_with("n=")) {
        const auto n = csv::parse_int(csv::trim(body.substr(2)), line.number);
        if (n < 0) throw ParseError(line.number, "negative unit count");
        declared_n = static_cast<std::size_t>(n);
      }
      continue;
    }
    const auto fields = csv::split(line.text);
    if (fields.size() == 2 && fields[0] == "u" && fields[1] == "v") {
      return parse_edge_list(all, idx, declared_n);
    }
    return parse_dense(all);
  }
  return Graph(declared_n.value_or(0));
}

Graph load_graph(const std::filesystem::path& path) { return parse_graph(csv::read_file(path)); }

std::string format_graph(const Graph& g, GraphFormat format) {
  std::ostringstream out;
  if (format == GraphFormat::kEdgeList) {
    out << "# n=" << g.size() << "\n";
    out << "u,v\n";
    for (auto [u, v] : g.edges()) out << u << ',' << v << '\n';
  } else {
    for (UnitId i = 0; i < g.size(); ++i) {
      for (UnitId j = 0; j < g.size(); ++j) {
        if (j) out << ',';
        out << (g.has_edge(i, j) ? 1 : 0);
      }
      out << '\n';
    }
  }
  return out.str();
}

void save_graph(const Graph& g, const std::filesystem::path& path, GraphFormat format) {
  csv::write_file(path, format_graph(g, format));
}

}  // namespace spillover
