#include "spillover/design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <sstream>
#include <string>
#include <unordered_set>

#include "spillover/csv.hpp"
#include "spillover/errors.hpp"
#include "spillover/rng.hpp"

namespace spillover {

std::string to_string(DesignKind kind) {
  switch (kind) {
    case DesignKind::kComplete: return "complete";
    case DesignKind::kBernoulli: return "bernoulli";
    case DesignKind::kCluster: return "cluster";
    case DesignKind::kEnumerated: return "enumerated";
  }
  return "unknown";
}

void AssignmentSet::push_back(std::span<const std::uint8_t> z) {
  if (z.size() != n_) throw ParameterError("assignment vector length differs from unit count");
  bits_.insert(bits_.end(), z.begin(), z.end());
}

std::size_t treated_count(std::size_t n, double p) {
  return static_cast<std::size_t>(std::nearbyint(p * static_cast<double>(n)));
}

std::uint64_t binomial_capped(std::uint64_t n, std::uint64_t k, std::uint64_t cap) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  // Running product stays an exact integer: C(n-k+i, i) after step i.
  unsigned __int128 value = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    value = value * (n - k + i) / i;
    if (value > cap) return cap + 1;
  }
  return static_cast<std::uint64_t>(value);
}

namespace {

std::string key_of(std::span<const std::uint8_t> z) {
  std::string key((z.size() + 7) / 8, '\0');
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (z[i]) key[i / 8] = static_cast<char>(key[i / 8] | (1 << (i % 8)));
  }
  return key;
}

// Draws r vectors from `draw`, rejecting repeats when requested.
template <typename Draw>
void fill_draws(AssignmentSet& out, std::size_t r, bool allow_repetitions, Draw&& draw) {
  std::vector<std::uint8_t> z(out.units());
  std::unordered_set<std::string> seen;
  while (out.size() < r) {
    draw(z);
    if (!allow_repetitions && !seen.insert(key_of(z)).second) continue;
    out.push_back(z);
  }
}

void check_share(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ParameterError("treated share p must lie in (0, 1)");
}

// Combinations of m out of n in lexicographic order of index sets.
template <typename Visit>
void for_each_combination(std::size_t n, std::size_t m, Visit&& visit) {
  std::vector<std::size_t> idx(m);
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<std::uint8_t> z(n);
  while (true) {
    std::fill(z.begin(), z.end(), 0);
    for (auto i : idx) z[i] = 1;
    visit(std::span<const std::uint8_t>(z));
    if (m == 0) return;
    std::size_t pos = m;
    while (pos > 0 && idx[pos - 1] == n - m + pos - 1) --pos;
    if (pos == 0) return;
    ++idx[pos - 1];
    for (std::size_t j = pos; j < m; ++j) idx[j] = idx[j - 1] + 1;
  }
}

}  // namespace

AssignmentSet complete_randomization(std::size_t n, double p, std::size_t r, std::uint64_t seed,
                                     bool allow_repetitions) {
  check_share(p);
  const std::size_t m = treated_count(n, p);
  if (m < 1) throw ParameterError("round(p*n) must be at least 1");
  AssignmentSet out(n, DesignKind::kComplete, p, !allow_repetitions);
  Rng rng = make_rng(seed);

  if (!allow_repetitions) {
    const auto support = binomial_capped(n, m, kDefaultEnumerationCap);
    if (support <= kDefaultEnumerationCap && r > support) {
      throw ParameterError("requested " + std::to_string(r) +
                           " distinct assignments but the support has only " +
                           std::to_string(support));
    }
    // Dense request: shuffle the full support instead of rejection sampling.
    if (support <= kDefaultEnumerationCap && 2 * r >= support) {
      auto all = enumerate_support(n, p);
      std::vector<std::size_t> order(all.size());
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t i = 0; i < r; ++i) out.push_back(all[order[i]]);
      return out;
    }
  }

  std::vector<std::uint32_t> perm(n);
  fill_draws(out, r, allow_repetitions, [&](std::vector<std::uint8_t>& z) {
    std::iota(perm.begin(), perm.end(), 0);
    std::fill(z.begin(), z.end(), 0);
    // Partial Fisher-Yates: the first m slots are a uniform m-subset.
    for (std::size_t i = 0; i < m; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n - 1);
      std::swap(perm[i], perm[pick(rng)]);
      z[perm[i]] = 1;
    }
  });
  return out;
}

AssignmentSet bernoulli_assignment(std::size_t n, double p, std::size_t r, std::uint64_t seed,
                                   bool allow_repetitions) {
  check_share(p);
  if (!allow_repetitions && n < 63 && r > (std::uint64_t{1} << n)) {
    throw ParameterError("requested more distinct Bernoulli vectors than 2^n");
  }
  AssignmentSet out(n, DesignKind::kBernoulli, p, !allow_repetitions);
  Rng rng = make_rng(seed);
  std::bernoulli_distribution coin(p);
  fill_draws(out, r, allow_repetitions, [&](std::vector<std::uint8_t>& z) {
    for (auto& bit : z) bit = coin(rng) ? 1 : 0;
  });
  return out;
}

AssignmentSet enumerate_support(std::size_t n, double p, std::uint64_t cap) {
  check_share(p);
  const std::size_t m = treated_count(n, p);
  const auto support = binomial_capped(n, m, cap);
  if (support > cap) {
    throw ParameterError("support of C(" + std::to_string(n) + "," + std::to_string(m) +
                         ") assignments exceeds the enumeration cap " + std::to_string(cap) +
                         "; use Monte Carlo draws instead");
  }
  AssignmentSet out(n, DesignKind::kEnumerated, p, true);
  for_each_combination(n, m, [&](std::span<const std::uint8_t> z) { out.push_back(z); });
  return out;
}

Clustering epsilon_net_clustering(const Graph& g, std::size_t epsilon, std::uint64_t seed) {
  std::vector<UnitId> order(g.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng = make_rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  return epsilon_net_clustering(g, epsilon, order);
}

Clustering epsilon_net_clustering(const Graph& g, std::size_t epsilon,
                                  std::span<const UnitId> scan_order) {
  if (epsilon < 1) throw ParameterError("epsilon must be at least 1");
  const std::size_t n = g.size();
  if (scan_order.size() != n) throw ParameterError("scan order must list every unit once");

  // Distance to the nearest center found so far, tracked up to epsilon - 1.
  std::vector<std::size_t> covered(n, SIZE_MAX);
  std::vector<UnitId> centers;
  std::queue<UnitId> frontier;
  for (UnitId u : scan_order) {
    if (u >= n) throw ParameterError("scan order contains an out-of-range unit");
    if (covered[u] != SIZE_MAX) continue;
    centers.push_back(u);
    covered[u] = 0;
    frontier.push(u);
    std::vector<std::size_t> dist(n, SIZE_MAX);
    dist[u] = 0;
    while (!frontier.empty()) {
      const UnitId x = frontier.front();
      frontier.pop();
      if (dist[x] + 1 >= epsilon) continue;
      for (UnitId y : g.neighbors(x)) {
        if (dist[y] != SIZE_MAX) continue;
        dist[y] = dist[x] + 1;
        covered[y] = std::min(covered[y], dist[y]);
        frontier.push(y);
      }
    }
  }
  std::sort(centers.begin(), centers.end());

  // Multi-source BFS, layer by layer; a unit takes the smallest center id
  // among its parents in the previous layer, which is the smallest id among
  // all its nearest centers.
  Clustering out;
  out.centers = centers;
  constexpr auto kUnset = std::numeric_limits<std::uint32_t>::max();
  out.labels.assign(n, kUnset);
  std::vector<UnitId> layer;
  for (std::uint32_t c = 0; c < centers.size(); ++c) {
    out.labels[centers[c]] = c;
    layer.push_back(centers[c]);
  }
  std::vector<std::uint8_t> done(n, 0);
  for (UnitId u : layer) done[u] = 1;
  while (!layer.empty()) {
    std::vector<UnitId> next;
    for (UnitId x : layer) {
      for (UnitId y : g.neighbors(x)) {
        if (done[y]) continue;
        if (out.labels[y] == kUnset) next.push_back(y);
        out.labels[y] = std::min(out.labels[y], out.labels[x]);
      }
    }
    for (UnitId y : next) done[y] = 1;
    layer = std::move(next);
  }
  return out;
}

AssignmentSet cluster_randomization(const Clustering& c, double p, std::size_t r,
                                    std::uint64_t seed, ClusterMode mode,
                                    bool allow_repetitions) {
  const std::size_t k = c.cluster_count();
  const AssignmentSet clusters = mode == ClusterMode::kBernoulli
                                     ? bernoulli_assignment(k, p, r, seed, allow_repetitions)
                                     : complete_randomization(k, p, r, seed, allow_repetitions);
  AssignmentSet out(c.labels.size(), DesignKind::kCluster, p, !allow_repetitions);
  std::vector<std::uint8_t> z(c.labels.size());
  for (std::size_t rep = 0; rep < clusters.size(); ++rep) {
    const auto bits = clusters[rep];
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = bits[c.labels[i]];
    out.push_back(z);
  }
  return out;
}

std::size_t count_groups(std::span<const std::uint32_t> group_of) {
  if (group_of.empty()) return 0;
  const std::size_t g = *std::max_element(group_of.begin(), group_of.end()) + 1;
  std::vector<std::uint8_t> used(g, 0);
  for (auto id : group_of) used[id] = 1;
  if (std::find(used.begin(), used.end(), 0) != used.end()) {
    throw ParameterError("group ids must cover 0..G-1 without gaps");
  }
  return g;
}

HierarchicalAssignment two_stage_assignment(std::span<const std::uint32_t> group_of, double psi,
                                            double phi, double share_psi, std::uint64_t seed) {
  for (double s : {psi, phi, share_psi}) {
    if (!(s >= 0.0 && s <= 1.0)) throw ParameterError("saturations and shares must lie in [0, 1]");
  }
  const std::size_t groups = count_groups(group_of);
  const std::size_t psi_groups = treated_count(groups, share_psi);
  if (psi_groups < 1) throw ParameterError("round(share_psi * G) must be at least 1");

  std::vector<std::vector<UnitId>> members(groups);
  for (UnitId i = 0; i < group_of.size(); ++i) members[group_of[i]].push_back(i);
  for (std::size_t g = 0; g < groups; ++g) {
    const std::size_t size = members[g].size();
    for (double s : {psi, phi}) {
      const std::size_t treated = treated_count(size, s);
      if (treated == 0 || treated == size) {
        throw ParameterError("saturation " + csv::format_double(s) + " leaves group " +
                             std::to_string(g) + " (size " + std::to_string(size) +
                             ") without treated or control units");
      }
    }
  }

  Rng rng = make_rng(seed);
  HierarchicalAssignment out;
  out.group_of.assign(group_of.begin(), group_of.end());
  out.psi = psi;
  out.phi = phi;
  out.group_arm.assign(groups, 0);
  std::vector<std::size_t> order(groups);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t i = 0; i < psi_groups; ++i) out.group_arm[order[i]] = 1;

  out.z.assign(group_of.size(), 0);
  for (std::size_t g = 0; g < groups; ++g) {
    auto units = members[g];
    const std::size_t treated = treated_count(units.size(), out.group_arm[g] ? psi : phi);
    std::shuffle(units.begin(), units.end(), rng);
    for (std::size_t i = 0; i < treated; ++i) out.z[units[i]] = 1;
  }
  return out;
}

std::string format_assignments(const AssignmentSet& a) {
  std::ostringstream out;
  out << "rep,unit,z\n";
  for (std::size_t r = 0; r < a.size(); ++r) {
    const auto z = a[r];
    for (std::size_t i = 0; i < z.size(); ++i) out << r << ',' << i << ',' << int(z[i]) << '\n';
  }
  return out.str();
}

AssignmentSet parse_assignments(std::string_view text) {
  const auto all = csv::lines(text);
  if (all.empty() || all.front().text != "rep,unit,z") {
    throw ParseError(all.empty() ? 0 : all.front().number, "expected header 'rep,unit,z'");
  }
  std::vector<std::vector<std::uint8_t>> reps;
  for (std::size_t idx = 1; idx < all.size(); ++idx) {
    const auto& line = all[idx];
    const auto fields = csv::split(line.text);
    if (fields.size() != 3) throw ParseError(line.number, "expected 'rep,unit,z'");
    const auto rep = csv::parse_int(fields[0], line.number);
    const auto unit = csv::parse_int(fields[1], line.number);
    const auto z = csv::parse_int(fields[2], line.number);
    if (rep < 0 || unit < 0) throw ParseError(line.number, "negative index");
    if (z != 0 && z != 1) throw ParseError(line.number, "z must be 0 or 1");
    if (static_cast<std::size_t>(rep) >= reps.size()) reps.resize(rep + 1);
    auto& row = reps[rep];
    if (static_cast<std::size_t>(unit) >= row.size()) row.resize(unit + 1, 2);
    if (row[unit] != 2) throw ParseError(line.number, "duplicate (rep, unit) row");
    row[unit] = static_cast<std::uint8_t>(z);
  }
  const std::size_t n = reps.empty() ? 0 : reps.front().size();
  AssignmentSet out(n, DesignKind::kComplete, 0.0, false);
  for (std::size_t r = 0; r < reps.size(); ++r) {
    if (reps[r].size() != n || std::find(reps[r].begin(), reps[r].end(), 2) != reps[r].end()) {
      throw ParseError(0, "replicate " + std::to_string(r) + " does not list units 0.." +
                              std::to_string(n == 0 ? 0 : n - 1));
    }
    out.push_back(reps[r]);
  }
  return out;
}

AssignmentSet load_assignments(const std::filesystem::path& path) {
  return parse_assignments(csv::read_file(path));
}

std::string format_clustering(const Clustering& c) {
  std::ostringstream out;
  out << "unit,cluster,is_center\n";
  for (std::size_t i = 0; i < c.labels.size(); ++i) {
    const bool center = c.centers[c.labels[i]] == i;
    out << i << ',' << c.labels[i] << ',' << (center ? 1 : 0) << '\n';
  }
  return out.str();
}

}  // namespace spillover
