#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "spillover/graph.hpp"

namespace spillover {

enum class DesignKind { kComplete, kBernoulli, kCluster, kEnumerated };

std::string to_string(DesignKind kind);

// R binary assignment vectors of length n, stored row-major.
//
// With kind == kEnumerated the vectors are the whole support of the complete
// randomization design, each carrying probability 1/size().
class AssignmentSet {
 public:
  AssignmentSet(std::size_t n, DesignKind kind, double p, bool distinct)
      : n_(n), kind_(kind), p_(p), distinct_(distinct) {}

  std::size_t units() const noexcept { return n_; }
  std::size_t size() const noexcept { return n_ == 0 ? 0 : bits_.size() / n_; }
  bool empty() const noexcept { return bits_.empty(); }
  DesignKind kind() const noexcept { return kind_; }
  double p() const noexcept { return p_; }
  bool distinct() const noexcept { return distinct_; }

  std::span<const std::uint8_t> operator[](std::size_t r) const {
    return {bits_.data() + r * n_, n_};
  }
  void push_back(std::span<const std::uint8_t> z);

 private:
  std::size_t n_;
  DesignKind kind_;
  double p_;
  bool distinct_;
  std::vector<std::uint8_t> bits_;
};

// Number of treated units under share p: round(p * n), half to even.
std::size_t treated_count(std::size_t n, double p);

// C(n, k), saturating at `cap + 1` so callers can compare against caps
// without overflow.
std::uint64_t binomial_capped(std::uint64_t n, std::uint64_t k, std::uint64_t cap);

inline constexpr std::uint64_t kDefaultEnumerationCap = 1'000'000;

// r vectors with exactly round(p*n) ones, uniform over the C(n, round(p*n))
// support. Without repetitions the vectors are pairwise distinct.
AssignmentSet complete_randomization(std::size_t n, double p, std::size_t r, std::uint64_t seed,
                                     bool allow_repetitions);

// r vectors with i.i.d. Bernoulli(p) entries.
AssignmentSet bernoulli_assignment(std::size_t n, double p, std::size_t r, std::uint64_t seed,
                                   bool allow_repetitions = true);

// Every vector of the complete randomization design (lexicographic order of
// treated index sets). Throws ParameterError when the support exceeds `cap`.
AssignmentSet enumerate_support(std::size_t n, double p,
                                std::uint64_t cap = kDefaultEnumerationCap);

struct Clustering {
  std::vector<std::uint32_t> labels;   // unit -> cluster id
  std::vector<UnitId> centers;         // cluster id -> center unit, ascending

  std::size_t cluster_count() const noexcept { return centers.size(); }
};

// Greedy epsilon-net: scan units in a seeded random order, keep a unit as a
// center when it is at least `epsilon` hops from every center so far. Units
// join their nearest center, ties going to the lowest center id.
Clustering epsilon_net_clustering(const Graph& g, std::size_t epsilon, std::uint64_t seed);
Clustering epsilon_net_clustering(const Graph& g, std::size_t epsilon,
                                  std::span<const UnitId> scan_order);

enum class ClusterMode { kBernoulli, kComplete };

// Cluster-level draws propagated to member units.
AssignmentSet cluster_randomization(const Clustering& c, double p, std::size_t r,
                                    std::uint64_t seed, ClusterMode mode = ClusterMode::kBernoulli,
                                    bool allow_repetitions = true);

struct HierarchicalAssignment {
  std::vector<std::uint32_t> group_of;  // unit -> group id in [0, G)
  std::vector<std::uint8_t> group_arm;  // group -> 1 for psi, 0 for phi
  std::vector<std::uint8_t> z;          // unit assignment
  double psi = 0;
  double phi = 0;

  std::size_t group_count() const noexcept { return group_arm.size(); }
};

// Number of groups given group_of (max label + 1); every label in [0, G) must
// be used. Throws ParameterError otherwise.
std::size_t count_groups(std::span<const std::uint32_t> group_of);

// Two-stage randomized saturation design: round(share_psi * G) groups get
// saturation psi by complete randomization over groups, the rest phi; then
// complete randomization within each group at its saturation.
HierarchicalAssignment two_stage_assignment(std::span<const std::uint32_t> group_of, double psi,
                                            double phi, double share_psi, std::uint64_t seed);

// Assignment CSV: header "rep,unit,z".
std::string format_assignments(const AssignmentSet& a);
AssignmentSet parse_assignments(std::string_view text);
AssignmentSet load_assignments(const std::filesystem::path& path);

// Clustering CSV: header "unit,cluster,is_center".
std::string format_clustering(const Clustering& c);

}  // namespace spillover
