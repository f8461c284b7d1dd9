#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "spillover/design.hpp"
#include "spillover/graph.hpp"

namespace spillover {

// Exposure mappings on the none < hop1 < hop2 ladder.
//
// Conditions are indexed so that bit b of (K - 1 - index) is the b-th
// indicator counted from the least specific end: for hop1, index 0 is d11
// (treated, a peer treated) and index 3 is d00. Dropping the lowest indicator
// of a finer mapping is therefore `index >> 1`.
enum class ExposureKind : std::uint8_t { kNone = 0, kHop1 = 1, kHop2 = 2 };

using Condition = std::uint8_t;

std::size_t condition_count(ExposureKind kind);
// none: dir, no. hop1: dir_ind1, isol_dir, ind1, no. hop2: eight labels from
// dir_ind1_ind2 down to no.
const std::vector<std::string>& condition_labels(ExposureKind kind);
// Paper-style subscripts ("d11", "d0", ...).
std::string condition_symbol(ExposureKind kind, Condition c);
std::optional<Condition> find_condition(ExposureKind kind, std::string_view label);

std::string to_string(ExposureKind kind);
ExposureKind parse_exposure_kind(std::string_view text);

// Realized condition per unit; the one-hot n x K view is indicator().
struct ExposureMatrix {
  ExposureKind kind = ExposureKind::kHop1;
  std::vector<Condition> condition;

  std::size_t units() const noexcept { return condition.size(); }
  std::size_t conditions() const { return condition_count(kind); }
  bool indicator(std::size_t i, Condition k) const { return condition[i] == k; }
  std::size_t count(Condition k) const;
};

// Applies one exposure mapping to many assignment vectors on a fixed graph.
class ExposureMapper {
 public:
  ExposureMapper(const Graph& g, ExposureKind kind);

  ExposureKind kind() const noexcept { return kind_; }
  std::size_t units() const noexcept { return graph_->size(); }
  const Graph& graph() const noexcept { return *graph_; }

  ExposureMatrix map(std::span<const std::uint8_t> z) const;
  void map_into(std::span<const std::uint8_t> z, std::span<Condition> out) const;

 private:
  const Graph* graph_;
  ExposureKind kind_;
  std::vector<std::vector<UnitId>> second_;
};

ExposureMatrix map_exposures(const Graph& g, std::span<const std::uint8_t> z, ExposureKind kind);

// Individual and (optionally) pairwise probabilities of exposure, estimated as
// the share of assignment vectors that induce each condition. Exact when the
// vectors are the enumerated support.
class ExposureProbabilities {
 public:
  ExposureKind kind() const noexcept { return kind_; }
  std::size_t units() const noexcept { return static_cast<std::size_t>(individual_.cols()); }
  std::size_t conditions() const noexcept { return static_cast<std::size_t>(individual_.rows()); }
  std::size_t replicates() const noexcept { return replicates_; }
  bool exact() const noexcept { return exact_; }
  bool has_joint() const noexcept { return !joint_.empty(); }

  // pi_i(d_k).
  double individual(Condition k, std::size_t i) const { return individual_(k, i); }
  const Eigen::MatrixXd& individual_table() const noexcept { return individual_; }

  // pi_ij(d_k, d_l); throws EstimationError without joint tables.
  double joint(Condition k, Condition l, std::size_t i, std::size_t j) const;

  // Number of units j != i with pi_ij(d_k, d_l) == 0.
  std::size_t zero_joint_count(Condition k, Condition l, std::size_t i) const;

  friend ExposureProbabilities exposure_probabilities(const ExposureMapper&, const AssignmentSet&,
                                                      bool);

 private:
  std::size_t pair_index(Condition k, Condition l) const;

  ExposureKind kind_ = ExposureKind::kHop1;
  std::size_t replicates_ = 0;
  bool exact_ = false;
  Eigen::MatrixXd individual_;            // K x n
  std::vector<Eigen::MatrixXd> joint_;    // (k <= l) -> n x n, [i, j] = pi_ij(k, l)
  std::vector<std::uint32_t> zero_counts_;  // (k, l, i) row-major, all ordered pairs
};

ExposureProbabilities exposure_probabilities(const ExposureMapper& mapper, const AssignmentSet& a,
                                             bool want_joint);
ExposureProbabilities exposure_probabilities(const Graph& g, const AssignmentSet& a,
                                             ExposureKind kind, bool want_joint);

// CSV "unit,condition,prob" (or "unit,unit_j,condition,condition_j,prob" with
// joint rows), preceded by a "# exact=<0|1> replicates=<R>" metadata line.
std::string format_probabilities(const ExposureProbabilities& probs, bool include_joint);

// For each condition of `truth`, the conditions of `assumed` that are
// consistent with it: one per condition when assumed is coarser (a merge),
// several when assumed is finer.
struct ConditionCorrespondence {
  ExposureKind truth;
  ExposureKind assumed;
  std::vector<std::vector<Condition>> image;
};

ConditionCorrespondence misspecify(ExposureKind truth, ExposureKind assumed);

}  // namespace spillover
