#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "spillover/design.hpp"
#include "spillover/exposure.hpp"
#include "spillover/graph.hpp"

namespace spillover {

enum class SpilloverSign { kPositive, kNegative };

std::string to_string(SpilloverSign sign);
SpilloverSign parse_spillover_sign(std::string_view text);

// Multipliers on the untreated baseline, one per condition in condition order
// (most exposed first, so the last entry is 1).
struct DGPSpec {
  ExposureKind kind = ExposureKind::kHop1;
  std::vector<double> multipliers;
  double kappa = 0.1;
};

// Default schedules: hop1 (2, 1.5, 1.25, 1) or (1.25, 1.5, 0.75, 1), hop2 and
// none analogues.
DGPSpec default_dgp(ExposureKind kind, SpilloverSign sign, double kappa = 0.1);

// |eps_i| + kappa * (deg1_i + deg2_i), eps_i standard normal.
std::vector<double> dilated_baseline(const Graph& g, double kappa, std::uint64_t seed);

// y_i(d_k) for every unit and condition.
class PotentialOutcomeTable {
 public:
  PotentialOutcomeTable(ExposureKind kind, Eigen::MatrixXd values);

  ExposureKind kind() const noexcept { return kind_; }
  std::size_t units() const noexcept { return static_cast<std::size_t>(values_.cols()); }
  std::size_t conditions() const noexcept { return static_cast<std::size_t>(values_.rows()); }
  double value(Condition k, std::size_t i) const { return values_(k, static_cast<Eigen::Index>(i)); }
  const Eigen::MatrixXd& values() const noexcept { return values_; }
  // mu(d_k).
  double mean(Condition k) const;

 private:
  ExposureKind kind_;
  Eigen::MatrixXd values_;  // K x n
};

PotentialOutcomeTable dilated_outcomes(std::span<const double> baseline, const DGPSpec& spec);

// Y_i = y_i(D_i).
std::vector<double> realize_observed(const ExposureMatrix& e, const PotentialOutcomeTable& t);

// tau(d_k, d_l) = mu(d_k) - mu(d_l).
double true_contrast(const PotentialOutcomeTable& t, Condition k, Condition l);

// Everyone treated against no one treated: first against last condition.
double full_effect(const PotentialOutcomeTable& t);

// Long CSV "unit,condition,value".
std::string format_outcomes(const PotentialOutcomeTable& t);

// Two-stage (partial interference) outcome model.
enum class HierarchyLevel { kGroup, kTract };

std::string to_string(HierarchyLevel level);
HierarchyLevel parse_hierarchy_level(std::string_view text);

struct HierarchicalMultipliers {
  double treated_psi = 2.0;
  double treated_phi = 1.5;
  double control_psi = 1.25;
  double control_phi = 1.0;
};

struct MarginalEstimands {
  double direct_psi = 0;
  double direct_phi = 0;
  double indirect = 0;
  double total = 0;
  double overall = 0;
};

// Outcomes b_i * m_z(s), where s is the realized treated share of the unit's
// group (group level) or tract (tract level). m_z is linear in s through
// (phi, m_z(phi)) and (psi, m_z(psi)); with psi == phi the phi row is used.
class HierarchicalOutcomeModel {
 public:
  HierarchicalOutcomeModel(std::vector<double> baseline, std::vector<std::uint32_t> group_of,
                           std::vector<std::uint32_t> tract_of_group, double psi, double phi,
                           HierarchicalMultipliers m, HierarchyLevel level);

  HierarchyLevel level() const noexcept { return level_; }
  std::size_t units() const noexcept { return baseline_.size(); }
  std::span<const double> baseline() const noexcept { return baseline_; }
  std::span<const std::uint32_t> group_of() const noexcept { return group_of_; }

  double multiplier(int z, double share) const;
  std::vector<double> observed(const HierarchicalAssignment& a) const;
  // Effects with every group (and, at tract level, every tract) held at one
  // saturation.
  MarginalEstimands estimands() const;

 private:
  // Treated share seen by units of `group` when every group is at psi (or phi).
  double uniform_share(std::size_t group, bool psi_arm) const;

  std::vector<double> baseline_;
  std::vector<std::uint32_t> group_of_;
  std::vector<std::uint32_t> tract_of_group_;
  std::vector<std::size_t> group_size_;
  double psi_;
  double phi_;
  HierarchicalMultipliers m_;
  HierarchyLevel level_;
};

// Baseline |eps| per unit; tract_of_group may be empty at group level.
HierarchicalOutcomeModel hierarchical_outcomes(std::vector<std::uint32_t> group_of,
                                               std::vector<std::uint32_t> tract_of_group,
                                               double psi, double phi,
                                               const HierarchicalMultipliers& m,
                                               HierarchyLevel level, std::uint64_t seed);

}  // namespace spillover
