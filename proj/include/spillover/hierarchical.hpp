#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spillover/design.hpp"

namespace spillover {

struct HierarchicalRow {
  std::int64_t group;
  std::uint8_t group_arm;  // 1 = psi, 0 = phi
  std::uint8_t z;
  double y;
};

struct HierarchicalDataset {
  std::vector<HierarchicalRow> rows;
};

// Throws ParameterError naming the first group whose rows disagree on the arm.
void validate(const HierarchicalDataset& d);

HierarchicalDataset make_dataset(const HierarchicalAssignment& a, std::span<const double> y);

// Mean outcome of units with assignment z in group g; EstimationError when
// there are none.
double group_mean(const HierarchicalDataset& d, std::int64_t g, int z);

struct EffectEstimate {
  bool defined = false;
  double estimate = 0;
  double variance = 0;  // NaN when fewer than two groups back a component
  double ci_low = 0;
  double ci_high = 0;
};

inline constexpr std::array<std::string_view, 5> kEffectNames{
    "direct_psi", "direct_phi", "indirect", "total", "overall"};

struct MarginalEffectsReport {
  // direct_psi, direct_phi, indirect, total, overall
  std::array<EffectEstimate, 5> effects;
  std::size_t groups_psi = 0;
  std::size_t groups_phi = 0;
  double saturation_psi = 0;  // mean realized treated share per arm
  double saturation_phi = 0;
  double alpha = 0.05;
  std::vector<std::string> warnings;

  const EffectEstimate& direct_psi() const { return effects[0]; }
  const EffectEstimate& direct_phi() const { return effects[1]; }
  const EffectEstimate& indirect() const { return effects[2]; }
  const EffectEstimate& total() const { return effects[3]; }
  const EffectEstimate& overall() const { return effects[4]; }
};

struct DeclaredSaturations {
  double psi;
  double phi;
};

// Group-weighted two-stage estimators. Arm means average group-level means;
// a component variance is the between-group sample variance over the arm's
// group count (direct effects use within-group differences). Effects that need
// an empty cell are left undefined.
MarginalEffectsReport marginal_effects(const HierarchicalDataset& d, double alpha = 0.05,
                                       std::optional<DeclaredSaturations> declared = {});

// CSV with header "group,group_tr,indiv_tr,obs_outcome". Also accepts the
// whitespace separated frame with a leading row name column.
HierarchicalDataset parse_hierarchical(std::string_view text);
HierarchicalDataset load_hierarchical(const std::filesystem::path& path);
std::string format_hierarchical(const HierarchicalDataset& d);
void save_hierarchical(const HierarchicalDataset& d, const std::filesystem::path& path);

std::string report_json(const MarginalEffectsReport& r);

}  // namespace spillover
