#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "spillover/design.hpp"
#include "spillover/estimators.hpp"
#include "spillover/exposure.hpp"
#include "spillover/outcomes.hpp"

namespace spillover {

enum class ScenarioKind { kNetwork, kHierarchical };

// all_vs_bottom: every condition of the analysis mapping against the
// no-exposure condition (needs analysis == truth). full: everyone treated
// against no one treated, tau(1, 0), which works across mappings.
enum class ContrastSet { kAllVsBottom, kFull };

enum class UnitDesign { kComplete, kBernoulli, kCluster };

std::string to_string(UnitDesign d);

// Flat key = value configuration; see presets/ for every key in use.
struct ScenarioConfig {
  std::string name = "scenario";
  ScenarioKind kind = ScenarioKind::kNetwork;

  // Network
  std::size_t n = 400;
  std::size_t mean_degree = 4;
  double rewire_prob = 0.1;
  std::string graph_file;  // replaces the generated graph when set
  std::vector<UnitDesign> designs{UnitDesign::kComplete};
  double p = 0.1;
  std::size_t epsilon = 3;
  ClusterMode cluster_mode = ClusterMode::kBernoulli;
  std::vector<ExposureKind> truth{ExposureKind::kHop1};
  std::vector<ExposureKind> analysis{ExposureKind::kHop1};
  std::vector<SpilloverSign> spillover{SpilloverSign::kPositive};
  std::vector<double> multipliers;  // overrides the preset schedule (single truth only)
  double kappa = 0.1;
  ContrastSet contrasts = ContrastSet::kAllVsBottom;
  std::vector<EstimatorKind> estimators{EstimatorKind::kHorvitzThompson, EstimatorKind::kHajek};
  std::vector<double> missing_ties{0.0};
  bool restrict_to_positive = true;
  std::size_t prob_reps = 10000;
  std::size_t ce_reps = 0;  // constant-effects redraws for the HT variance; 0 = off

  // Hierarchical
  std::size_t groups = 6;
  std::size_t group_size = 75;
  std::size_t groups_per_tract = 2;
  double psi = 2.0 / 3.0;
  double phi = 1.0 / 3.0;
  double share_psi = 0.5;
  std::vector<HierarchyLevel> levels{HierarchyLevel::kGroup};
  HierarchicalMultipliers hier_multipliers;

  // Common
  std::size_t reps = 3000;
  std::uint64_t seed = 1;
  double alpha = 0.05;
  bool redraw_outcomes = false;
  std::size_t threads = 0;  // 0 = hardware concurrency
};

// Throws ParseError (with line numbers) on unknown keys or bad values, then
// ParameterError when the combination is invalid.
ScenarioConfig parse_config(std::string_view text);
ScenarioConfig load_config(const std::filesystem::path& path);

// Accepts a file path or a preset name resolved against the presets directory.
std::filesystem::path resolve_preset(std::string_view name_or_path);
std::vector<std::string> preset_names();

void validate(const ScenarioConfig& cfg);

// Key = value text that parses back to the same configuration.
std::string format_config(const ScenarioConfig& cfg);

}  // namespace spillover
