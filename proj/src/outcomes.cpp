#include "spillover/outcomes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "spillover/csv.hpp"
#include "spillover/errors.hpp"
#include "spillover/rng.hpp"

namespace spillover {

std::string to_string(SpilloverSign sign) {
  return sign == SpilloverSign::kPositive ? "positive" : "negative";
}

SpilloverSign parse_spillover_sign(std::string_view text) {
  if (text == "positive") return SpilloverSign::kPositive;
  if (text == "negative") return SpilloverSign::kNegative;
  throw ParameterError("unknown spillover sign '" + std::string(text) +
                       "' (expected positive or negative)");
}

DGPSpec default_dgp(ExposureKind kind, SpilloverSign sign, double kappa) {
  DGPSpec spec;
  spec.kind = kind;
  spec.kappa = kappa;
  const bool positive = sign == SpilloverSign::kPositive;
  switch (kind) {
    case ExposureKind::kNone:
      spec.multipliers = {2.0, 1.0};
      break;
    case ExposureKind::kHop1:
      spec.multipliers = positive ? std::vector<double>{2.0, 1.5, 1.25, 1.0}
                                  : std::vector<double>{1.25, 1.5, 0.75, 1.0};
      break;
    case ExposureKind::kHop2:
      spec.multipliers =
          positive ? std::vector<double>{2.25, 2.0, 1.75, 1.5, 1.5, 1.25, 1.125, 1.0}
                   : std::vector<double>{1.125, 1.25, 1.375, 1.5, 0.625, 0.75, 0.875, 1.0};
      break;
  }
  return spec;
}

std::vector<double> dilated_baseline(const Graph& g, double kappa, std::uint64_t seed) {
  if (!(kappa >= 0.0)) throw ParameterError("kappa must be nonnegative");
  Rng rng = make_rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> out(g.size());
  for (UnitId i = 0; i < g.size(); ++i) {
    const double degrees = static_cast<double>(g.degree(i) + second_degree_set(g, i).size());
    out[i] = std::abs(normal(rng)) + kappa * degrees;
  }
  return out;
}

PotentialOutcomeTable::PotentialOutcomeTable(ExposureKind kind, Eigen::MatrixXd values)
    : kind_(kind), values_(std::move(values)) {
  if (static_cast<std::size_t>(values_.rows()) != condition_count(kind)) {
    throw ParameterError("potential outcome table needs one row per exposure condition");
  }
  if (!values_.allFinite()) throw ParameterError("potential outcomes must be finite");
}

double PotentialOutcomeTable::mean(Condition k) const {
  if (k >= conditions()) throw ParameterError("unknown condition index " + std::to_string(k));
  return values_.row(k).mean();
}

PotentialOutcomeTable dilated_outcomes(std::span<const double> baseline, const DGPSpec& spec) {
  const std::size_t kk = condition_count(spec.kind);
  if (spec.multipliers.size() != kk) {
    throw ParameterError("mapping " + to_string(spec.kind) + " needs " + std::to_string(kk) +
                         " multipliers, got " + std::to_string(spec.multipliers.size()));
  }
  const auto n = static_cast<Eigen::Index>(baseline.size());
  Eigen::MatrixXd values(static_cast<Eigen::Index>(kk), n);
  for (std::size_t k = 0; k < kk; ++k) {
    for (Eigen::Index i = 0; i < n; ++i) {
      values(static_cast<Eigen::Index>(k), i) = spec.multipliers[k] * baseline[i];
    }
  }
  return PotentialOutcomeTable(spec.kind, std::move(values));
}

std::vector<double> realize_observed(const ExposureMatrix& e, const PotentialOutcomeTable& t) {
  if (e.kind != t.kind() || e.units() != t.units()) {
    throw ParameterError("exposures and potential outcome table disagree in mapping or size");
  }
  std::vector<double> y(e.units());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = t.value(e.condition[i], i);
  return y;
}

double true_contrast(const PotentialOutcomeTable& t, Condition k, Condition l) {
  if (k == l) {
    t.mean(k);
    return 0.0;
  }
  return t.mean(k) - t.mean(l);
}

double full_effect(const PotentialOutcomeTable& t) {
  return true_contrast(t, 0, static_cast<Condition>(t.conditions() - 1));
}

std::string format_outcomes(const PotentialOutcomeTable& t) {
  std::ostringstream out;
  const auto& labels = condition_labels(t.kind());
  out << "unit,condition,value\n";
  for (std::size_t i = 0; i < t.units(); ++i) {
    for (std::size_t k = 0; k < t.conditions(); ++k) {
      out << i << ',' << labels[k] << ','
          << csv::format_double(t.value(static_cast<Condition>(k), i)) << '\n';
    }
  }
  return out.str();
}

std::string to_string(HierarchyLevel level) {
  return level == HierarchyLevel::kGroup ? "group" : "tract";
}

HierarchyLevel parse_hierarchy_level(std::string_view text) {
  if (text == "group") return HierarchyLevel::kGroup;
  if (text == "tract") return HierarchyLevel::kTract;
  throw ParameterError("unknown hierarchy level '" + std::string(text) +
                       "' (expected group or tract)");
}

HierarchicalOutcomeModel::HierarchicalOutcomeModel(std::vector<double> baseline,
                                                   std::vector<std::uint32_t> group_of,
                                                   std::vector<std::uint32_t> tract_of_group,
                                                   double psi, double phi,
                                                   HierarchicalMultipliers m,
                                                   HierarchyLevel level)
    : baseline_(std::move(baseline)),
      group_of_(std::move(group_of)),
      tract_of_group_(std::move(tract_of_group)),
      psi_(psi),
      phi_(phi),
      m_(m),
      level_(level) {
  if (baseline_.size() != group_of_.size()) {
    throw ParameterError("baseline and group map have different lengths");
  }
  const std::size_t groups = count_groups(group_of_);
  group_size_.assign(groups, 0);
  for (auto g : group_of_) ++group_size_[g];
  if (level_ == HierarchyLevel::kTract) {
    if (tract_of_group_.size() != groups) {
      throw ParameterError("tract level needs a tract for each of the " + std::to_string(groups) +
                           " groups");
    }
    count_groups(tract_of_group_);
  } else {
    tract_of_group_.assign(groups, 0);
    std::iota(tract_of_group_.begin(), tract_of_group_.end(), 0);
  }
}

double HierarchicalOutcomeModel::multiplier(int z, double share) const {
  const double at_psi = z ? m_.treated_psi : m_.control_psi;
  const double at_phi = z ? m_.treated_phi : m_.control_phi;
  if (psi_ == phi_) return at_phi;
  return at_phi + (share - phi_) / (psi_ - phi_) * (at_psi - at_phi);
}

double HierarchicalOutcomeModel::uniform_share(std::size_t group, bool psi_arm) const {
  const double s = psi_arm ? psi_ : phi_;
  std::size_t treated = 0;
  std::size_t size = 0;
  for (std::size_t g = 0; g < group_size_.size(); ++g) {
    if (tract_of_group_[g] != tract_of_group_[group]) continue;
    treated += treated_count(group_size_[g], s);
    size += group_size_[g];
  }
  return static_cast<double>(treated) / static_cast<double>(size);
}

std::vector<double> HierarchicalOutcomeModel::observed(const HierarchicalAssignment& a) const {
  if (a.z.size() != units() || a.group_of != group_of_) {
    throw ParameterError("assignment does not match the outcome model's groups");
  }
  const std::size_t levels =
      1 + *std::max_element(tract_of_group_.begin(), tract_of_group_.end());
  std::vector<double> treated(levels, 0.0), size(levels, 0.0);
  for (std::size_t i = 0; i < units(); ++i) {
    const auto t = tract_of_group_[group_of_[i]];
    treated[t] += a.z[i];
    size[t] += 1.0;
  }
  std::vector<double> y(units());
  for (std::size_t i = 0; i < units(); ++i) {
    const auto t = tract_of_group_[group_of_[i]];
    y[i] = baseline_[i] * multiplier(a.z[i], treated[t] / size[t]);
  }
  return y;
}

MarginalEstimands HierarchicalOutcomeModel::estimands() const {
  // Group-average potential outcomes, then the unweighted mean over groups.
  const std::size_t groups = group_size_.size();
  std::vector<double> base_sum(groups, 0.0);
  for (std::size_t i = 0; i < units(); ++i) base_sum[group_of_[i]] += baseline_[i];

  double y1_psi = 0, y0_psi = 0, y1_phi = 0, y0_phi = 0, all_psi = 0, all_phi = 0;
  for (std::size_t g = 0; g < groups; ++g) {
    const double n = static_cast<double>(group_size_[g]);
    const double b = base_sum[g] / n;
    const double s_psi = uniform_share(g, true);
    const double s_phi = uniform_share(g, false);
    const double a1 = b * multiplier(1, s_psi), a0 = b * multiplier(0, s_psi);
    const double c1 = b * multiplier(1, s_phi), c0 = b * multiplier(0, s_phi);
    y1_psi += a1;
    y0_psi += a0;
    y1_phi += c1;
    y0_phi += c0;
    const double r_psi = static_cast<double>(treated_count(group_size_[g], psi_)) / n;
    const double r_phi = static_cast<double>(treated_count(group_size_[g], phi_)) / n;
    all_psi += r_psi * a1 + (1.0 - r_psi) * a0;
    all_phi += r_phi * c1 + (1.0 - r_phi) * c0;
  }
  const double G = static_cast<double>(groups);
  MarginalEstimands out;
  out.direct_psi = (y1_psi - y0_psi) / G;
  out.direct_phi = (y1_phi - y0_phi) / G;
  out.indirect = (y0_psi - y0_phi) / G;
  out.total = (y1_psi - y0_phi) / G;
  out.overall = (all_psi - all_phi) / G;
  return out;
}

HierarchicalOutcomeModel hierarchical_outcomes(std::vector<std::uint32_t> group_of,
                                               std::vector<std::uint32_t> tract_of_group,
                                               double psi, double phi,
                                               const HierarchicalMultipliers& m,
                                               HierarchyLevel level, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> baseline(group_of.size());
  for (auto& b : baseline) b = std::abs(normal(rng));
  return HierarchicalOutcomeModel(std::move(baseline), std::move(group_of),
                                  std::move(tract_of_group), psi, phi, m, level);
}

}  // namespace spillover
