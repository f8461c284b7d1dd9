#include "spillover/hierarchical.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "spillover/csv.hpp"
#include "spillover/errors.hpp"
#include "spillover/estimators.hpp"

namespace spillover {

void validate(const HierarchicalDataset& d) {
  std::map<std::int64_t, std::uint8_t> arm;
  for (const auto& row : d.rows) {
    if (row.group_arm > 1 || row.z > 1) {
      throw ParameterError("group_tr and indiv_tr must be 0 or 1 (group " +
                           std::to_string(row.group) + ")");
    }
    auto [it, inserted] = arm.emplace(row.group, row.group_arm);
    if (!inserted && it->second != row.group_arm) {
      throw ParameterError("group " + std::to_string(row.group) + " has mixed group_tr values");
    }
  }
}

HierarchicalDataset make_dataset(const HierarchicalAssignment& a, std::span<const double> y) {
  if (y.size() != a.z.size()) throw ParameterError("outcome vector has the wrong length");
  HierarchicalDataset d;
  d.rows.reserve(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const auto g = a.group_of[i];
    d.rows.push_back({static_cast<std::int64_t>(g), a.group_arm[g], a.z[i], y[i]});
  }
  return d;
}

double group_mean(const HierarchicalDataset& d, std::int64_t g, int z) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& row : d.rows) {
    if (row.group == g && row.z == z) {
      sum += row.y;
      ++count;
    }
  }
  if (count == 0) {
    throw EstimationError("group " + std::to_string(g) + " has no units with assignment " +
                          std::to_string(z));
  }
  return sum / static_cast<double>(count);
}

namespace {

constexpr double kNaNv = std::numeric_limits<double>::quiet_NaN();

struct GroupSummary {
  std::uint8_t arm = 0;
  double sum[2] = {0, 0};
  std::size_t count[2] = {0, 0};

  bool has(int z) const { return count[z] > 0; }
  double mean(int z) const { return sum[z] / static_cast<double>(count[z]); }
  double all() const {
    return (sum[0] + sum[1]) / static_cast<double>(count[0] + count[1]);
  }
  double share() const {
    return static_cast<double>(count[1]) / static_cast<double>(count[0] + count[1]);
  }
};

// Mean and variance of the mean (sample variance / count) of group-level
// values; nullopt when some group lacks the value.
struct ArmMean {
  bool defined = false;
  double mean = 0;
  double variance = kNaNv;
};

template <class F>
ArmMean arm_mean(const std::vector<const GroupSummary*>& groups, F value) {
  ArmMean out;
  if (groups.empty()) return out;
  std::vector<double> v;
  v.reserve(groups.size());
  for (const auto* g : groups) {
    const auto x = value(*g);
    if (!x) return out;
    v.push_back(*x);
  }
  out.defined = true;
  double sum = 0.0;
  for (double x : v) sum += x;
  out.mean = sum / static_cast<double>(v.size());
  if (v.size() >= 2) {
    double ss = 0.0;
    for (double x : v) ss += (x - out.mean) * (x - out.mean);
    out.variance = ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size());
  }
  return out;
}

EffectEstimate contrast(const ArmMean& a, const ArmMean& b) {
  EffectEstimate e;
  e.defined = a.defined && b.defined;
  if (!e.defined) {
    e.estimate = e.variance = e.ci_low = e.ci_high = kNaNv;
    return e;
  }
  e.estimate = a.mean - b.mean;
  e.variance = a.variance + b.variance;
  return e;
}

EffectEstimate single(const ArmMean& a) {
  EffectEstimate e;
  e.defined = a.defined;
  e.estimate = a.defined ? a.mean : kNaNv;
  e.variance = a.defined ? a.variance : kNaNv;
  return e;
}

}  // namespace

MarginalEffectsReport marginal_effects(const HierarchicalDataset& d, double alpha,
                                       std::optional<DeclaredSaturations> declared) {
  validate(d);
  std::map<std::int64_t, GroupSummary> groups;
  for (const auto& row : d.rows) {
    auto& g = groups[row.group];
    g.arm = row.group_arm;
    g.sum[row.z] += row.y;
    ++g.count[row.z];
  }
  std::vector<const GroupSummary*> arm[2];
  for (const auto& [id, g] : groups) arm[g.arm].push_back(&g);

  MarginalEffectsReport r;
  r.alpha = alpha;
  r.groups_psi = arm[1].size();
  r.groups_phi = arm[0].size();

  const auto treated = [](const GroupSummary& g) {
    return g.has(1) ? std::optional<double>(g.mean(1)) : std::nullopt;
  };
  const auto control = [](const GroupSummary& g) {
    return g.has(0) ? std::optional<double>(g.mean(0)) : std::nullopt;
  };
  const auto difference = [](const GroupSummary& g) {
    return g.has(0) && g.has(1) ? std::optional<double>(g.mean(1) - g.mean(0)) : std::nullopt;
  };
  const auto everyone = [](const GroupSummary& g) { return std::optional<double>(g.all()); };
  const auto share = [](const GroupSummary& g) { return std::optional<double>(g.share()); };

  const ArmMean y1_psi = arm_mean(arm[1], treated);
  const ArmMean y0_psi = arm_mean(arm[1], control);
  const ArmMean y0_phi = arm_mean(arm[0], control);

  r.effects[0] = single(arm_mean(arm[1], difference));
  r.effects[1] = single(arm_mean(arm[0], difference));
  r.effects[2] = contrast(y0_psi, y0_phi);
  r.effects[3] = contrast(y1_psi, y0_phi);
  r.effects[4] = contrast(arm_mean(arm[1], everyone), arm_mean(arm[0], everyone));
  // The group-level direct mean equals y1 - y0 only up to rounding; use the
  // arm means so that total = direct_psi + indirect on the same path.
  if (r.effects[0].defined && y1_psi.defined && y0_psi.defined) {
    r.effects[0].estimate = y1_psi.mean - y0_psi.mean;
  }
  if (r.effects[1].defined) {
    const ArmMean y1_phi = arm_mean(arm[0], treated);
    r.effects[1].estimate = y1_phi.mean - y0_phi.mean;
  }
  if (r.effects[3].defined && r.effects[0].defined && r.effects[2].defined) {
    r.effects[3].estimate = r.effects[0].estimate + r.effects[2].estimate;
  }

  for (auto& e : r.effects) {
    if (e.defined && !std::isnan(e.variance)) {
      std::tie(e.ci_low, e.ci_high) = confidence_interval(e.estimate, e.variance, alpha);
    } else {
      e.ci_low = e.ci_high = kNaNv;
    }
  }
  if (!arm[1].empty()) r.saturation_psi = arm_mean(arm[1], share).mean;
  if (!arm[0].empty()) r.saturation_phi = arm_mean(arm[0], share).mean;
  if (arm[1].empty()) r.warnings.push_back("no groups in the psi arm");
  if (arm[0].empty()) r.warnings.push_back("no groups in the phi arm");
  if (arm[1].size() == 1 || arm[0].size() == 1) {
    r.warnings.push_back("an arm has a single group; its variances are undefined");
  }
  if (declared) {
    std::size_t smallest = std::numeric_limits<std::size_t>::max();
    for (const auto& [id, g] : groups) smallest = std::min(smallest, g.count[0] + g.count[1]);
    const double tolerance = groups.empty() ? 0.0 : 1.0 / static_cast<double>(smallest);
    if (!arm[1].empty() && std::abs(r.saturation_psi - declared->psi) > tolerance) {
      r.warnings.push_back("realized psi saturation " + csv::format_double(r.saturation_psi) +
                           " differs from declared " + csv::format_double(declared->psi));
    }
    if (!arm[0].empty() && std::abs(r.saturation_phi - declared->phi) > tolerance) {
      r.warnings.push_back("realized phi saturation " + csv::format_double(r.saturation_phi) +
                           " differs from declared " + csv::format_double(declared->phi));
    }
  }
  return r;
}

namespace {

constexpr std::array<std::string_view, 4> kColumns{"group", "group_tr", "indiv_tr", "obs_outcome"};

}  // namespace

HierarchicalDataset parse_hierarchical(std::string_view text) {
  const auto all = csv::lines(text);
  std::size_t idx = 0;
  while (idx < all.size() && all[idx].text.front() == '#') ++idx;
  if (idx == all.size()) throw ParseError(0, "empty hierarchical dataset");
  const bool comma = all[idx].text.find(',') != std::string_view::npos;
  const char sep = comma ? ',' : ' ';
  const auto header = csv::split(all[idx].text, sep);
  if (header.size() != 4 || !std::equal(header.begin(), header.end(), kColumns.begin())) {
    throw ParseError(all[idx].number, "expected header 'group,group_tr,indiv_tr,obs_outcome'");
  }
  HierarchicalDataset d;
  for (++idx; idx < all.size(); ++idx) {
    const auto& line = all[idx];
    if (line.text.front() == '#') continue;
    auto fields = csv::split(line.text, sep);
    // Printed frames carry a leading row name.
    if (!comma && fields.size() == 5) fields.erase(fields.begin());
    if (fields.size() != 4) throw ParseError(line.number, "expected 4 fields");
    const auto group = csv::parse_int(fields[0], line.number);
    const auto arm = csv::parse_int(fields[1], line.number);
    const auto z = csv::parse_int(fields[2], line.number);
    if ((arm != 0 && arm != 1) || (z != 0 && z != 1)) {
      throw ParseError(line.number, "group_tr and indiv_tr must be 0 or 1");
    }
    d.rows.push_back({group, static_cast<std::uint8_t>(arm), static_cast<std::uint8_t>(z),
                      csv::parse_double(fields[3], line.number)});
  }
  try {
    validate(d);
  } catch (const ParameterError& e) {
    throw ParseError(0, e.what());
  }
  return d;
}

HierarchicalDataset load_hierarchical(const std::filesystem::path& path) {
  return parse_hierarchical(csv::read_file(path));
}

std::string format_hierarchical(const HierarchicalDataset& d) {
  std::ostringstream out;
  out << "group,group_tr,indiv_tr,obs_outcome\n";
  for (const auto& row : d.rows) {
    out << row.group << ',' << int(row.group_arm) << ',' << int(row.z) << ','
        << csv::format_double(row.y) << '\n';
  }
  return out.str();
}

void save_hierarchical(const HierarchicalDataset& d, const std::filesystem::path& path) {
  csv::write_file(path, format_hierarchical(d));
}

std::string report_json(const MarginalEffectsReport& r) {
  using nlohmann::ordered_json;
  const auto number = [](bool defined, double x) {
    return defined && std::isfinite(x) ? ordered_json(x) : ordered_json(nullptr);
  };
  ordered_json j;
  for (std::size_t e = 0; e < kEffectNames.size(); ++e) {
    j[std::string(kEffectNames[e]) + "_hat"] = number(r.effects[e].defined, r.effects[e].estimate);
  }
  for (std::size_t e = 0; e < kEffectNames.size(); ++e) {
    const auto& x = r.effects[e];
    j["variance"][std::string(kEffectNames[e])] = number(x.defined, x.variance);
    j["ci"][std::string(kEffectNames[e])] = {number(x.defined, x.ci_low),
                                             number(x.defined, x.ci_high)};
  }
  j["alpha"] = r.alpha;
  j["groups_psi"] = r.groups_psi;
  j["groups_phi"] = r.groups_phi;
  j["saturation_psi"] = r.saturation_psi;
  j["saturation_phi"] = r.saturation_phi;
  j["warnings"] = r.warnings;
  return j.dump(2);
}

}  // namespace spillover
