#include "spillover/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/normal.hpp>

#include "spillover/errors.hpp"
#include "spillover/rng.hpp"

namespace spillover {

std::string to_string(EstimatorKind kind) {
  return kind == EstimatorKind::kHorvitzThompson ? "horvitz_thompson" : "hajek";
}

std::string to_string(VarianceKind kind) {
  switch (kind) {
    case VarianceKind::kConservative: return "conservative";
    case VarianceKind::kConstantEffects: return "constant_effects";
    case VarianceKind::kMax: return "max";
    case VarianceKind::kLinearized: return "linearized";
  }
  return "unknown";
}

UnitMask positive_support_mask(const ExposureProbabilities& probs, Condition k, Condition l) {
  UnitMask mask(probs.units(), 0);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = probs.individual(k, i) > 0.0 && probs.individual(l, i) > 0.0;
  }
  return mask;
}

namespace {

bool in_mask(const UnitMask& mask, std::size_t i) { return mask.empty() || mask[i]; }

std::size_t mask_size(const UnitMask& mask, std::size_t n) {
  return mask.empty() ? n : static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1));
}

void check_shapes(const ExposureMatrix& e, std::span<const double> y,
                  const ExposureProbabilities& probs, const UnitMask& mask) {
  if (y.size() != e.units() || probs.units() != e.units()) {
    throw ParameterError("exposures, outcomes and probabilities must cover the same units");
  }
  if (probs.kind() != e.kind) {
    throw ParameterError("exposures and probabilities use different exposure mappings");
  }
  if (!mask.empty() && mask.size() != e.units()) {
    throw ParameterError("unit mask has the wrong length");
  }
}

// Units realized in k (within the mask), checking their probabilities.
std::vector<std::size_t> realized_units(const ExposureMatrix& e, const ExposureProbabilities& probs,
                                        Condition k, const UnitMask& mask) {
  std::vector<std::size_t> units;
  for (std::size_t i = 0; i < e.units(); ++i) {
    if (!e.indicator(i, k) || !in_mask(mask, i)) continue;
    if (!(probs.individual(k, i) > 0.0)) {
      throw EstimationError("unit " + std::to_string(i) + " is realized in condition " +
                            condition_labels(e.kind)[k] + " whose estimated probability is zero");
    }
    units.push_back(i);
  }
  return units;
}

std::size_t zero_joint(const ExposureProbabilities& probs, Condition k, Condition l, std::size_t i,
                       const UnitMask& mask) {
  if (mask.empty()) return probs.zero_joint_count(k, l, i);
  std::size_t zeros = 0;
  for (std::size_t j = 0; j < mask.size(); ++j) {
    if (j != i && mask[j] && probs.joint(k, l, i, j) == 0.0) ++zeros;
  }
  return zeros;
}

double total_variance(std::span<const double> y, const ExposureProbabilities& probs, Condition k,
                      const std::vector<std::size_t>& units, const UnitMask& mask) {
  if (!probs.has_joint()) {
    throw EstimationError("variance estimation needs joint exposure probabilities");
  }
  double v = 0.0;
  for (std::size_t a = 0; a < units.size(); ++a) {
    const std::size_t i = units[a];
    const double pi = probs.individual(k, i);
    const double wi = y[i] / pi;
    v += (1.0 - pi) * wi * wi;
    double pairs = 0.0;
    for (std::size_t b = a + 1; b < units.size(); ++b) {
      const std::size_t j = units[b];
      const double pij = probs.joint(k, k, i, j);
      if (pij <= 0.0) continue;
      const double pj = probs.individual(k, j);
      pairs += (pij - pi * pj) / pij * wi * (y[j] / pj);
    }
    v += 2.0 * pairs;
    // Pairs that can never share condition k: each ordered pair adds
    // y_i^2 / (2 pi_i) for its realized member.
    v += static_cast<double>(zero_joint(probs, k, k, i, mask)) * y[i] * y[i] / pi;
  }
  return v;
}

double total_covariance(std::span<const double> y, const ExposureProbabilities& probs, Condition k,
                        Condition l, const std::vector<std::size_t>& units_k,
                        const std::vector<std::size_t>& units_l, const UnitMask& mask) {
  if (!probs.has_joint()) {
    throw EstimationError("variance estimation needs joint exposure probabilities");
  }
  double c = 0.0;
  for (std::size_t i : units_k) {
    const double pi = probs.individual(k, i);
    const double wi = y[i] / pi;
    for (std::size_t j : units_l) {
      const double pij = probs.joint(k, l, i, j);
      if (pij <= 0.0) continue;
      const double pj = probs.individual(l, j);
      c += (pij - pi * pj) / pij * wi * (y[j] / pj);
    }
  }
  // Unidentified pairs (j != i with pi_ij = 0) and the own-unit term j == i.
  for (std::size_t i : units_k) {
    const double half = y[i] * y[i] / (2.0 * probs.individual(k, i));
    c -= static_cast<double>(zero_joint(probs, k, l, i, mask) + 1) * half;
  }
  for (std::size_t j : units_l) {
    const double half = y[j] * y[j] / (2.0 * probs.individual(l, j));
    c -= static_cast<double>(zero_joint(probs, l, k, j, mask) + 1) * half;
  }
  return c;
}

UnitMask contrast_mask(const ExposureProbabilities& probs, Condition k, Condition l,
                       const EstimationOptions& options) {
  return options.restrict_to_positive ? positive_support_mask(probs, k, l) : UnitMask{};
}

double normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

void attach_interval(EstimateReport& report) {
  if (!report.defined || std::isnan(report.variance)) return;
  std::tie(report.ci_low, report.ci_high) =
      confidence_interval(report.point, report.variance, report.alpha);
}

}  // namespace

double ht_total(const ExposureMatrix& e, std::span<const double> y,
                const ExposureProbabilities& probs, Condition k, const UnitMask& mask) {
  check_shapes(e, y, probs, mask);
  double total = 0.0;
  for (std::size_t i : realized_units(e, probs, k, mask)) total += y[i] / probs.individual(k, i);
  return total;
}

EstimateReport ht_contrast(const ExposureMatrix& e, std::span<const double> y,
                           const ExposureProbabilities& probs, Condition k, Condition l,
                           const EstimationOptions& options) {
  const UnitMask mask = contrast_mask(probs, k, l, options);
  check_shapes(e, y, probs, mask);
  EstimateReport report;
  report.estimator = EstimatorKind::kHorvitzThompson;
  report.k = k;
  report.l = l;
  report.alpha = options.alpha;
  report.population = mask_size(mask, e.units());
  report.count_k = realized_units(e, probs, k, mask).size();
  report.count_l = realized_units(e, probs, l, mask).size();
  report.total_k = ht_total(e, y, probs, k, mask);
  report.total_l = ht_total(e, y, probs, l, mask);
  report.defined = report.count_k > 0 && report.count_l > 0 && report.population > 0;
  if (report.population > 0) {
    const double n = static_cast<double>(report.population);
    if (report.count_k > 0) report.mean_k = report.total_k / n;
    if (report.count_l > 0) report.mean_l = report.total_l / n;
  }
  if (report.defined) report.point = report.mean_k - report.mean_l;
  return report;
}

std::optional<double> hajek_mean(const ExposureMatrix& e, std::span<const double> y,
                                 const ExposureProbabilities& probs, Condition k,
                                 const UnitMask& mask) {
  check_shapes(e, y, probs, mask);
  double num = 0.0;
  double den = 0.0;
  const auto units = realized_units(e, probs, k, mask);
  if (units.empty()) return std::nullopt;
  for (std::size_t i : units) {
    const double w = 1.0 / probs.individual(k, i);
    num += y[i] * w;
    den += w;
  }
  return num / den;
}

double conservative_variance(const ExposureMatrix& e, std::span<const double> y,
                             const ExposureProbabilities& probs, Condition k,
                             const UnitMask& mask) {
  check_shapes(e, y, probs, mask);
  return total_variance(y, probs, k, realized_units(e, probs, k, mask), mask);
}

double covariance_bound(const ExposureMatrix& e, std::span<const double> y,
                        const ExposureProbabilities& probs, Condition k, Condition l,
                        const UnitMask& mask) {
  check_shapes(e, y, probs, mask);
  if (k == l) throw ParameterError("covariance_bound needs two distinct conditions");
  return total_covariance(y, probs, k, l, realized_units(e, probs, k, mask),
                          realized_units(e, probs, l, mask), mask);
}

double ht_contrast_variance(const ExposureMatrix& e, std::span<const double> y,
                            const ExposureProbabilities& probs, Condition k, Condition l,
                            const EstimationOptions& options) {
  if (k == l) return 0.0;
  const UnitMask mask = contrast_mask(probs, k, l, options);
  check_shapes(e, y, probs, mask);
  const auto units_k = realized_units(e, probs, k, mask);
  const auto units_l = realized_units(e, probs, l, mask);
  const double n = static_cast<double>(mask_size(mask, e.units()));
  const double v = total_variance(y, probs, k, units_k, mask) +
                   total_variance(y, probs, l, units_l, mask) -
                   2.0 * total_covariance(y, probs, k, l, units_k, units_l, mask);
  return std::max(0.0, v / (n * n));
}

std::optional<double> constant_effects_variance(const ExposureMapper& mapper,
                                                const ExposureMatrix& e, std::span<const double> y,
                                                const ExposureProbabilities& probs,
                                                const AssignmentSet& design, Condition k,
                                                Condition l, std::size_t reps, std::uint64_t seed,
                                                const EstimationOptions& options) {
  const UnitMask mask = contrast_mask(probs, k, l, options);
  check_shapes(e, y, probs, mask);
  if (mapper.kind() != e.kind || mapper.units() != e.units()) {
    throw ParameterError("exposure mapper does not match the exposures");
  }
  if (reps == 0 || design.empty()) return std::nullopt;

  const std::size_t kk = e.conditions();
  std::vector<std::optional<double>> means(kk);
  for (std::size_t c = 0; c < kk; ++c) {
    means[c] = hajek_mean(e, y, probs, static_cast<Condition>(c), mask);
  }
  if (!means[k] || !means[l]) return std::nullopt;

  // Imputed y_i(d_k), y_i(d_l) under constant effects.
  const std::size_t n = e.units();
  std::vector<double> yk(n, 0.0), yl(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!in_mask(mask, i)) continue;
    const auto& own = means[e.condition[i]];
    yk[i] = y[i] + *means[k] - *own;
    yl[i] = y[i] + *means[l] - *own;
  }

  std::vector<std::size_t> picks(design.size());
  std::iota(picks.begin(), picks.end(), 0);
  if (reps < design.size()) {
    Rng rng = make_rng(seed);
    for (std::size_t i = 0; i < reps; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, picks.size() - 1);
      std::swap(picks[i], picks[pick(rng)]);
    }
    picks.resize(reps);
  }

  const double population = static_cast<double>(mask_size(mask, n));
  std::vector<Condition> cond(n);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t r : picks) {
    mapper.map_into(design[r], cond);
    double diff = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!in_mask(mask, i)) continue;
      if (cond[i] != k && cond[i] != l) continue;
      const double p = probs.individual(cond[i], i);
      if (!(p > 0.0)) {
        throw EstimationError("redrawn assignment realizes a zero-probability condition");
      }
      diff += cond[i] == k ? yk[i] / p : -yl[i] / p;
    }
    const double estimate = diff / population;
    sum += estimate;
    sum_sq += estimate * estimate;
  }
  const double count = static_cast<double>(picks.size());
  const double mean = sum / count;
  return std::max(0.0, sum_sq / count - mean * mean);
}

std::optional<double> reported_variance(std::optional<double> conservative,
                                        std::optional<double> constant_effects,
                                        std::vector<std::string>* warnings) {
  if (conservative && constant_effects) return std::max(*conservative, *constant_effects);
  if (warnings && (conservative || constant_effects)) {
    warnings->push_back(conservative ? "constant-effects variance undefined; using conservative"
                                     : "conservative variance undefined; using constant effects");
  }
  return conservative ? conservative : constant_effects;
}

double hajek_contrast_variance(const ExposureMatrix& e, std::span<const double> y,
                               const ExposureProbabilities& probs, Condition k, Condition l,
                               const EstimationOptions& options) {
  const UnitMask mask = contrast_mask(probs, k, l, options);
  check_shapes(e, y, probs, mask);
  const auto mean_k = hajek_mean(e, y, probs, k, mask);
  const auto mean_l = hajek_mean(e, y, probs, l, mask);
  if (!mean_k || !mean_l) throw EstimationError("Hajek contrast has an empty condition");
  if (k == l) return 0.0;

  const auto units_k = realized_units(e, probs, k, mask);
  const auto units_l = realized_units(e, probs, l, mask);
  std::vector<double> residual(e.units(), 0.0);
  double size_k = 0.0;
  double size_l = 0.0;
  for (std::size_t i : units_k) {
    residual[i] = y[i] - *mean_k;
    size_k += 1.0 / probs.individual(k, i);
  }
  for (std::size_t i : units_l) {
    residual[i] = y[i] - *mean_l;
    size_l += 1.0 / probs.individual(l, i);
  }
  const double v = total_variance(residual, probs, k, units_k, mask) / (size_k * size_k) +
                   total_variance(residual, probs, l, units_l, mask) / (size_l * size_l) -
                   2.0 * total_covariance(residual, probs, k, l, units_k, units_l, mask) /
                       (size_k * size_l);
  return std::max(0.0, v);
}

std::pair<double, double> confidence_interval(double point, double variance, double alpha) {
  if (variance < 0.0) throw EstimationError("negative variance passed to confidence_interval");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("alpha must lie in (0, 1)");
  const double half = normal_quantile(1.0 - alpha / 2.0) * std::sqrt(variance);
  return {point - half, point + half};
}

EstimateReport estimate_ht(const ExposureMatrix& e, std::span<const double> y,
                           const ExposureProbabilities& probs, Condition k, Condition l,
                           const EstimationOptions& options,
                           const ConstantEffectsConfig* constant_effects) {
  EstimateReport report = ht_contrast(e, y, probs, k, l, options);
  report.variance_kind = VarianceKind::kConservative;
  if (!report.defined) return report;
  std::optional<double> conservative;
  if (probs.has_joint()) {
    conservative = ht_contrast_variance(e, y, probs, k, l, options);
  } else {
    report.warnings.push_back("no joint probabilities; conservative variance unavailable");
  }
  if (constant_effects) {
    if (constant_effects->reps == 1) {
      report.warnings.push_back("constant-effects variance from a single redraw is 0");
    }
    const auto ce = constant_effects_variance(constant_effects->mapper, e, y, probs,
                                              constant_effects->design, k, l,
                                              constant_effects->reps, constant_effects->seed,
                                              options);
    const auto v = reported_variance(conservative, ce, &report.warnings);
    if (v) report.variance = *v;
    report.variance_kind = conservative && ce ? VarianceKind::kMax
                           : ce               ? VarianceKind::kConstantEffects
                                              : VarianceKind::kConservative;
  } else if (conservative) {
    report.variance = *conservative;
  }
  attach_interval(report);
  return report;
}

EstimateReport estimate_hajek(const ExposureMatrix& e, std::span<const double> y,
                              const ExposureProbabilities& probs, Condition k, Condition l,
                              const EstimationOptions& options) {
  const UnitMask mask = contrast_mask(probs, k, l, options);
  check_shapes(e, y, probs, mask);
  EstimateReport report;
  report.estimator = EstimatorKind::kHajek;
  report.variance_kind = VarianceKind::kLinearized;
  report.k = k;
  report.l = l;
  report.alpha = options.alpha;
  report.population = mask_size(mask, e.units());
  report.count_k = realized_units(e, probs, k, mask).size();
  report.count_l = realized_units(e, probs, l, mask).size();
  report.total_k = ht_total(e, y, probs, k, mask);
  report.total_l = ht_total(e, y, probs, l, mask);
  const auto mean_k = hajek_mean(e, y, probs, k, mask);
  const auto mean_l = hajek_mean(e, y, probs, l, mask);
  if (mean_k) report.mean_k = *mean_k;
  if (mean_l) report.mean_l = *mean_l;
  report.defined = mean_k.has_value() && mean_l.has_value();
  if (!report.defined) return report;
  report.point = *mean_k - *mean_l;
  if (probs.has_joint()) {
    report.variance = hajek_contrast_variance(e, y, probs, k, l, options);
  } else {
    report.warnings.push_back("no joint probabilities; linearized variance unavailable");
  }
  attach_interval(report);
  return report;
}

}  // namespace spillover
