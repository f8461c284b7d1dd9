#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "spillover/design.hpp"
#include "spillover/exposure.hpp"

namespace spillover {

enum class EstimatorKind { kHorvitzThompson, kHajek };
enum class VarianceKind { kConservative, kConstantEffects, kMax, kLinearized };

std::string to_string(EstimatorKind kind);
std::string to_string(VarianceKind kind);

// Units entering an estimate. Empty means all units.
using UnitMask = std::vector<std::uint8_t>;

// Units with pi_i(d_k) > 0 and pi_i(d_l) > 0.
UnitMask positive_support_mask(const ExposureProbabilities& probs, Condition k, Condition l);

struct EstimationOptions {
  // Restrict every contrast to units that can land in both of its conditions;
  // N becomes the size of that subset. Off: all N units are used and any
  // realized unit with zero probability is an error.
  bool restrict_to_positive = false;
  double alpha = 0.05;
};

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct EstimateReport {
  EstimatorKind estimator = EstimatorKind::kHorvitzThompson;
  Condition k = 0;
  Condition l = 0;
  bool defined = false;  // both conditions realized by at least one unit
  double point = kNaN;
  double variance = kNaN;
  VarianceKind variance_kind = VarianceKind::kConservative;
  double ci_low = kNaN;
  double ci_high = kNaN;
  double alpha = 0.05;
  double total_k = 0;  // HT totals
  double total_l = 0;
  double mean_k = kNaN;
  double mean_l = kNaN;
  std::size_t count_k = 0;
  std::size_t count_l = 0;
  std::size_t population = 0;
  std::vector<std::string> warnings;
};

// sum_i I(D_i = d_k) Y_i / pi_i(d_k) over the units in `mask`.
double ht_total(const ExposureMatrix& e, std::span<const double> y,
                const ExposureProbabilities& probs, Condition k, const UnitMask& mask = {});

// (yT(d_k) - yT(d_l)) / N; variance fields are left unset.
EstimateReport ht_contrast(const ExposureMatrix& e, std::span<const double> y,
                           const ExposureProbabilities& probs, Condition k, Condition l,
                           const EstimationOptions& options = {});

// Ratio (Hajek) mean of condition k; nullopt when no unit is realized in k.
std::optional<double> hajek_mean(const ExposureMatrix& e, std::span<const double> y,
                                 const ExposureProbabilities& probs, Condition k,
                                 const UnitMask& mask = {});

// Conservative variance estimate of the HT total of condition k, including the
// correction for unit pairs that never share the condition.
double conservative_variance(const ExposureMatrix& e, std::span<const double> y,
                             const ExposureProbabilities& probs, Condition k,
                             const UnitMask& mask = {});

// Covariance approximation between the HT totals of k and l (k != l), with the
// own-unit term replaced by its Young-inequality bound.
double covariance_bound(const ExposureMatrix& e, std::span<const double> y,
                        const ExposureProbabilities& probs, Condition k, Condition l,
                        const UnitMask& mask = {});

// (Var_k + Var_l - 2 Cov_kl) / N^2, floored at zero.
double ht_contrast_variance(const ExposureMatrix& e, std::span<const double> y,
                            const ExposureProbabilities& probs, Condition k, Condition l,
                            const EstimationOptions& options = {});

// Randomization variance of the HT contrast under constant effects: each
// unit's schedule is imputed from its observed outcome shifted by Hajek mean
// differences, then the contrast is recomputed on `reps` assignments taken
// from `design` (all of them when reps >= design.size()). Population variance
// of those estimates; nullopt when the contrast is undefined.
std::optional<double> constant_effects_variance(const ExposureMapper& mapper,
                                                const ExposureMatrix& e, std::span<const double> y,
                                                const ExposureProbabilities& probs,
                                                const AssignmentSet& design, Condition k,
                                                Condition l, std::size_t reps, std::uint64_t seed,
                                                const EstimationOptions& options = {});

// max(conservative, constant effects); falls back to whichever is defined.
std::optional<double> reported_variance(std::optional<double> conservative,
                                        std::optional<double> constant_effects,
                                        std::vector<std::string>* warnings = nullptr);

// Linearized variance of the Hajek contrast: the conservative machinery on
// within-condition residuals, scaled by the estimated condition sizes.
double hajek_contrast_variance(const ExposureMatrix& e, std::span<const double> y,
                               const ExposureProbabilities& probs, Condition k, Condition l,
                               const EstimationOptions& options = {});

// point -/+ z_{1-alpha/2} sqrt(variance).
std::pair<double, double> confidence_interval(double point, double variance, double alpha);

struct ConstantEffectsConfig {
  const ExposureMapper& mapper;
  const AssignmentSet& design;
  std::size_t reps;
  std::uint64_t seed;
};

// HT contrast with variance max(conservative, constant effects) when
// `constant_effects` is given, conservative otherwise.
EstimateReport estimate_ht(const ExposureMatrix& e, std::span<const double> y,
                           const ExposureProbabilities& probs, Condition k, Condition l,
                           const EstimationOptions& options = {},
                           const ConstantEffectsConfig* constant_effects = nullptr);

// Hajek contrast with the linearized variance.
EstimateReport estimate_hajek(const ExposureMatrix& e, std::span<const double> y,
                              const ExposureProbabilities& probs, Condition k, Condition l,
                              const EstimationOptions& options = {});

}  // namespace spillover
