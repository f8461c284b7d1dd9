#include "spillover/metrics.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "spillover/errors.hpp"

namespace spillover {

double MetricsRow::mcse() const {
  return reps == 0 ? std::numeric_limits<double>::quiet_NaN()
                   : sd / std::sqrt(static_cast<double>(reps));
}

MetricsRow metrics(std::span<const ReplicateEstimate> estimates, double truth) {
  const std::vector<double> truths(estimates.size(), truth);
  MetricsRow row = metrics(estimates, truths);
  row.truth = truth;
  return row;
}

MetricsRow metrics(std::span<const ReplicateEstimate> estimates, std::span<const double> truths) {
  if (truths.size() != estimates.size()) {
    throw ParameterError("one true value per replicate is required");
  }
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  MetricsRow row;
  double truth_sum = 0.0;
  double err_sum = 0.0;
  double sq_err = 0.0;
  double se_sum = 0.0;
  std::size_t se_count = 0;
  std::size_t covered = 0;
  std::size_t ci_count = 0;
  const auto usable = [](const ReplicateEstimate& e) {
    return e.defined && std::isfinite(e.estimate);
  };
  for (std::size_t r = 0; r < estimates.size(); ++r) {
    const auto& e = estimates[r];
    if (!usable(e)) {
      ++row.undefined;
      continue;
    }
    ++row.reps;
    const double err = e.estimate - truths[r];
    truth_sum += truths[r];
    err_sum += err;
    sq_err += err * err;
    if (std::isfinite(e.variance) && e.variance >= 0.0) {
      se_sum += std::sqrt(e.variance);
      ++se_count;
      if (std::isfinite(e.ci_low) && std::isfinite(e.ci_high)) {
        ++ci_count;
        if (e.ci_low <= truths[r] && truths[r] <= e.ci_high) ++covered;
      }
    }
  }
  if (row.reps == 0) {
    row.error = "all replicates undefined";
    row.truth = row.mean = row.bias = row.sd = row.rmse = row.mean_se = row.coverage = nan;
    return row;
  }
  const double n = static_cast<double>(row.reps);
  row.truth = truth_sum / n;
  row.bias = err_sum / n;
  row.mean = row.truth + row.bias;
  // SD of the errors; equals the SD of the estimates when the truth is fixed.
  double ss = 0.0;
  for (std::size_t r = 0; r < estimates.size(); ++r) {
    if (!usable(estimates[r])) continue;
    const double d = estimates[r].estimate - truths[r] - row.bias;
    ss += d * d;
  }
  row.sd = row.reps >= 2 ? std::sqrt(ss / (n - 1.0)) : nan;
  row.rmse = std::sqrt(sq_err / n);
  row.mean_se = se_count ? se_sum / static_cast<double>(se_count) : nan;
  row.coverage = ci_count ? static_cast<double>(covered) / static_cast<double>(ci_count) : nan;
  return row;
}

double rmse_identity_gap(const MetricsRow& row) {
  const double n = static_cast<double>(row.reps);
  const double sd2 = row.reps >= 2 ? row.sd * row.sd * (n - 1.0) / n : 0.0;
  return std::abs(row.rmse * row.rmse - (row.bias * row.bias + sd2));
}

}  // namespace spillover
