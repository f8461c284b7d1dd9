#pragma once

#include <cstddef>
#include <span>
#include <string>

namespace spillover {

// One replicate's estimate of one estimand. variance is NaN when it could
// not be computed; the CI then is NaN too.
struct ReplicateEstimate {
  bool defined = false;
  double estimate = 0;
  double variance = 0;
  double ci_low = 0;
  double ci_high = 0;
};

struct MetricsRow {
  std::string estimand;
  std::string estimator;
  double truth = 0;
  double mean = 0;
  double bias = 0;
  double sd = 0;        // sample standard deviation (n - 1)
  double rmse = 0;      // from raw errors
  double mean_se = 0;   // mean sqrt(variance) over replicates with a variance
  double coverage = 0;  // over replicates with a CI
  std::size_t reps = 0;       // defined replicates
  std::size_t undefined = 0;  // excluded replicates
  std::string error;          // nonempty when no replicate was usable

  // Monte Carlo standard error of the mean estimate.
  double mcse() const;
};

// Aggregates replicate estimates against the true value. Needs at least two
// defined replicates for SD; with none the row carries an error.
MetricsRow metrics(std::span<const ReplicateEstimate> estimates, double truth);
// Per-replicate true values (outcomes redrawn each replicate): errors are
// taken against each replicate's own truth and `truth` reports their mean.
MetricsRow metrics(std::span<const ReplicateEstimate> estimates, std::span<const double> truths);

// |RMSE^2 - (bias^2 + SD^2 (n-1)/n)|, which is zero up to rounding.
double rmse_identity_gap(const MetricsRow& row);

}  // namespace spillover
