#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "spillover/errors.hpp"
#include "spillover/metrics.hpp"
#include "spillover/scenario_config.hpp"
#include "spillover/simulation.hpp"

namespace spillover {
namespace {

ReplicateEstimate est(double x, double v = 1.0) {
  return {true, x, v, x - 1.959963984540054 * std::sqrt(v), x + 1.959963984540054 * std::sqrt(v)};
}

TEST(Metrics, ThreeValueHandComputation) {
  const std::vector<ReplicateEstimate> e{est(1), est(2), est(3)};
  const auto row = metrics(e, 2.0);
  EXPECT_NEAR(row.bias, 0.0, 1e-15);
  EXPECT_NEAR(row.sd, 1.0, 1e-15);
  EXPECT_NEAR(row.rmse, std::sqrt(2.0 / 3.0), 1e-15);
  EXPECT_NEAR(row.mean_se, 1.0, 1e-15);
  EXPECT_NEAR(row.coverage, 1.0, 1e-15);
  EXPECT_EQ(row.reps, 3u);
  EXPECT_LT(rmse_identity_gap(row), 1e-9);
}

TEST(Metrics, ConstantEstimates) {
  const std::vector<ReplicateEstimate> e{est(5, 0), est(5, 0), est(5, 0)};
  const auto row = metrics(e, 3.5);
  EXPECT_EQ(row.sd, 0.0);
  EXPECT_NEAR(row.rmse, 1.5, 1e-15);
  EXPECT_EQ(row.coverage, 0.0);
  const auto exact = metrics(e, 5.0);
  EXPECT_EQ(exact.bias, 0.0);
  EXPECT_EQ(exact.rmse, 0.0);
  EXPECT_EQ(exact.coverage, 1.0);
}

TEST(Metrics, UndefinedReplicatesExcluded) {
  std::vector<ReplicateEstimate> e{est(1), est(3), ReplicateEstimate{}};
  auto row = metrics(e, 2.0);
  EXPECT_EQ(row.reps, 2u);
  EXPECT_EQ(row.undefined, 1u);
  EXPECT_NEAR(row.mcse(), std::sqrt(2.0) / std::sqrt(2.0), 1e-15);
  const std::vector<ReplicateEstimate> none(3);
  row = metrics(none, 1.0);
  EXPECT_FALSE(row.error.empty());
}

TEST(Metrics, PerReplicateTruths) {
  const std::vector<ReplicateEstimate> e{est(1), est(2), est(4)};
  const std::vector<double> truths{0, 2, 4};
  const auto row = metrics(e, truths);
  EXPECT_NEAR(row.truth, 2.0, 1e-15);
  EXPECT_NEAR(row.bias, 1.0 / 3.0, 1e-15);
  EXPECT_LT(rmse_identity_gap(row), 1e-12);
}

TEST(Config, ParsesKeysFractionsAndLists) {
  const auto cfg = parse_config(
      "# comment\nkind = hierarchical\npsi = 2/3\nphi = 1/3\nlevel = group, tract\n"
      "groups = 4\ngroup_size = 3\nreps = 10\n");
  EXPECT_EQ(cfg.kind, ScenarioKind::kHierarchical);
  EXPECT_NEAR(cfg.psi, 2.0 / 3.0, 1e-15);
  EXPECT_EQ(cfg.levels.size(), 2u);
  const auto net = parse_config("truth = hop1, hop2\nanalysis = none, hop1, hop2\ncontrasts = full\n");
  EXPECT_EQ(net.truth.size(), 2u);
  EXPECT_EQ(net.analysis.size(), 3u);
}

TEST(Config, ErrorsCarryLineNumbers) {
  try {
    parse_config("n = 40\nmean_degre = 4\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(parse_config("n = forty\n"), ParseError);
  EXPECT_THROW(parse_config("truth = hop3\n"), std::exception);
  EXPECT_THROW(parse_config("p = 1.5\n"), ParameterError);
  EXPECT_THROW(parse_config("truth = hop2\nanalysis = hop1\n"), ParameterError);
}

TEST(Config, PresetsParseAndRoundTrip) {
  const auto names = preset_names();
  EXPECT_GE(names.size(), 6u);
  for (const auto& name : names) {
    const auto cfg = load_config(resolve_preset(name));
    const auto again = parse_config(format_config(cfg));
    EXPECT_EQ(format_config(again), format_config(cfg)) << name;
  }
  EXPECT_THROW(resolve_preset("no-such-preset"), std::exception);
}

ScenarioConfig small_network() {
  auto cfg = parse_config(
      "n = 60\nmean_degree = 4\ndesign = complete\np = 0.2\ntruth = hop1\nanalysis = hop1\n"
      "estimators = ht, hajek\nprob_reps = 300\nce_reps = 10\nreps = 40\nseed = 5\n");
  return cfg;
}

TEST(Simulation, DeterministicAcrossThreadCounts) {
  auto cfg = small_network();
  cfg.threads = 1;
  const auto one = format_replicates(run_scenario(cfg));
  cfg.threads = 3;
  const auto three = format_replicates(run_scenario(cfg));
  EXPECT_EQ(one, three);
  cfg.seed = 6;
  EXPECT_NE(format_replicates(run_scenario(cfg)), one);
}

TEST(Simulation, SummaryRowsAndRmseIdentity) {
  const auto r = run_scenario(small_network());
  ASSERT_EQ(r.summary.size(), 6u);  // three contrasts, two estimators
  for (const auto& row : r.summary) {
    EXPECT_LT(rmse_identity_gap(row.metrics), 1e-9) << row.metrics.estimand;
    EXPECT_EQ(row.metrics.reps + row.metrics.undefined, 40u);
  }
  EXPECT_EQ(format_summary(r).rfind("spillover,truth,analysis,design,missing_ties,estimand", 0), 0u);
}

TEST(Simulation, MissingTiesSingleProportion) {
  auto cfg = small_network();
  cfg.estimators = {EstimatorKind::kHajek};
  const auto r = run_missing_ties_scenario(cfg, {0.25});
  ASSERT_EQ(r.cells.size(), 1u);
  EXPECT_EQ(r.cells[0].missing_ties, 0.25);
}

TEST(Simulation, HierarchicalToyReport) {
  auto cfg = load_config(resolve_preset("toy18"));
  cfg.reps = 30;
  const auto r = run_scenario(cfg);
  ASSERT_EQ(r.summary.size(), 5u);
  EXPECT_EQ(r.summary[0].metrics.estimand, "direct_psi");
  EXPECT_EQ(r.summary[4].metrics.estimand, "overall");
}

TEST(Simulation, WritesOutputs) {
  auto cfg = small_network();
  cfg.reps = 5;
  const auto dir = std::filesystem::temp_directory_path() / "spillover_outputs_test";
  std::filesystem::remove_all(dir);
  write_outputs(run_scenario(cfg), dir);
  for (const char* f : {"summary.csv", "replicates.csv", "meta.json"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
  std::filesystem::remove_all(dir);
}

TEST(ParallelFor, PropagatesExceptions) {
  std::vector<int> hit(50, 0);
  parallel_for(50, 4, [&](std::size_t i) { hit[i] = 1; });
  for (int h : hit) EXPECT_EQ(h, 1);
  EXPECT_THROW(parallel_for(10, 2, [](std::size_t i) {
                 if (i == 7) throw ParameterError("boom");
               }),
               ParameterError);
}

}  // namespace
}  // namespace spillover
