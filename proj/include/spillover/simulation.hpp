#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "spillover/metrics.hpp"
#include "spillover/scenario_config.hpp"

namespace spillover {

// One combination of the scenario's list-valued settings.
struct ScenarioCell {
  std::string spillover;  // positive / negative; empty for hierarchical runs
  std::string truth;      // data-generating mapping or hierarchy level
  std::string analysis;   // assumed mapping or level
  std::string design;
  double missing_ties = 0;
};

struct SummaryRow {
  std::size_t cell;
  MetricsRow metrics;
};

struct ReplicateRecord {
  std::size_t cell;
  std::size_t rep;
  std::string estimand;
  std::string estimator;
  ReplicateEstimate value;
  double truth;
};

struct ScenarioResult {
  ScenarioConfig config;
  std::vector<ScenarioCell> cells;
  std::vector<SummaryRow> summary;
  std::vector<ReplicateRecord> replicates;  // by cell, then replicate
  std::vector<std::string> warnings;
};

// Dispatches on cfg.kind.
ScenarioResult run_scenario(const ScenarioConfig& cfg);

// Fixed graph and outcome table; exposure probabilities once per (tie
// deletion, design, analysis mapping); per replicate: draw, realize under the
// true mapping on the true graph, estimate under the assumed mapping on the
// analysis graph.
ScenarioResult run_network_scenario(const ScenarioConfig& cfg);
ScenarioResult run_hierarchical_scenario(const ScenarioConfig& cfg);
// run_network_scenario with missing_ties replaced by `proportions`.
ScenarioResult run_missing_ties_scenario(ScenarioConfig cfg, const std::vector<double>& proportions);

// Runs body(i) for i in [0, count) on `threads` workers (0 = hardware).
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& body);

std::string format_summary(const ScenarioResult& r);
std::string format_replicates(const ScenarioResult& r);
std::string meta_json(const ScenarioResult& r);
// summary.csv, replicates.csv and meta.json under `dir`.
void write_outputs(const ScenarioResult& r, const std::filesystem::path& dir);

}  // namespace spillover
