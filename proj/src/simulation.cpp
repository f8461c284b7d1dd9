#include "spillover/simulation.hpp"

#include <atomic>
#include <cmath>
#include <deque>
#include <exception>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>
#include <tuple>

#include <Eigen/Core>
#include <boost/version.hpp>
#include <json.hpp>

#include "spillover/csv.hpp"
#include "spillover/errors.hpp"
#include "spillover/estimators.hpp"
#include "spillover/exposure.hpp"
#include "spillover/graph.hpp"
#include "spillover/hierarchical.hpp"
#include "spillover/outcomes.hpp"
#include "spillover/rng.hpp"

namespace spillover {

void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(count, 1));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = count;
      }
    }
  };
  if (threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
}

namespace {

struct Contrast {
  Condition k, l;        // analysis conditions
  Condition tk, tl;      // truth conditions
  std::string label;
};

std::vector<Contrast> contrasts_for(ContrastSet set, ExposureKind truth, ExposureKind analysis) {
  std::vector<Contrast> out;
  const auto kt = static_cast<Condition>(condition_count(truth) - 1);
  const auto ka = static_cast<Condition>(condition_count(analysis) - 1);
  const auto label = [&](Condition a, Condition b) {
    return "tau(" + condition_symbol(truth, a) + "," + condition_symbol(truth, b) + ")";
  };
  if (set == ContrastSet::kFull) {
    out.push_back({0, ka, 0, kt, label(0, kt)});
  } else {
    for (Condition k = 0; k < ka; ++k) out.push_back({k, ka, k, kt, label(k, kt)});
  }
  return out;
}

std::vector<std::uint8_t> draw_one(UnitDesign design, const ScenarioConfig& cfg,
                                   const Clustering* clusters, std::size_t n, std::uint64_t seed) {
  const auto set = [&] {
    switch (design) {
      case UnitDesign::kComplete: return complete_randomization(n, cfg.p, 1, seed, true);
      case UnitDesign::kBernoulli: return bernoulli_assignment(n, cfg.p, 1, seed, true);
      case UnitDesign::kCluster:
        return cluster_randomization(*clusters, cfg.p, 1, seed, cfg.cluster_mode, true);
    }
    throw ParameterError("unknown design");
  }();
  const auto z = set[0];
  return {z.begin(), z.end()};
}

AssignmentSet probability_draws(UnitDesign design, const ScenarioConfig& cfg,
                                const Clustering* clusters, std::size_t n, std::uint64_t seed) {
  switch (design) {
    case UnitDesign::kComplete: {
      const std::size_t m = treated_count(n, cfg.p);
      if (binomial_capped(n, m, cfg.prob_reps) <= cfg.prob_reps) return enumerate_support(n, cfg.p);
      return complete_randomization(n, cfg.p, cfg.prob_reps, seed, false);
    }
    case UnitDesign::kBernoulli:
      return bernoulli_assignment(n, cfg.p, cfg.prob_reps, seed, true);
    case UnitDesign::kCluster:
      return cluster_randomization(*clusters, cfg.p, cfg.prob_reps, seed, cfg.cluster_mode, true);
  }
  throw ParameterError("unknown design");
}

DGPSpec spec_for(const ScenarioConfig& cfg, ExposureKind truth, SpilloverSign sign) {
  DGPSpec spec = default_dgp(truth, sign, cfg.kappa);
  if (!cfg.multipliers.empty()) spec.multipliers = cfg.multipliers;
  return spec;
}

void summarize(ScenarioResult& result, std::size_t cell, std::vector<ReplicateRecord> records,
               bool per_rep_truth) {
  // Group by (estimand, estimator) in first-seen order.
  std::vector<std::pair<std::string, std::string>> keys;
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  std::vector<std::vector<ReplicateEstimate>> values;
  std::vector<std::vector<double>> truths;
  for (const auto& rec : records) {
    const auto key = std::make_pair(rec.estimand, rec.estimator);
    auto [it, inserted] = index.emplace(key, keys.size());
    if (inserted) {
      keys.push_back(key);
      values.emplace_back();
      truths.emplace_back();
    }
    values[it->second].push_back(rec.value);
    truths[it->second].push_back(rec.truth);
  }
  for (std::size_t g = 0; g < keys.size(); ++g) {
    MetricsRow row = per_rep_truth ? metrics(values[g], truths[g])
                                   : metrics(values[g], truths[g].front());
    row.estimand = keys[g].first;
    row.estimator = keys[g].second;
    result.summary.push_back({cell, std::move(row)});
  }
  result.replicates.insert(result.replicates.end(), std::make_move_iterator(records.begin()),
                           std::make_move_iterator(records.end()));
}

std::vector<ReplicateRecord> flatten(std::vector<std::vector<ReplicateRecord>>& per_rep) {
  std::vector<ReplicateRecord> out;
  for (auto& v : per_rep) {
    out.insert(out.end(), std::make_move_iterator(v.begin()), std::make_move_iterator(v.end()));
  }
  return out;
}

}  // namespace

ScenarioResult run_network_scenario(const ScenarioConfig& cfg) {
  validate(cfg);
  if (cfg.kind != ScenarioKind::kNetwork) throw ParameterError("not a network scenario");
  ScenarioResult result;
  result.config = cfg;

  const Graph graph = cfg.graph_file.empty()
                          ? generate_small_world(cfg.n, cfg.mean_degree, cfg.rewire_prob,
                                                 derive_seed(cfg.seed, "graph"))
                          : load_graph(cfg.graph_file);
  const std::size_t n = graph.size();

  std::unique_ptr<Clustering> clusters;
  for (auto d : cfg.designs) {
    if (d == UnitDesign::kCluster && !clusters) {
      clusters = std::make_unique<Clustering>(
          epsilon_net_clustering(graph, cfg.epsilon, derive_seed(cfg.seed, "clusters")));
    }
  }
  const auto baseline = dilated_baseline(graph, cfg.kappa, derive_seed(cfg.seed, "outcomes"));

  // Graphs the analysis sees, one per tie-deletion proportion.
  std::deque<Graph> analysis_graphs;
  for (double m : cfg.missing_ties) {
    analysis_graphs.push_back(
        m == 0.0 ? graph
                 : remove_ties(graph, m, derive_seed(cfg.seed, "ties/" + csv::format_double(m))));
  }

  std::map<std::size_t, AssignmentSet> draws;  // per design
  std::map<std::tuple<std::size_t, std::size_t, int>,
           std::pair<std::unique_ptr<ExposureMapper>, std::unique_ptr<ExposureProbabilities>>>
      probs_cache;

  for (std::size_t mi = 0; mi < cfg.missing_ties.size(); ++mi) {
    for (std::size_t di = 0; di < cfg.designs.size(); ++di) {
      const UnitDesign design = cfg.designs[di];
      if (!draws.contains(static_cast<std::size_t>(design))) {
        draws.emplace(static_cast<std::size_t>(design),
                      probability_draws(design, cfg, clusters.get(), n,
                                        derive_seed(cfg.seed, "probs/" + to_string(design))));
      }
      const AssignmentSet& pool = draws.at(static_cast<std::size_t>(design));
      for (auto analysis : cfg.analysis) {
        const auto key = std::make_tuple(mi, di, static_cast<int>(analysis));
        auto mapper = std::make_unique<ExposureMapper>(analysis_graphs[mi], analysis);
        auto probs = std::make_unique<ExposureProbabilities>(
            exposure_probabilities(*mapper, pool, true));
        probs_cache.emplace(key, std::make_pair(std::move(mapper), std::move(probs)));
      }
    }
  }

  for (auto sign : cfg.spillover) {
    for (auto truth : cfg.truth) {
      const DGPSpec spec = spec_for(cfg, truth, sign);
      const PotentialOutcomeTable table = dilated_outcomes(baseline, spec);
      const ExposureMapper truth_mapper(graph, truth);
      for (auto analysis : cfg.analysis) {
        const auto contrasts = contrasts_for(cfg.contrasts, truth, analysis);
        for (std::size_t di = 0; di < cfg.designs.size(); ++di) {
          const UnitDesign design = cfg.designs[di];
          for (std::size_t mi = 0; mi < cfg.missing_ties.size(); ++mi) {
            const auto& [mapper, probs] =
                probs_cache.at(std::make_tuple(mi, di, static_cast<int>(analysis)));
            const AssignmentSet& pool = draws.at(static_cast<std::size_t>(design));
            const std::size_t cell = result.cells.size();
            result.cells.push_back({to_string(sign), to_string(truth), to_string(analysis),
                                    to_string(design), cfg.missing_ties[mi]});

            EstimationOptions opts;
            opts.alpha = cfg.alpha;
            opts.restrict_to_positive = cfg.restrict_to_positive;

            std::vector<std::vector<ReplicateRecord>> per_rep(cfg.reps);
            parallel_for(cfg.reps, cfg.threads, [&](std::size_t r) {
              const auto z = draw_one(design, cfg, clusters.get(), n,
                                      derive_seed(cfg.seed, "assign/" + to_string(design), r));
              const ExposureMatrix e_truth = truth_mapper.map(z);
              std::vector<double> truths(contrasts.size());
              std::vector<double> y;
              if (cfg.redraw_outcomes) {
                const auto b = dilated_baseline(graph, cfg.kappa,
                                                derive_seed(cfg.seed, "outcomes", r + 1));
                const auto t = dilated_outcomes(b, spec);
                y = realize_observed(e_truth, t);
                for (std::size_t c = 0; c < contrasts.size(); ++c) {
                  truths[c] = true_contrast(t, contrasts[c].tk, contrasts[c].tl);
                }
              } else {
                y = realize_observed(e_truth, table);
                for (std::size_t c = 0; c < contrasts.size(); ++c) {
                  truths[c] = true_contrast(table, contrasts[c].tk, contrasts[c].tl);
                }
              }
              const ExposureMatrix e = mapper->map(z);
              const ConstantEffectsConfig ce{*mapper, pool, cfg.ce_reps,
                                             derive_seed(cfg.seed, "ce", r)};
              auto& out = per_rep[r];
              for (std::size_t c = 0; c < contrasts.size(); ++c) {
                for (auto est : cfg.estimators) {
                  ReplicateEstimate v;
                  try {
                    const EstimateReport rep =
                        est == EstimatorKind::kHorvitzThompson
                            ? estimate_ht(e, y, *probs, contrasts[c].k, contrasts[c].l, opts,
                                          cfg.ce_reps > 0 ? &ce : nullptr)
                            : estimate_hajek(e, y, *probs, contrasts[c].k, contrasts[c].l, opts);
                    v = {rep.defined, rep.point, rep.variance, rep.ci_low, rep.ci_high};
                  } catch (const EstimationError&) {
                    v.defined = false;
                  }
                  out.push_back({cell, r, contrasts[c].label, to_string(est), v, truths[c]});
                }
              }
            });
            summarize(result, cell, flatten(per_rep), cfg.redraw_outcomes);
          }
        }
      }
    }
  }
  return result;
}

ScenarioResult run_missing_ties_scenario(ScenarioConfig cfg,
                                         const std::vector<double>& proportions) {
  cfg.missing_ties = proportions;
  return run_network_scenario(cfg);
}

ScenarioResult run_hierarchical_scenario(const ScenarioConfig& cfg) {
  validate(cfg);
  if (cfg.kind != ScenarioKind::kHierarchical) throw ParameterError("not a hierarchical scenario");
  ScenarioResult result;
  result.config = cfg;

  const std::size_t n = cfg.groups * cfg.group_size;
  std::vector<std::uint32_t> group_of(n);
  for (std::size_t i = 0; i < n; ++i) group_of[i] = static_cast<std::uint32_t>(i / cfg.group_size);
  std::vector<std::uint32_t> tract_of_group(cfg.groups);
  for (std::size_t g = 0; g < cfg.groups; ++g) {
    tract_of_group[g] = static_cast<std::uint32_t>(g / std::max<std::size_t>(cfg.groups_per_tract, 1));
  }
  // Fail before the loop on saturations the design cannot realize.
  two_stage_assignment(group_of, cfg.psi, cfg.phi, cfg.share_psi, cfg.seed);

  for (auto level : cfg.levels) {
    const auto tracts = level == HierarchyLevel::kTract ? tract_of_group
                                                        : std::vector<std::uint32_t>{};
    const auto model = hierarchical_outcomes(group_of, tracts, cfg.psi, cfg.phi,
                                             cfg.hier_multipliers, level,
                                             derive_seed(cfg.seed, "outcomes"));
    const MarginalEstimands fixed = model.estimands();
    const std::size_t cell = result.cells.size();
    result.cells.push_back({"", to_string(level), "group", "two_stage", 0.0});

    std::vector<std::vector<ReplicateRecord>> per_rep(cfg.reps);
    parallel_for(cfg.reps, cfg.threads, [&](std::size_t r) {
      const auto a = two_stage_assignment(group_of, cfg.psi, cfg.phi, cfg.share_psi,
                                          derive_seed(cfg.seed, "assign/two_stage", r));
      MarginalEstimands truth = fixed;
      std::vector<double> y;
      if (cfg.redraw_outcomes) {
        const auto m = hierarchical_outcomes(group_of, tracts, cfg.psi, cfg.phi,
                                             cfg.hier_multipliers, level,
                                             derive_seed(cfg.seed, "outcomes", r + 1));
        truth = m.estimands();
        y = m.observed(a);
      } else {
        y = model.observed(a);
      }
      const auto report = marginal_effects(make_dataset(a, y), cfg.alpha,
                                           DeclaredSaturations{cfg.psi, cfg.phi});
      const double truths[5] = {truth.direct_psi, truth.direct_phi, truth.indirect, truth.total,
                                truth.overall};
      for (std::size_t e = 0; e < kEffectNames.size(); ++e) {
        const auto& x = report.effects[e];
        per_rep[r].push_back({cell, r, std::string(kEffectNames[e]), "two_stage",
                              {x.defined, x.estimate, x.variance, x.ci_low, x.ci_high},
                              truths[e]});
      }
    });
    summarize(result, cell, flatten(per_rep), cfg.redraw_outcomes);
  }
  return result;
}

ScenarioResult run_scenario(const ScenarioConfig& cfg) {
  return cfg.kind == ScenarioKind::kHierarchical ? run_hierarchical_scenario(cfg)
                                                 : run_network_scenario(cfg);
}

namespace {

std::string field(double x) { return std::isfinite(x) ? csv::format_double(x) : ""; }

void cell_fields(std::ostringstream& out, const ScenarioCell& c) {
  out << c.spillover << ',' << c.truth << ',' << c.analysis << ',' << c.design << ','
      << csv::format_double(c.missing_ties);
}

constexpr const char* kCellHeader = "spillover,truth,analysis,design,missing_ties";

}  // namespace

std::string format_summary(const ScenarioResult& r) {
  std::ostringstream out;
  out << kCellHeader
      << ",estimand,estimator,true_value,mean,bias,sd,rmse,mean_se,coverage,reps,undefined\n";
  for (const auto& row : r.summary) {
    const auto& m = row.metrics;
    cell_fields(out, r.cells[row.cell]);
    out << ',' << m.estimand << ',' << m.estimator << ',' << field(m.truth) << ','
        << field(m.mean) << ',' << field(m.bias) << ',' << field(m.sd) << ',' << field(m.rmse)
        << ',' << field(m.mean_se) << ',' << field(m.coverage) << ',' << m.reps << ','
        << m.undefined << '\n';
  }
  return out.str();
}

std::string format_replicates(const ScenarioResult& r) {
  std::ostringstream out;
  out << kCellHeader << ",rep,estimand,estimator,estimate,variance,ci_low,ci_high,true_value\n";
  for (const auto& rec : r.replicates) {
    cell_fields(out, r.cells[rec.cell]);
    const auto& v = rec.value;
    out << ',' << rec.rep << ',' << rec.estimand << ',' << rec.estimator << ','
        << (v.defined ? field(v.estimate) : "") << ',' << (v.defined ? field(v.variance) : "")
        << ',' << (v.defined ? field(v.ci_low) : "") << ',' << (v.defined ? field(v.ci_high) : "")
        << ',' << field(rec.truth) << '\n';
  }
  return out.str();
}

std::string meta_json(const ScenarioResult& r) {
  nlohmann::ordered_json j;
  j["scenario"] = r.config.name;
  j["config"] = format_config(r.config);
  j["versions"] = {
      {"spillover", "0.1.0"},
      {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                    "." + std::to_string(EIGEN_MINOR_VERSION)},
      {"boost", std::to_string(BOOST_VERSION / 100000) + "." +
                    std::to_string(BOOST_VERSION / 100 % 1000) + "." +
                    std::to_string(BOOST_VERSION % 100)},
#ifdef __VERSION__
      {"compiler", __VERSION__},
#endif
  };
  auto cells = nlohmann::ordered_json::array();
  for (const auto& c : r.cells) {
    cells.push_back({{"spillover", c.spillover},
                     {"truth", c.truth},
                     {"analysis", c.analysis},
                     {"design", c.design},
                     {"missing_ties", c.missing_ties}});
  }
  j["cells"] = cells;
  j["warnings"] = r.warnings;
  return j.dump(2) + "\n";
}

void write_outputs(const ScenarioResult& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  csv::write_file(dir / "summary.csv", format_summary(r));
  csv::write_file(dir / "replicates.csv", format_replicates(r));
  csv::write_file(dir / "meta.json", meta_json(r));
}

}  // namespace spillover
