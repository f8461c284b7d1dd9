// spillover: command line front end for the library.
#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <iostream>
#include <optional>
#include <sstream>

#include "spillover/csv.hpp"
#include "spillover/design.hpp"
#include "spillover/errors.hpp"
#include "spillover/estimators.hpp"
#include "spillover/exposure.hpp"
#include "spillover/graph.hpp"
#include "spillover/hierarchical.hpp"
#include "spillover/outcomes.hpp"
#include "spillover/rng.hpp"
#include "spillover/scenario_config.hpp"
#include "spillover/simulation.hpp"

using namespace spillover;
using nlohmann::ordered_json;

namespace {

struct Common {
  std::uint64_t seed = 1;
  std::size_t reps = 1;
  std::size_t prob_reps = 10000;
  std::string out;
  std::string format = "csv";
  std::size_t threads = 0;
};

void emit(const std::string& text, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    csv::write_file(out, text);
  }
}

ordered_json number(double x) { return std::isfinite(x) ? ordered_json(x) : ordered_json(nullptr); }

std::vector<std::uint8_t> read_assignment(const std::string& file, std::size_t rep,
                                          const std::string& treated, bool one_based,
                                          std::size_t n) {
  std::vector<std::uint8_t> z(n, 0);
  if (!file.empty()) {
    const auto set = load_assignments(file);
    if (rep >= set.size()) throw ParameterError("assignment file has no replicate " + std::to_string(rep));
    if (set.units() != n) throw ParameterError("assignment length does not match the graph");
    const auto row = set[rep];
    z.assign(row.begin(), row.end());
    return z;
  }
  for (auto field : csv::split(treated)) {
    if (field.empty()) continue;
    auto id = csv::parse_int(field, 0);
    if (one_based) --id;
    if (id < 0 || static_cast<std::size_t>(id) >= n) {
      throw ParameterError("treated unit " + std::string(field) + " is out of range");
    }
    z[static_cast<std::size_t>(id)] = 1;
  }
  return z;
}

std::vector<double> read_outcomes(const std::string& file, std::size_t n) {
  const auto text = csv::read_file(file);
  const auto all = csv::lines(text);
  if (all.empty() || csv::split(all.front().text) != std::vector<std::string_view>{"unit", "y"}) {
    throw ParseError(all.empty() ? 0 : all.front().number, "expected header 'unit,y'");
  }
  std::vector<double> y(n, std::nan(""));
  for (std::size_t i = 1; i < all.size(); ++i) {
    const auto fields = csv::split(all[i].text);
    if (fields.size() != 2) throw ParseError(all[i].number, "expected 'unit,y'");
    const auto unit = csv::parse_int(fields[0], all[i].number);
    if (unit < 0 || static_cast<std::size_t>(unit) >= n) {
      throw ParseError(all[i].number, "unit id out of range");
    }
    y[static_cast<std::size_t>(unit)] = csv::parse_double(fields[1], all[i].number);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (std::isnan(y[i])) throw ParseError(0, "no outcome for unit " + std::to_string(i));
  }
  return y;
}

AssignmentSet design_draws(const std::string& design, const Graph* g, std::size_t n, double p,
                           std::size_t reps, std::uint64_t seed, bool enumerate,
                           bool repetitions, std::size_t epsilon) {
  if (design == "complete") {
    if (enumerate) return enumerate_support(n, p);
    return complete_randomization(n, p, reps, seed, repetitions);
  }
  if (design == "bernoulli") return bernoulli_assignment(n, p, reps, seed, repetitions);
  if (design == "cluster") {
    if (!g) throw ParameterError("cluster design needs --graph");
    const auto c = epsilon_net_clustering(*g, epsilon, derive_seed(seed, "clusters"));
    return cluster_randomization(c, p, reps, seed, ClusterMode::kBernoulli, repetitions);
  }
  throw ParameterError("unknown design '" + design + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Design and analysis of experiments under network interference"};
  app.require_subcommand(1);
  Common common;
  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", common.seed, "Master seed");
    cmd->add_option("--out", common.out, "Output file or directory (default stdout)");
    cmd->add_option("--format", common.format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
  };

  // graph gen | info
  auto* graph_cmd = app.add_subcommand("graph", "Generate or inspect a network");
  graph_cmd->require_subcommand(1);
  std::size_t gen_n = 400, gen_degree = 4;
  double gen_rewire = 0.1;
  std::string graph_layout = "edges";
  auto* gen = graph_cmd->add_subcommand("gen", "Small-world graph");
  gen->add_option("--n", gen_n, "Units");
  gen->add_option("--mean-degree", gen_degree, "Even mean degree");
  gen->add_option("--rewire", gen_rewire, "Rewiring probability");
  gen->add_option("--layout", graph_layout, "edges or dense")
      ->check(CLI::IsMember({"edges", "dense"}));
  add_common(gen);
  std::string info_file;
  auto* info = graph_cmd->add_subcommand("info", "Summary of a graph file");
  info->add_option("file", info_file)->required();
  add_common(info);

  // assign
  std::string design = "complete", assign_graph;
  double p = 0.1;
  std::size_t n = 0, epsilon = 3;
  bool enumerate = false, no_repetitions = false;
  auto* assign = app.add_subcommand("assign", "Draw assignment vectors");
  assign->add_option("--design", design, "complete, bernoulli or cluster");
  assign->add_option("--n", n, "Units (or take them from --graph)");
  assign->add_option("--graph", assign_graph, "Graph file");
  assign->add_option("--p", p, "Treated share");
  assign->add_option("--reps", common.reps, "Number of vectors");
  assign->add_option("--epsilon", epsilon, "Cluster separation for the cluster design");
  assign->add_flag("--enumerate", enumerate, "Whole support of complete randomization");
  assign->add_flag("--no-repetitions", no_repetitions, "Distinct vectors");
  add_common(assign);

  // cluster
  std::string cluster_graph;
  auto* cluster = app.add_subcommand("cluster", "Epsilon-net clustering");
  cluster->add_option("--graph", cluster_graph)->required();
  cluster->add_option("--epsilon", epsilon, "Minimum center separation");
  add_common(cluster);

  // probs
  std::string probs_graph;
  int hop = 1;
  bool joint = false;
  auto* probs_cmd = app.add_subcommand("probs", "Exposure probabilities");
  probs_cmd->add_option("--graph", probs_graph)->required();
  probs_cmd->add_option("--hop", hop, "0 (none), 1 or 2")->check(CLI::Range(0, 2));
  probs_cmd->add_option("--design", design);
  probs_cmd->add_option("--p", p);
  probs_cmd->add_option("--prob-reps", common.prob_reps, "Monte Carlo draws");
  probs_cmd->add_option("--epsilon", epsilon);
  probs_cmd->add_flag("--enumerate", enumerate, "Exact, from the whole support");
  probs_cmd->add_flag("--no-repetitions", no_repetitions, "Draw without replacement");
  probs_cmd->add_flag("--joint", joint, "Include pairwise probabilities");
  add_common(probs_cmd);

  // expose
  std::string expose_graph, assignment_file, treated;
  std::size_t rep = 0;
  bool one_based = false;
  auto* expose = app.add_subcommand("expose", "Realized exposure conditions");
  expose->add_option("--graph", expose_graph)->required();
  expose->add_option("--hop", hop)->check(CLI::Range(0, 2));
  expose->add_option("--assignment", assignment_file, "CSV rep,unit,z");
  expose->add_option("--rep", rep, "Replicate of the assignment file");
  expose->add_option("--treated", treated, "Comma separated treated ids");
  expose->add_flag("--one-based", one_based, "Ids in --treated and output start at 1");
  add_common(expose);

  // estimate
  std::string est_graph, outcomes_file, contrast = "all", estimator = "both";
  std::size_t ce_reps = 0;
  double alpha = 0.05;
  bool restrict_positive = false;
  auto* estimate = app.add_subcommand("estimate", "HT and Hajek contrasts with variances");
  estimate->add_option("--graph", est_graph)->required();
  estimate->add_option("--outcomes", outcomes_file, "CSV unit,y")->required();
  estimate->add_option("--assignment", assignment_file);
  estimate->add_option("--rep", rep);
  estimate->add_option("--treated", treated);
  estimate->add_flag("--one-based", one_based);
  estimate->add_option("--hop", hop)->check(CLI::Range(0, 2));
  estimate->add_option("--design", design);
  estimate->add_option("--p", p);
  estimate->add_option("--prob-reps", common.prob_reps);
  estimate->add_option("--epsilon", epsilon);
  estimate->add_flag("--enumerate", enumerate);
  estimate->add_option("--contrast", contrast, "k,l labels (e.g. d10,d00) or all");
  estimate->add_option("--estimator", estimator)->check(CLI::IsMember({"ht", "hajek", "both"}));
  estimate->add_option("--ce-reps", ce_reps, "Constant-effects redraws for HT (0 = off)");
  estimate->add_option("--alpha", alpha);
  estimate->add_flag("--restrict", restrict_positive,
                     "Use only units with positive probability in both conditions");
  add_common(estimate);

  // hier-estimate
  std::string hier_file;
  std::optional<double> psi, phi;
  auto* hier = app.add_subcommand("hier-estimate", "Two-stage marginal effects");
  hier->add_option("file", hier_file, "CSV group,group_tr,indiv_tr,obs_outcome")->required();
  hier->add_option("--alpha", alpha);
  hier->add_option("--psi", psi, "Declared psi saturation");
  hier->add_option("--phi", phi, "Declared phi saturation");
  add_common(hier);

  // simulate
  std::string scenario;
  std::optional<std::size_t> sim_reps, sim_prob_reps, sim_threads;
  std::optional<std::uint64_t> sim_seed;
  bool list = false;
  auto* simulate = app.add_subcommand("simulate", "Run a replication scenario");
  simulate->add_option("scenario", scenario, "Preset name or config file");
  simulate->add_option("--reps", sim_reps);
  simulate->add_option("--prob-reps", sim_prob_reps);
  simulate->add_option("--seed", sim_seed);
  simulate->add_option("--threads", sim_threads);
  simulate->add_option("--out", common.out, "Output directory");
  simulate->add_flag("--list", list, "List presets");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      const auto g = generate_small_world(gen_n, gen_degree, gen_rewire, common.seed);
      emit(format_graph(g, graph_layout == "dense" ? GraphFormat::kDense : GraphFormat::kEdgeList),
           common.out);
    } else if (info->parsed()) {
      const auto g = load_graph(info_file);
      std::size_t lo = g.size() ? SIZE_MAX : 0, hi = 0, isolated = 0;
      for (UnitId i = 0; i < g.size(); ++i) {
        lo = std::min(lo, g.degree(i));
        hi = std::max(hi, g.degree(i));
        isolated += g.degree(i) == 0;
      }
      const double mean = g.size() ? 2.0 * static_cast<double>(g.edge_count()) / g.size() : 0.0;
      if (common.format == "json") {
        ordered_json j{{"units", g.size()}, {"edges", g.edge_count()}, {"mean_degree", mean},
                       {"min_degree", lo}, {"max_degree", hi}, {"isolated", isolated}};
        emit(j.dump(2) + "\n", common.out);
      } else {
        std::ostringstream out;
        out << "units,edges,mean_degree,min_degree,max_degree,isolated\n"
            << g.size() << ',' << g.edge_count() << ',' << csv::format_double(mean) << ',' << lo
            << ',' << hi << ',' << isolated << '\n';
        emit(out.str(), common.out);
      }
    } else if (assign->parsed()) {
      std::optional<Graph> g;
      if (!assign_graph.empty()) g = load_graph(assign_graph);
      const std::size_t units = g ? g->size() : n;
      if (units == 0) throw ParameterError("give --n or --graph");
      const auto set = design_draws(design, g ? &*g : nullptr, units, p, common.reps, common.seed,
                                    enumerate, !no_repetitions, epsilon);
      emit(format_assignments(set), common.out);
    } else if (cluster->parsed()) {
      const auto g = load_graph(cluster_graph);
      emit(format_clustering(epsilon_net_clustering(g, epsilon, common.seed)), common.out);
    } else if (probs_cmd->parsed()) {
      const auto g = load_graph(probs_graph);
      const auto set = design_draws(design, &g, g.size(), p, common.prob_reps, common.seed,
                                    enumerate, !no_repetitions, epsilon);
      const auto probs =
          exposure_probabilities(g, set, static_cast<ExposureKind>(hop), joint);
      if (common.format == "json") {
        ordered_json j;
        j["exact"] = probs.exact();
        j["replicates"] = probs.replicates();
        j["mapping"] = to_string(probs.kind());
        j["conditions"] = condition_labels(probs.kind());
        auto rows = ordered_json::array();
        for (std::size_t i = 0; i < probs.units(); ++i) {
          auto row = ordered_json::array();
          for (std::size_t k = 0; k < probs.conditions(); ++k) {
            row.push_back(probs.individual(static_cast<Condition>(k), i));
          }
          rows.push_back(row);
        }
        j["individual"] = rows;
        emit(j.dump(2) + "\n", common.out);
      } else {
        emit(format_probabilities(probs, joint), common.out);
      }
    } else if (expose->parsed()) {
      const auto g = load_graph(expose_graph);
      const auto z = read_assignment(assignment_file, rep, treated, one_based, g.size());
      const auto kind = static_cast<ExposureKind>(hop);
      const auto e = map_exposures(g, z, kind);
      const auto& labels = condition_labels(kind);
      const std::size_t offset = one_based ? 1 : 0;
      if (common.format == "json") {
        auto rows = ordered_json::array();
        for (std::size_t i = 0; i < e.units(); ++i) {
          rows.push_back({{"unit", i + offset}, {"condition", labels[e.condition[i]]}});
        }
        emit(rows.dump(2) + "\n", common.out);
      } else {
        std::ostringstream out;
        out << "unit,condition";
        for (const auto& l : labels) out << ',' << l;
        out << '\n';
        for (std::size_t i = 0; i < e.units(); ++i) {
          out << i + offset << ',' << labels[e.condition[i]];
          for (std::size_t k = 0; k < labels.size(); ++k) out << ',' << (e.condition[i] == k ? 1 : 0);
          out << '\n';
        }
        emit(out.str(), common.out);
      }
    } else if (estimate->parsed()) {
      const auto g = load_graph(est_graph);
      const auto z = read_assignment(assignment_file, rep, treated, one_based, g.size());
      const auto y = read_outcomes(outcomes_file, g.size());
      const auto kind = static_cast<ExposureKind>(hop);
      const ExposureMapper mapper(g, kind);
      const auto set = design_draws(design, &g, g.size(), p, common.prob_reps, common.seed,
                                    enumerate, false, epsilon);
      const auto probs = exposure_probabilities(mapper, set, true);
      const auto e = mapper.map(z);
      std::vector<std::pair<Condition, Condition>> pairs;
      const auto bottom = static_cast<Condition>(condition_count(kind) - 1);
      if (contrast == "all") {
        for (Condition k = 0; k < bottom; ++k) pairs.emplace_back(k, bottom);
      } else {
        const auto parts = csv::split(contrast);
        if (parts.size() != 2) throw ParameterError("--contrast expects 'k,l'");
        const auto k = find_condition(kind, parts[0]);
        const auto l = find_condition(kind, parts[1]);
        if (!k || !l) throw ParameterError("unknown condition in --contrast '" + contrast + "'");
        pairs.emplace_back(*k, *l);
      }
      EstimationOptions opts;
      opts.alpha = alpha;
      opts.restrict_to_positive = restrict_positive;
      const ConstantEffectsConfig ce{mapper, set, ce_reps, derive_seed(common.seed, "ce")};
      std::ostringstream out;
      for (auto [k, l] : pairs) {
        for (const std::string which : {"ht", "hajek"}) {
          if (estimator != "both" && estimator != which) continue;
          ordered_json j;
          try {
            const auto r = which == "ht" ? estimate_ht(e, y, probs, k, l, opts, ce_reps ? &ce : nullptr)
                                         : estimate_hajek(e, y, probs, k, l, opts);
            j = {{"estimator", to_string(r.estimator)},
                 {"k", condition_symbol(kind, k)},
                 {"l", condition_symbol(kind, l)},
                 {"point", number(r.point)},
                 {"variance", number(r.variance)},
                 {"variance_kind", to_string(r.variance_kind)},
                 {"ci_low", number(r.ci_low)},
                 {"ci_high", number(r.ci_high)},
                 {"alpha", r.alpha},
                 {"defined", r.defined},
                 {"count_k", r.count_k},
                 {"count_l", r.count_l},
                 {"warnings", r.warnings}};
          } catch (const EstimationError& err) {
            j = {{"estimator", which == "ht" ? "horvitz_thompson" : "hajek"},
                 {"k", condition_symbol(kind, k)},
                 {"l", condition_symbol(kind, l)},
                 {"defined", false},
                 {"error", err.what()}};
          }
          out << j.dump() << '\n';
        }
      }
      emit(out.str(), common.out);
    } else if (hier->parsed()) {
      const auto d = load_hierarchical(hier_file);
      std::optional<DeclaredSaturations> declared;
      if (psi && phi) declared = DeclaredSaturations{*psi, *phi};
      const auto r = marginal_effects(d, alpha, declared);
      if (common.format == "json") {
        emit(report_json(r) + "\n", common.out);
      } else {
        std::ostringstream out;
        out << "effect,estimate,variance,ci_low,ci_high\n";
        for (std::size_t i = 0; i < kEffectNames.size(); ++i) {
          const auto& x = r.effects[i];
          const auto f = [&](double v) {
            return x.defined && std::isfinite(v) ? csv::format_double(v) : std::string();
          };
          out << kEffectNames[i] << "_hat," << f(x.estimate) << ',' << f(x.variance) << ','
              << f(x.ci_low) << ',' << f(x.ci_high) << '\n';
        }
        for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
        emit(out.str(), common.out);
      }
    } else if (simulate->parsed()) {
      if (list) {
        for (const auto& name : preset_names()) std::cout << name << '\n';
        return 0;
      }
      if (scenario.empty()) throw ParameterError("simulate needs a preset name or config file");
      auto cfg = load_config(resolve_preset(scenario));
      if (sim_reps) cfg.reps = *sim_reps;
      if (sim_prob_reps) cfg.prob_reps = *sim_prob_reps;
      if (sim_seed) cfg.seed = *sim_seed;
      if (sim_threads) cfg.threads = *sim_threads;
      validate(cfg);
      const auto result = run_scenario(cfg);
      if (!common.out.empty()) write_outputs(result, common.out);
      std::cout << format_summary(result);
    }
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return 2;
  } catch (const ParameterError& e) {
    std::cerr << "invalid parameter: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
