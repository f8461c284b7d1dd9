#include "spillover/scenario_config.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <sstream>

#include "spillover/csv.hpp"
#include "spillover/errors.hpp"

#ifndef SPILLOVER_PRESET_DIR
#define SPILLOVER_PRESET_DIR "presets"
#endif

namespace spillover {

std::string to_string(UnitDesign d) {
  switch (d) {
    case UnitDesign::kComplete: return "complete";
    case UnitDesign::kBernoulli: return "bernoulli";
    case UnitDesign::kCluster: return "cluster";
  }
  return "unknown";
}

namespace {

// "0.25" or "2/3".
double parse_number(std::string_view text, std::size_t line) {
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) return csv::parse_double(text, line);
  const double num = csv::parse_double(csv::trim(text.substr(0, slash)), line);
  const double den = csv::parse_double(csv::trim(text.substr(slash + 1)), line);
  if (den == 0.0) throw ParseError(line, "zero denominator");
  return num / den;
}

std::size_t parse_count(std::string_view text, std::size_t line) {
  const auto v = csv::parse_int(text, line);
  if (v < 0) throw ParseError(line, "expected a nonnegative integer");
  return static_cast<std::size_t>(v);
}

bool parse_bool(std::string_view text, std::size_t line) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ParseError(line, "expected true or false");
}

template <class T, class F>
std::vector<T> parse_list(std::string_view text, std::size_t line, F one) {
  std::vector<T> out;
  for (auto field : csv::split(text)) {
    if (field.empty()) throw ParseError(line, "empty list entry");
    out.push_back(one(field, line));
  }
  if (out.empty()) throw ParseError(line, "empty list");
  return out;
}

template <class F>
auto wrap(F f) {
  return [f](std::string_view s, std::size_t line) {
    try {
      return f(s);
    } catch (const ParameterError& e) {
      throw ParseError(line, e.what());
    }
  };
}

UnitDesign parse_design(std::string_view s) {
  if (s == "complete") return UnitDesign::kComplete;
  if (s == "bernoulli") return UnitDesign::kBernoulli;
  if (s == "cluster") return UnitDesign::kCluster;
  throw ParameterError("unknown design '" + std::string(s) +
                       "' (expected complete, bernoulli or cluster)");
}

EstimatorKind parse_estimator(std::string_view s) {
  if (s == "ht" || s == "horvitz_thompson") return EstimatorKind::kHorvitzThompson;
  if (s == "hajek") return EstimatorKind::kHajek;
  throw ParameterError("unknown estimator '" + std::string(s) + "' (expected ht or hajek)");
}

std::string join(const auto& values, auto name) {
  std::string out;
  for (const auto& v : values) {
    if (!out.empty()) out += ", ";
    out += name(v);
  }
  return out;
}

}  // namespace

ScenarioConfig parse_config(std::string_view text) {
  ScenarioConfig cfg;
  using Setter = std::function<void(std::string_view, std::size_t)>;
  const std::map<std::string, Setter, std::less<>> setters{
      {"name", [&](auto v, auto) { cfg.name = std::string(v); }},
      {"kind",
       [&](auto v, auto line) {
         if (v == "network") cfg.kind = ScenarioKind::kNetwork;
         else if (v == "hierarchical") cfg.kind = ScenarioKind::kHierarchical;
         else throw ParseError(line, "kind must be network or hierarchical");
       }},
      {"n", [&](auto v, auto line) { cfg.n = parse_count(v, line); }},
      {"mean_degree", [&](auto v, auto line) { cfg.mean_degree = parse_count(v, line); }},
      {"rewire_prob", [&](auto v, auto line) { cfg.rewire_prob = parse_number(v, line); }},
      {"graph_file", [&](auto v, auto) { cfg.graph_file = std::string(v); }},
      {"design",
       [&](auto v, auto line) { cfg.designs = parse_list<UnitDesign>(v, line, wrap(parse_design)); }},
      {"p", [&](auto v, auto line) { cfg.p = parse_number(v, line); }},
      {"epsilon", [&](auto v, auto line) { cfg.epsilon = parse_count(v, line); }},
      {"cluster_mode",
       [&](auto v, auto line) {
         if (v == "bernoulli") cfg.cluster_mode = ClusterMode::kBernoulli;
         else if (v == "complete") cfg.cluster_mode = ClusterMode::kComplete;
         else throw ParseError(line, "cluster_mode must be bernoulli or complete");
       }},
      {"truth",
       [&](auto v, auto line) {
         cfg.truth = parse_list<ExposureKind>(v, line, wrap(parse_exposure_kind));
       }},
      {"analysis",
       [&](auto v, auto line) {
         cfg.analysis = parse_list<ExposureKind>(v, line, wrap(parse_exposure_kind));
       }},
      {"spillover",
       [&](auto v, auto line) {
         cfg.spillover = parse_list<SpilloverSign>(v, line, wrap(parse_spillover_sign));
       }},
      {"multipliers",
       [&](auto v, auto line) { cfg.multipliers = parse_list<double>(v, line, parse_number); }},
      {"kappa", [&](auto v, auto line) { cfg.kappa = parse_number(v, line); }},
      {"contrasts",
       [&](auto v, auto line) {
         if (v == "all_vs_bottom") cfg.contrasts = ContrastSet::kAllVsBottom;
         else if (v == "full") cfg.contrasts = ContrastSet::kFull;
         else throw ParseError(line, "contrasts must be all_vs_bottom or full");
       }},
      {"estimators",
       [&](auto v, auto line) {
         cfg.estimators = parse_list<EstimatorKind>(v, line, wrap(parse_estimator));
       }},
      {"missing_ties",
       [&](auto v, auto line) { cfg.missing_ties = parse_list<double>(v, line, parse_number); }},
      {"restrict_to_positive",
       [&](auto v, auto line) { cfg.restrict_to_positive = parse_bool(v, line); }},
      {"prob_reps", [&](auto v, auto line) { cfg.prob_reps = parse_count(v, line); }},
      {"ce_reps", [&](auto v, auto line) { cfg.ce_reps = parse_count(v, line); }},
      {"groups", [&](auto v, auto line) { cfg.groups = parse_count(v, line); }},
      {"group_size", [&](auto v, auto line) { cfg.group_size = parse_count(v, line); }},
      {"groups_per_tract", [&](auto v, auto line) { cfg.groups_per_tract = parse_count(v, line); }},
      {"psi", [&](auto v, auto line) { cfg.psi = parse_number(v, line); }},
      {"phi", [&](auto v, auto line) { cfg.phi = parse_number(v, line); }},
      {"share_psi", [&](auto v, auto line) { cfg.share_psi = parse_number(v, line); }},
      {"level",
       [&](auto v, auto line) {
         cfg.levels = parse_list<HierarchyLevel>(v, line, wrap(parse_hierarchy_level));
       }},
      {"hier_multipliers",
       [&](auto v, auto line) {
         const auto m = parse_list<double>(v, line, parse_number);
         if (m.size() != 4) {
           throw ParseError(line, "hier_multipliers needs 4 values: treated_psi, treated_phi, "
                                  "control_psi, control_phi");
         }
         cfg.hier_multipliers = {m[0], m[1], m[2], m[3]};
       }},
      {"reps", [&](auto v, auto line) { cfg.reps = parse_count(v, line); }},
      {"seed",
       [&](auto v, auto line) { cfg.seed = static_cast<std::uint64_t>(parse_count(v, line)); }},
      {"alpha", [&](auto v, auto line) { cfg.alpha = parse_number(v, line); }},
      {"redraw_outcomes", [&](auto v, auto line) { cfg.redraw_outcomes = parse_bool(v, line); }},
      {"threads", [&](auto v, auto line) { cfg.threads = parse_count(v, line); }},
  };

  for (const auto& line : csv::lines(text)) {
    if (line.text.front() == '#') continue;
    auto body = line.text;
    if (const auto hash = body.find(" #"); hash != std::string_view::npos) {
      body = csv::trim(body.substr(0, hash));
    }
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) throw ParseError(line.number, "expected 'key = value'");
    const auto key = csv::trim(body.substr(0, eq));
    const auto value = csv::trim(body.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) throw ParseError(line.number, "unknown key '" + std::string(key) + "'");
    if (value.empty()) throw ParseError(line.number, "empty value for '" + std::string(key) + "'");
    it->second(value, line.number);
  }
  validate(cfg);
  return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  auto cfg = parse_config(csv::read_file(path));
  // Relative graph files are relative to the config file.
  if (!cfg.graph_file.empty() && std::filesystem::path(cfg.graph_file).is_relative()) {
    cfg.graph_file = (path.parent_path() / cfg.graph_file).string();
  }
  return cfg;
}

void validate(const ScenarioConfig& cfg) {
  const auto fraction = [](double x, const char* what) {
    if (!(x >= 0.0 && x <= 1.0)) throw ParameterError(std::string(what) + " must lie in [0, 1]");
  };
  if (cfg.reps < 2) throw ParameterError("reps must be at least 2");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw ParameterError("alpha must lie in (0, 1)");
  if (cfg.kind == ScenarioKind::kHierarchical) {
    if (cfg.groups < 2 || cfg.group_size < 2) {
      throw ParameterError("hierarchical scenarios need groups >= 2 and group_size >= 2");
    }
    fraction(cfg.psi, "psi");
    fraction(cfg.phi, "phi");
    fraction(cfg.share_psi, "share_psi");
    const bool tract = std::find(cfg.levels.begin(), cfg.levels.end(), HierarchyLevel::kTract) !=
                       cfg.levels.end();
    if (tract && (cfg.groups_per_tract == 0 || cfg.groups % cfg.groups_per_tract != 0)) {
      throw ParameterError("groups must be a multiple of groups_per_tract");
    }
    return;
  }
  if (cfg.graph_file.empty() && cfg.n < 3) throw ParameterError("n must be at least 3");
  fraction(cfg.p, "p");
  fraction(cfg.rewire_prob, "rewire_prob");
  for (double m : cfg.missing_ties) fraction(m, "missing_ties proportions");
  if (cfg.prob_reps == 0) throw ParameterError("prob_reps must be positive");
  if (cfg.kappa < 0.0) throw ParameterError("kappa must be nonnegative");
  if (std::find(cfg.designs.begin(), cfg.designs.end(), UnitDesign::kCluster) != cfg.designs.end() &&
      cfg.epsilon == 0) {
    throw ParameterError("cluster design needs epsilon >= 1");
  }
  if (!cfg.multipliers.empty()) {
    if (cfg.truth.size() != 1 || cfg.spillover.size() != 1) {
      throw ParameterError("multipliers override needs a single truth mapping and spillover sign");
    }
    if (cfg.multipliers.size() != condition_count(cfg.truth.front())) {
      throw ParameterError("multipliers must have one entry per condition of the truth mapping");
    }
  }
  if (cfg.contrasts == ContrastSet::kAllVsBottom) {
    for (auto t : cfg.truth) {
      for (auto a : cfg.analysis) {
        if (t != a) {
          throw ParameterError("contrasts = all_vs_bottom needs analysis == truth (got truth " +
                               to_string(t) + ", analysis " + to_string(a) +
                               "); use contrasts = full to compare mappings");
        }
      }
    }
  }
}

std::filesystem::path resolve_preset(std::string_view name_or_path) {
  const std::filesystem::path direct(name_or_path);
  if (std::filesystem::is_regular_file(direct)) return direct;
  const std::string file = std::string(name_or_path) + ".conf";
  for (const std::filesystem::path& dir : {std::filesystem::path(SPILLOVER_PRESET_DIR),
                                          std::filesystem::path("presets")}) {
    if (std::filesystem::is_regular_file(dir / file)) return dir / file;
  }
  throw ParameterError("no config file or preset named '" + std::string(name_or_path) +
                       "' (presets: " + join(preset_names(), [](auto s) { return s; }) + ")");
}

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  const std::filesystem::path dir(SPILLOVER_PRESET_DIR);
  if (!std::filesystem::is_directory(dir)) return names;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".conf") names.push_back(entry.path().stem().string());
  }
  std::sort(names.begin(), names.end());
  return names;
}

std::string format_config(const ScenarioConfig& cfg) {
  std::ostringstream out;
  const auto num = [](double x) { return csv::format_double(x); };
  const auto kind = [](ExposureKind k) { return to_string(k); };
  out << "name = " << cfg.name << '\n';
  out << "kind = " << (cfg.kind == ScenarioKind::kNetwork ? "network" : "hierarchical") << '\n';
  if (cfg.kind == ScenarioKind::kNetwork) {
    out << "n = " << cfg.n << '\n';
    out << "mean_degree = " << cfg.mean_degree << '\n';
    out << "rewire_prob = " << num(cfg.rewire_prob) << '\n';
    if (!cfg.graph_file.empty()) out << "graph_file = " << cfg.graph_file << '\n';
    out << "design = " << join(cfg.designs, [](UnitDesign d) { return to_string(d); }) << '\n';
    out << "p = " << num(cfg.p) << '\n';
    out << "epsilon = " << cfg.epsilon << '\n';
    out << "cluster_mode = "
        << (cfg.cluster_mode == ClusterMode::kBernoulli ? "bernoulli" : "complete") << '\n';
    out << "truth = " << join(cfg.truth, kind) << '\n';
    out << "analysis = " << join(cfg.analysis, kind) << '\n';
    out << "spillover = "
        << join(cfg.spillover, [](SpilloverSign s) { return to_string(s); }) << '\n';
    if (!cfg.multipliers.empty()) out << "multipliers = " << join(cfg.multipliers, num) << '\n';
    out << "kappa = " << num(cfg.kappa) << '\n';
    out << "contrasts = " << (cfg.contrasts == ContrastSet::kFull ? "full" : "all_vs_bottom")
        << '\n';
    out << "estimators = "
        << join(cfg.estimators,
                [](EstimatorKind e) { return e == EstimatorKind::kHajek ? "hajek" : "ht"; })
        << '\n';
    out << "missing_ties = " << join(cfg.missing_ties, num) << '\n';
    out << "restrict_to_positive = " << (cfg.restrict_to_positive ? "true" : "false") << '\n';
    out << "prob_reps = " << cfg.prob_reps << '\n';
    out << "ce_reps = " << cfg.ce_reps << '\n';
  } else {
    out << "groups = " << cfg.groups << '\n';
    out << "group_size = " << cfg.group_size << '\n';
    out << "groups_per_tract = " << cfg.groups_per_tract << '\n';
    out << "psi = " << num(cfg.psi) << '\n';
    out << "phi = " << num(cfg.phi) << '\n';
    out << "share_psi = " << num(cfg.share_psi) << '\n';
    out << "level = " << join(cfg.levels, [](HierarchyLevel l) { return to_string(l); }) << '\n';
    const auto& m = cfg.hier_multipliers;
    out << "hier_multipliers = " << num(m.treated_psi) << ", " << num(m.treated_phi) << ", "
        << num(m.control_psi) << ", " << num(m.control_phi) << '\n';
  }
  out << "reps = " << cfg.reps << '\n';
  out << "seed = " << cfg.seed << '\n';
  out << "alpha = " << num(cfg.alpha) << '\n';
  out << "redraw_outcomes = " << (cfg.redraw_outcomes ? "true" : "false") << '\n';
  out << "threads = " << cfg.threads << '\n';
  return out.str();
}

}  // namespace spillover
