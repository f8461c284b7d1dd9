// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <queue>
#include <string>
#include <vector>

#include "spillover/design.hpp"
#include "spillover/estimators.hpp"
#include "spillover/exposure.hpp"
#include "spillover/graph.hpp"
#include "spillover/hierarchical.hpp"
#include "spillover/outcomes.hpp"
#include "spillover/rng.hpp"
#include "spillover/scenario_config.hpp"
#include "spillover/simulation.hpp"

using namespace spillover;

namespace {

const std::filesystem::path kData = SPILLOVER_TEST_DATA;

int failures = 0;

struct Check {
  bool ok = true;
  std::string detail;

  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

char buf[512];

template <class... A>
std::string fmt(const char* f, A... a) {
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

void run(const char* id, const char* title, const std::function<Check()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Check c;
  try {
    c = body();
  } catch (const std::exception& e) {
    c.ok = false;
    c.detail = std::string("exception: ") + e.what();
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("%s %s %s (%.2fs)%s%s\n", c.ok ? "PASS" : "FAIL", id, title, secs,
              c.detail.empty() ? "" : ": ", c.detail.c_str());
  std::fflush(stdout);
  if (!c.ok) ++failures;
}

double elapsed_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ScenarioConfig preset(const char* name) { return load_config(resolve_preset(name)); }

const MetricsRow* find_row(const ScenarioResult& r, const std::function<bool(const ScenarioCell&)>& cell,
                           const std::string& estimand, const std::string& estimator) {
  for (const auto& row : r.summary) {
    if (cell(r.cells[row.cell]) && row.metrics.estimator == estimator &&
        (estimand.empty() || row.metrics.estimand == estimand)) {
      return &row.metrics;
    }
  }
  return nullptr;
}

std::vector<std::string> estimands_of(const ScenarioResult& r) {
  std::vector<std::string> out;
  for (const auto& row : r.summary) {
    if (std::find(out.begin(), out.end(), row.metrics.estimand) == out.end()) {
      out.push_back(row.metrics.estimand);
    }
  }
  return out;
}

Check toy_exposures() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  const Graph g = load_graph(kData / "toy10_adjacency.csv");
  std::vector<std::uint8_t> z(10, 0);
  z[5] = z[8] = 1;
  const auto e = map_exposures(g, z, ExposureKind::kHop1);
  const char* expected[10] = {"no", "no", "ind1", "ind1", "ind1", "isol_dir",
                              "ind1", "ind1", "isol_dir", "ind1"};
  for (std::size_t i = 0; i < 10; ++i) {
    const auto& got = condition_labels(ExposureKind::kHop1)[e.condition[i]];
    c.expect(got == expected[i], fmt("unit %zu is %s", i + 1, got.c_str()));
  }
  c.expect(elapsed_since(t0) < 1.0, "slower than 1 s");
  return c;
}

Check enumeration() {
  Check c;
  const Graph g = load_graph(kData / "toy10_adjacency.csv");
  const auto support = enumerate_support(10, 0.2);
  c.expect(support.size() == 45, fmt("|support| = %zu", support.size()));
  const auto exact = exposure_probabilities(g, support, ExposureKind::kHop1, true);
  double worst = 0;
  for (std::size_t i = 0; i < 10; ++i) {
    double s = 0;
    for (Condition k = 0; k < 4; ++k) s += exact.individual(k, i);
    worst = std::max(worst, std::abs(s - 1.0));
  }
  c.expect(worst <= 1e-12, fmt("row sum off by %g", worst));
  const auto mc = exposure_probabilities(g, complete_randomization(10, 0.2, 45, 99, false),
                                         ExposureKind::kHop1, true);
  bool same = mc.individual_table() == exact.individual_table();
  for (Condition k = 0; k < 4; ++k) {
    for (Condition l = 0; l < 4; ++l) {
      for (std::size_t i = 0; i < 10; ++i) {
        for (std::size_t j = 0; j < 10; ++j) same = same && mc.joint(k, l, i, j) == exact.joint(k, l, i, j);
      }
    }
  }
  c.expect(same, "distinct draws at R = 45 differ from enumeration");
  return c;
}

Check ht_unbiased() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  const Graph g = load_graph(kData / "toy10_adjacency.csv");
  const auto support = enumerate_support(10, 0.2);
  const auto probs = exposure_probabilities(g, support, ExposureKind::kHop1, true);
  const auto table = dilated_outcomes(dilated_baseline(g, 0.1, 2019),
                                      default_dgp(ExposureKind::kHop1, SpilloverSign::kPositive));
  EstimationOptions opt;
  opt.restrict_to_positive = true;
  for (Condition k : {Condition{1}, Condition{2}}) {
    const auto mask = positive_support_mask(probs, k, 3);
    double truth = 0, units = 0;
    for (std::size_t i = 0; i < 10; ++i) {
      if (!mask[i]) continue;
      truth += table.value(k, i) - table.value(3, i);
      units += 1;
    }
    truth /= units;
    double avg = 0;
    for (std::size_t r = 0; r < support.size(); ++r) {
      const auto e = map_exposures(g, support[r], ExposureKind::kHop1);
      const auto rep = ht_contrast(e, realize_observed(e, table), probs, k, 3, opt);
      avg += (rep.total_k - rep.total_l) / static_cast<double>(rep.population) / 45.0;
    }
    const double rel = std::abs(avg - truth) / std::abs(truth);
    c.expect(rel <= 1e-10, fmt("%s: mean %.15g vs truth %.15g", condition_symbol(ExposureKind::kHop1, k).c_str(),
                               avg, truth));
  }
  c.expect(elapsed_since(t0) < 1.0, "slower than 1 s");
  return c;
}

ScenarioResult ht_vs_hajek;

Check hajek_efficiency() {
  Check c;
  ht_vs_hajek = run_scenario(preset("ht-vs-hajek"));
  const auto any = [](const ScenarioCell&) { return true; };
  for (const auto& est : estimands_of(ht_vs_hajek)) {
    const auto* ht = find_row(ht_vs_hajek, any, est, "horvitz_thompson");
    const auto* hj = find_row(ht_vs_hajek, any, est, "hajek");
    c.expect(hj->sd < ht->sd, fmt("%s: SD hajek %.4g vs HT %.4g", est.c_str(), hj->sd, ht->sd));
    for (const auto* row : {ht, hj}) {
      c.expect(std::abs(row->bias) < 0.15 * row->sd,
               fmt("%s %s: |bias| %.4g vs 0.15 SD %.4g", est.c_str(), row->estimator.c_str(),
                   std::abs(row->bias), 0.15 * row->sd));
    }
    c.detail += (c.detail.empty() ? "" : "; ") +
                fmt("%s SD %.4g/%.4g", est.c_str(), ht->sd, hj->sd);
  }
  return c;
}

Check variance_calibration() {
  Check c;
  const auto any = [](const ScenarioCell&) { return true; };
  for (const auto& est : estimands_of(ht_vs_hajek)) {
    const auto* ht = find_row(ht_vs_hajek, any, est, "horvitz_thompson");
    const auto* hj = find_row(ht_vs_hajek, any, est, "hajek");
    const double ratio = hj->mean_se / hj->sd;
    c.expect(ratio >= 0.9 && ratio <= 1.5, fmt("%s hajek MeanSE/SD %.3f", est.c_str(), ratio));
    c.expect(ht->mean_se >= 0.9 * ht->sd,
             fmt("%s HT MeanSE %.4g vs SD %.4g", est.c_str(), ht->mean_se, ht->sd));
  }
  return c;
}

Check max_rule_dominates() {
  Check c;
  auto cfg = preset("ht-vs-hajek");
  cfg.ce_reps = 0;
  cfg.estimators = {EstimatorKind::kHorvitzThompson};
  const auto conservative = run_scenario(cfg);
  const auto any = [](const ScenarioCell&) { return true; };
  for (const auto& est : estimands_of(conservative)) {
    const auto* with_max = find_row(ht_vs_hajek, any, est, "horvitz_thompson");
    const auto* alone = find_row(conservative, any, est, "horvitz_thompson");
    c.expect(with_max->mean_se >= alone->mean_se,
             fmt("%s: %.4g < %.4g", est.c_str(), with_max->mean_se, alone->mean_se));
  }
  return c;
}

int level_of(const std::string& mapping) {
  return mapping == "none" ? 0 : mapping == "hop1" ? 1 : 2;
}

Check misspecification() {
  Check c;
  const auto r = run_scenario(preset("misspec"));
  const double reps = static_cast<double>(r.config.reps);
  for (const auto& row : r.summary) {
    const auto& cell = r.cells[row.cell];
    const auto& m = row.metrics;
    const double band = 2.0 * m.sd / std::sqrt(reps);
    const std::string tag = cell.spillover + " " + cell.truth + "/" + cell.analysis;
    if (level_of(cell.analysis) < level_of(cell.truth)) {
      const bool sign_ok = cell.spillover == "positive" ? m.bias < 0 : m.bias > 0;
      c.expect(sign_ok && std::abs(m.bias) > band,
               fmt("%s: coarse bias %.4g (band %.4g)", tag.c_str(), m.bias, band));
    } else {
      c.expect(std::abs(m.bias) < band, fmt("%s: bias %.4g exceeds %.4g", tag.c_str(), m.bias, band));
    }
  }
  for (const char* sign : {"positive", "negative"}) {
    for (const char* truth : {"hop1", "hop2"}) {
      double prev = -1;
      for (const char* analysis : {"none", "hop1", "hop2"}) {
        const auto* m = find_row(r, [&](const ScenarioCell& x) {
          return x.spillover == sign && x.truth == truth && x.analysis == analysis;
        }, "", "hajek");
        c.expect(m->sd > prev, fmt("%s %s: SD not increasing at %s (%.4g after %.4g)", sign, truth,
                                   analysis, m->sd, prev));
        prev = m->sd;
      }
    }
  }
  return c;
}

Check missing_ties() {
  Check c;
  const auto r = run_scenario(preset("missing-ties"));
  std::vector<const MetricsRow*> rows;
  for (double q : {0.0, 0.25, 0.5}) {
    rows.push_back(find_row(r, [&](const ScenarioCell& x) { return x.missing_ties == q; },
                            "tau(d01,d00)", "hajek"));
  }
  c.expect(std::abs(rows[0]->bias) < 2.0 * rows[0]->mcse(),
           fmt("bias at 0 is %.4g (2 MCSE %.4g)", rows[0]->bias, 2.0 * rows[0]->mcse()));
  for (std::size_t s = 1; s < 3; ++s) {
    const double step = std::abs(rows[s]->bias) - std::abs(rows[s - 1]->bias);
    const double se = std::hypot(rows[s]->mcse(), rows[s - 1]->mcse());
    c.expect(step > 2.0 * se, fmt("step %zu: %.4g vs 2 MCSE %.4g", s, step, 2.0 * se));
  }
  c.detail += (c.detail.empty() ? "" : "; ") + fmt("|bias| %.4g, %.4g, %.4g", std::abs(rows[0]->bias),
                                                     std::abs(rows[1]->bias), std::abs(rows[2]->bias));
  return c;
}

Check cluster_vs_unit() {
  Check c;
  const auto r = run_scenario(preset("unit-vs-cluster"));
  for (const char* est : {"horvitz_thompson", "hajek"}) {
    const auto* unit = find_row(r, [](const ScenarioCell& x) { return x.design == "bernoulli"; }, "", est);
    const auto* cluster = find_row(r, [](const ScenarioCell& x) { return x.design == "cluster"; }, "", est);
    const double ratio = cluster->sd / unit->sd;
    c.expect(ratio < 0.75, fmt("%s ratio %.3f", est, ratio));
    c.detail += (c.detail.empty() ? "" : "; ") + fmt("%s SD ratio %.3f", est, ratio);
  }
  return c;
}

std::vector<std::size_t> bfs(const Graph& g, UnitId s) {
  std::vector<std::size_t> d(g.size(), SIZE_MAX);
  std::queue<UnitId> q;
  d[s] = 0;
  q.push(s);
  while (!q.empty()) {
    const UnitId x = q.front();
    q.pop();
    for (UnitId y : g.neighbors(x)) {
      if (d[y] == SIZE_MAX) {
        d[y] = d[x] + 1;
        q.push(y);
      }
    }
  }
  return d;
}

Check epsilon_nets() {
  Check c;
  std::size_t violations = 0;
  for (std::uint64_t k = 0; k < 100; ++k) {
    const Graph g = generate_small_world(400, 4, 0.1, derive_seed(2024, "graph", k));
    const auto cl = epsilon_net_clustering(g, 3, derive_seed(2024, "clusters", k));
    std::vector<std::size_t> nearest(g.size(), SIZE_MAX);
    for (UnitId center : cl.centers) {
      const auto d = bfs(g, center);
      for (UnitId other : cl.centers) violations += other != center && d[other] < 3;
      for (UnitId i = 0; i < g.size(); ++i) nearest[i] = std::min(nearest[i], d[i]);
    }
    for (std::size_t d : nearest) violations += d > 2;
  }
  c.expect(violations == 0, fmt("%zu violations", violations));
  return c;
}

Check hierarchical() {
  Check c;
  const auto r = run_scenario(preset("hierarchical"));
  for (const auto& row : r.summary) {
    const auto& cell = r.cells[row.cell];
    const auto& m = row.metrics;
    const double band = 2.0 * m.mcse();
    if (cell.truth == "group") {
      c.expect(std::abs(m.bias) < band,
               fmt("group %s: bias %.4g vs 2 MCSE %.4g", m.estimand.c_str(), m.bias, band));
    } else if (m.estimand == "direct_psi") {
      c.expect(std::abs(m.bias) > band, fmt("tract direct_psi: bias %.4g vs 2 MCSE %.4g", m.bias, band));
      c.detail += (c.detail.empty() ? "" : "; ") + fmt("tract direct_psi bias %.4g", m.bias);
    }
  }
  std::map<std::pair<std::size_t, std::size_t>, std::map<std::string, double>> per_rep;
  for (const auto& rec : r.replicates) per_rep[{rec.cell, rec.rep}][rec.estimand] = rec.value.estimate;
  double worst = 0;
  for (auto& [key, v] : per_rep) {
    worst = std::max(worst, std::abs(v["total"] - (v["direct_psi"] + v["indirect"])));
  }
  c.expect(worst <= 1e-12, fmt("identity gap %g", worst));
  return c;
}

Check hand_examples() {
  Check c;
  const double tol = 1e-12;
  const auto near = [&](double got, double want, const char* what) {
    c.expect(std::abs(got - want) <= tol, fmt("%s: %.17g vs %.17g", what, got, want));
  };
  // Path 0-1-2, one treated unit, middle treated.
  const Graph path = Graph::from_edges(3, std::vector<Edge>{{0, 1}, {1, 2}});
  const auto probs = exposure_probabilities(path, enumerate_support(3, 1.0 / 3.0),
                                            ExposureKind::kHop1, true);
  const std::vector<std::uint8_t> z{0, 1, 0};
  const auto e = map_exposures(path, z, ExposureKind::kHop1);
  const std::vector<double> y{2, 3, 4};
  near(ht_total(e, y, probs, 2), 18.0, "ht_total");
  near(ht_contrast(e, y, probs, 1, 2).point, -3.0, "ht_contrast");
  near(*hajek_mean(e, y, probs, 2), 3.0, "hajek_mean");

  // Two units, one treated: E[var estimate] >= exact variance of the total.
  const Graph pair = Graph::from_edges(2, std::vector<Edge>{{0, 1}});
  const auto support2 = enumerate_support(2, 0.5);
  const auto probs2 = exposure_probabilities(pair, support2, ExposureKind::kHop1, true);
  const double a[2] = {3.0, 5.0};
  double mean_v = 0, m1 = 0, m2 = 0;
  for (std::size_t r = 0; r < 2; ++r) {
    const auto e2 = map_exposures(pair, support2[r], ExposureKind::kHop1);
    std::vector<double> y2(2, 0.0);
    for (std::size_t i = 0; i < 2; ++i) y2[i] = e2.condition[i] == 1 ? a[i] : 0.0;
    const double total = ht_total(e2, y2, probs2, 1);
    m1 += total / 2;
    m2 += total * total / 2;
    mean_v += conservative_variance(e2, y2, probs2, 1) / 2;
  }
  c.expect(mean_v >= m2 - m1 * m1, fmt("conservative %.6g < exact %.6g", mean_v, m2 - m1 * m1));

  // Constant effects on a constant baseline, enumerated redraws: exact.
  const Graph toy = load_graph(kData / "toy10_adjacency.csv");
  const auto support = enumerate_support(10, 0.2);
  const auto tprobs = exposure_probabilities(toy, support, ExposureKind::kHop1, true);
  const ExposureMapper mapper(toy, ExposureKind::kHop1);
  Eigen::MatrixXd values(4, 10);
  const double shift[4] = {3.0, 2.0, 1.5, 0.0};
  for (int k = 0; k < 4; ++k) values.row(k).setConstant(4.0 + shift[k]);
  const PotentialOutcomeTable table(ExposureKind::kHop1, values);
  double s1 = 0, s2 = 0;
  for (std::size_t r = 0; r < support.size(); ++r) {
    const auto er = mapper.map(support[r]);
    double t = 0;
    for (std::size_t i = 0; i < 10; ++i) {
      if (er.condition[i] == 1) t += table.value(1, i) / tprobs.individual(1, i);
      if (er.condition[i] == 3) t -= table.value(3, i) / tprobs.individual(3, i);
    }
    t /= 10;
    s1 += t / 45;
    s2 += t * t / 45;
  }
  std::vector<std::uint8_t> z0(10, 0);
  z0[5] = z0[8] = 1;
  const auto e0 = mapper.map(z0);
  const auto ce = constant_effects_variance(mapper, e0, realize_observed(e0, table), tprobs,
                                            support, 1, 3, 45, 1);
  c.expect(ce && std::abs(*ce - (s2 - s1 * s1)) <= 1e-9 * (s2 - s1 * s1), "constant effects");

  // Hajek linearized variance, four units without ties.
  const Graph empty(4);
  const auto p4 = exposure_probabilities(empty, enumerate_support(4, 0.5), ExposureKind::kNone, true);
  const std::vector<std::uint8_t> z4{1, 1, 0, 0};
  const auto e4 = map_exposures(empty, z4, ExposureKind::kNone);
  near(hajek_contrast_variance(e4, std::vector<double>{5, 3, 2, 6}, p4, 0, 1), 3.75,
       "hajek variance, 4 units");
  const auto p1 = exposure_probabilities(empty, enumerate_support(4, 0.25), ExposureKind::kNone, true);
  const std::vector<std::uint8_t> z1{1, 0, 0, 0};
  const auto e1 = map_exposures(empty, z1, ExposureKind::kNone);
  near(hajek_contrast_variance(e1, std::vector<double>{9, 1, 2, 6}, p1, 0, 1), 1.75,
       "hajek variance, single-unit condition");

  const auto [lo, hi] = confidence_interval(0.0, 1.0, 0.05);
  c.expect(std::abs(hi - 1.959964) < 5e-7 && std::abs(lo + 1.959964) < 5e-7, "normal quantile");

  // Two-stage: psi groups A (3 | 1), B (5 | 3), phi group C (2 | 0.5).
  HierarchicalDataset d{{{1, 1, 1, 3}, {1, 1, 0, 1}, {2, 1, 1, 5}, {2, 1, 0, 3},
                         {3, 0, 1, 2}, {3, 0, 0, 0.5}}};
  const auto rep = marginal_effects(d);
  near(rep.direct_psi().estimate, 2.0, "direct_psi");
  near(rep.indirect().estimate, 1.5, "y(0;psi) = 2");
  near(rep.total().estimate, 3.5, "y(1;psi) = 4");
  return c;
}

Check multiplier_ratios() {
  Check c;
  const auto cfg = preset("ht-vs-hajek");
  const Graph g = generate_small_world(cfg.n, cfg.mean_degree, cfg.rewire_prob,
                                       derive_seed(cfg.seed, "graph"));
  const auto t = dilated_outcomes(dilated_baseline(g, cfg.kappa, derive_seed(cfg.seed, "outcomes")),
                                  default_dgp(ExposureKind::kHop1, SpilloverSign::kPositive));
  const double top = true_contrast(t, 0, 3);
  const double r10 = true_contrast(t, 1, 3) / top;
  const double r01 = true_contrast(t, 2, 3) / top;
  c.expect(std::abs(r10 - 0.5) <= 1e-12, fmt("d10 ratio %.17g", r10));
  c.expect(std::abs(r01 - 0.25) <= 1e-12, fmt("d01 ratio %.17g", r01));
  return c;
}

}  // namespace

int main() {
  run("1", "toy exposure table", toy_exposures);
  run("2", "enumeration exactness", enumeration);
  run("3", "HT unbiased over the enumerated design", ht_unbiased);
  run("4", "Hajek more efficient than HT", hajek_efficiency);
  run("5", "variance estimators calibrated", variance_calibration);
  run("5b", "max rule MeanSE >= conservative MeanSE", max_rule_dominates);
  run("6", "misspecified exposure bias signs and SD ordering", misspecification);
  run("7", "missing ties bias grows", missing_ties);
  run("8", "cluster randomization reduces SD", cluster_vs_unit);
  run("9", "epsilon-net separation and coverage", epsilon_nets);
  run("10", "two-stage estimators", hierarchical);
  run("11", "hand-computed estimator examples", hand_examples);
  run("12", "dilated multiplier ratios", multiplier_ratios);
  std::printf("%d failing\n", failures);
  return failures == 0 ? 0 : 1;
}
