#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "spillover/design.hpp"
#include "spillover/errors.hpp"
#include "spillover/hierarchical.hpp"

namespace spillover {
namespace {

const std::filesystem::path kData = SPILLOVER_TEST_DATA;
constexpr double kTol = 1e-12;

HierarchicalDataset dataset(std::vector<HierarchicalRow> rows) { return {std::move(rows)}; }

// psi groups A, B; phi groups C, D.
HierarchicalDataset four_groups() {
  return dataset({{1, 1, 1, 3}, {1, 1, 0, 1},
                  {2, 1, 1, 5}, {2, 1, 0, 3},
                  {3, 0, 1, 2}, {3, 0, 0, 0.5}, {3, 0, 0, 1.5},
                  {4, 0, 1, 4}, {4, 0, 0, 0}, {4, 0, 0, 0}});
}

TEST(GroupMean, Cells) {
  const auto d = dataset({{1, 1, 1, 3}, {1, 1, 0, 1}, {1, 1, 0, 3}, {2, 0, 1, 7}});
  EXPECT_EQ(group_mean(d, 1, 1), 3.0);
  EXPECT_EQ(group_mean(d, 1, 0), 2.0);
  EXPECT_THROW(group_mean(d, 2, 0), EstimationError);
}

TEST(MarginalEffects, HandArithmetic) {
  const auto r = marginal_effects(four_groups());
  // y(1;psi) = 4, y(0;psi) = 2, y(1;phi) = 3, y(0;phi) = 0.5.
  EXPECT_NEAR(r.direct_psi().estimate, 2.0, kTol);
  EXPECT_NEAR(r.indirect().estimate, 1.5, kTol);
  EXPECT_NEAR(r.total().estimate, 3.5, kTol);
  EXPECT_NEAR(r.direct_phi().estimate, 2.5, kTol);
  // All-unit group means: psi (2, 4), phi (4/3, 4/3).
  EXPECT_NEAR(r.overall().estimate, 3.0 - 4.0 / 3.0, kTol);
  // Between-group variances: direct_psi differences (2, 2) -> 0; indirect
  // controls (1, 3) and (1, 0): 2/2 + 0.5/2.
  EXPECT_NEAR(r.direct_psi().variance, 0.0, kTol);
  EXPECT_NEAR(r.indirect().variance, 1.25, kTol);
  EXPECT_NEAR(r.saturation_psi, 0.5, kTol);
  EXPECT_NEAR(r.saturation_phi, 1.0 / 3.0, kTol);
  EXPECT_EQ(r.groups_psi, 2u);
  EXPECT_EQ(r.groups_phi, 2u);
}

TEST(MarginalEffects, ConstantOutcomes) {
  auto d = four_groups();
  for (auto& row : d.rows) row.y = 7.25;
  const auto r = marginal_effects(d);
  for (const auto& e : r.effects) {
    EXPECT_TRUE(e.defined);
    EXPECT_EQ(e.estimate, 0.0);
    EXPECT_EQ(e.variance, 0.0);
  }
}

TEST(MarginalEffects, GlobalShiftAndRowOrder) {
  const auto base = marginal_effects(four_groups());
  auto shifted = four_groups();
  for (auto& row : shifted.rows) row.y += 11.0;
  std::reverse(shifted.rows.begin(), shifted.rows.end());
  const auto r = marginal_effects(shifted);
  for (std::size_t e = 0; e < 5; ++e) {
    EXPECT_NEAR(r.effects[e].estimate, base.effects[e].estimate, 1e-12);
    EXPECT_NEAR(r.effects[e].variance, base.effects[e].variance, 1e-12);
  }
}

TEST(MarginalEffects, TotalIdentity) {
  std::vector<std::uint32_t> group_of;
  for (std::uint32_t g = 0; g < 8; ++g) group_of.insert(group_of.end(), 5, g);
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto a = two_stage_assignment(group_of, 0.6, 0.2, 0.5, seed);
    std::vector<double> y(a.z.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
      y[i] = std::sin(0.37 * static_cast<double>(i * seed)) + 1.3 * a.z[i];
    }
    const auto r = marginal_effects(make_dataset(a, y));
    EXPECT_EQ(r.total().estimate, r.direct_psi().estimate + r.indirect().estimate);
  }
}

TEST(MarginalEffects, EmptyCellLeavesOthersDefined) {
  auto d = four_groups();
  d.rows.erase(d.rows.begin());  // group 1 loses its treated unit
  const auto r = marginal_effects(d);
  EXPECT_FALSE(r.direct_psi().defined);
  EXPECT_FALSE(r.total().defined);
  EXPECT_TRUE(r.indirect().defined);
  EXPECT_TRUE(r.direct_phi().defined);
}

// Two groups of two, psi = phi = 1/2: eight equally likely assignments. With
// outcomes that ignore everyone else's treatment the indirect effect averages
// to zero over the design.
TEST(MarginalEffects, IndirectUnbiasedWithoutInterference) {
  const double y0[4] = {1.0, 4.0, 2.5, 7.0};
  const double y1[4] = {3.0, 5.5, 2.0, 9.0};
  double sum = 0;
  int count = 0;
  for (int psi_group = 0; psi_group < 2; ++psi_group) {
    for (int t0 = 0; t0 < 2; ++t0) {
      for (int t1 = 0; t1 < 2; ++t1) {
        HierarchicalDataset d;
        for (int i = 0; i < 4; ++i) {
          const int g = i / 2;
          const int treated = g == 0 ? t0 : t1;
          const std::uint8_t z = (i % 2) == treated ? 1 : 0;
          d.rows.push_back({g, static_cast<std::uint8_t>(g == psi_group), z, z ? y1[i] : y0[i]});
        }
        sum += marginal_effects(d).indirect().estimate;
        ++count;
      }
    }
  }
  EXPECT_EQ(count, 8);
  EXPECT_NEAR(sum / count, 0.0, kTol);
}

TEST(MarginalEffects, SingleGroupArmsHaveNoVariance) {
  const auto d = load_hierarchical(kData / "hier_fragment.txt");
  const auto r = marginal_effects(d);
  EXPECT_TRUE(r.direct_psi().defined);
  EXPECT_TRUE(std::isnan(r.direct_psi().variance));
  EXPECT_FALSE(r.warnings.empty());
}

TEST(MarginalEffects, DeclaredSaturationMismatchWarns) {
  const auto ok = marginal_effects(four_groups(), 0.05, DeclaredSaturations{0.5, 1.0 / 3.0});
  EXPECT_TRUE(ok.warnings.empty());
  const auto bad = marginal_effects(four_groups(), 0.05, DeclaredSaturations{0.5, 0.9});
  EXPECT_EQ(bad.warnings.size(), 1u);
}

TEST(HierarchicalIo, PrintedFragment) {
  const auto d = load_hierarchical(kData / "hier_fragment.txt");
  ASSERT_EQ(d.rows.size(), 6u);
  EXPECT_EQ(d.rows[0].group, 1);
  EXPECT_EQ(d.rows[0].group_arm, 1);
  EXPECT_EQ(d.rows[0].z, 0);
  EXPECT_EQ(d.rows[0].y, 1.9269359);
  EXPECT_EQ(d.rows[5].group, 4);
  EXPECT_EQ(d.rows[5].y, 0.6051009);
}

TEST(HierarchicalIo, RoundTrip) {
  const auto d = four_groups();
  const auto back = parse_hierarchical(format_hierarchical(d));
  ASSERT_EQ(back.rows.size(), d.rows.size());
  for (std::size_t i = 0; i < d.rows.size(); ++i) {
    EXPECT_EQ(back.rows[i].group, d.rows[i].group);
    EXPECT_EQ(back.rows[i].group_arm, d.rows[i].group_arm);
    EXPECT_EQ(back.rows[i].z, d.rows[i].z);
    EXPECT_EQ(back.rows[i].y, d.rows[i].y);
  }
}

TEST(HierarchicalIo, MixedArmRejected) {
  const std::string text = "group,group_tr,indiv_tr,obs_outcome\n1,1,0,2\n1,0,1,3\n";
  try {
    parse_hierarchical(text);
    FAIL() << "mixed arms accepted";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("group 1"), std::string::npos);
  }
  EXPECT_THROW(parse_hierarchical("group,arm,z,y\n"), ParseError);
  EXPECT_THROW(parse_hierarchical("group,group_tr,indiv_tr,obs_outcome\n1,2,0,1\n"), ParseError);
}

TEST(HierarchicalIo, JsonFieldOrder) {
  const auto json = report_json(marginal_effects(four_groups()));
  std::size_t last = 0;
  for (const char* key : {"direct_psi_hat", "direct_phi_hat", "indirect_hat", "total_hat",
                          "overall_hat"}) {
    const auto at = json.find(key);
    ASSERT_NE(at, std::string::npos) << key;
    EXPECT_GT(at, last);
    last = at;
  }
}

}  // namespace
}  // namespace spillover
