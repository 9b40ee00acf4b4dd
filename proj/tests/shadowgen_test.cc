#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "membrinf/shadowgen.h"

namespace membrinf {
namespace {

// Sealed double: answers with a fixed function of x and audits every call.
// It holds no model, so shadowgen cannot reach anything beyond TargetApi.
class ScriptedApi final : public TargetApi {
 public:
  using Fn = std::function<std::vector<double>(FeatureView)>;
  ScriptedApi(std::size_t m, int k, Fn fn) : m_(m), k_(k), fn_(std::move(fn)) {}

  ProbabilityVector Query(FeatureView x) override {
    ++queries_;
    EXPECT_EQ(x.size(), m_);
    return ProbabilityVector(fn_(x));
  }
  std::size_t m() const override { return m_; }
  int k() const override { return k_; }
  std::uint64_t query_count() const override { return queries_; }

 private:
  std::size_t m_;
  int k_;
  Fn fn_;
  std::uint64_t queries_ = 0;
};

ScriptedApi OneHotApi(std::size_t m, int k) {
  return ScriptedApi(m, k, [k](FeatureView x) {
    std::vector<double> p(static_cast<std::size_t>(k), 0.0);
    p[static_cast<std::size_t>(std::min(k - 1, static_cast<int>(x[0] * k)))] = 1.0;
    return p;
  });
}

ScriptedApi UniformApi(std::size_t m, int k) {
  return ScriptedApi(m, k, [k](FeatureView) {
    return std::vector<double>(static_cast<std::size_t>(k), 1.0 / k);
  });
}

FeatureStats StatsFor(std::size_t m, int k, std::uint64_t seed = 1) {
  return ComputeFeatureStats(SynthBlobs(200, m, k, 0.2, seed));
}

TEST(Probe, ReadsClassCountFromArity) {
  auto api = OneHotApi(4, 10);
  QueryBudget budget(10);
  const auto r = ProbeStructure(api, StatsFor(4, 10), budget, 1, 2);
  EXPECT_EQ(r.k, 10);
  EXPECT_EQ(r.m, 4u);
  EXPECT_EQ(budget.spent(), 2u);
  EXPECT_EQ(api.query_count(), 2u);
}

TEST(Probe, InconsistentArityIsAProtocolError) {
  int calls = 0;
  ScriptedApi api(3, 2, [&](FeatureView) {
    return std::vector<double>(++calls == 1 ? 2 : 3, 0.0);
  });
  QueryBudget budget(10);
  EXPECT_THROW(ProbeStructure(api, StatsFor(3, 2), budget, 1, 2), ProtocolError);
}

TEST(Probe, ZeroBudgetIsExhausted) {
  auto api = OneHotApi(3, 2);
  QueryBudget budget(0);
  EXPECT_THROW(ProbeStructure(api, StatsFor(3, 2), budget, 1), BudgetExhausted);
  EXPECT_EQ(api.query_count(), 0u);
}

TEST(Statistics, ZeroVarianceGivesTheMeanVector) {
  FeatureStats stats;
  stats.class_prior = {0.5, 0.5};
  for (double mean : {0.2, 0.7}) {
    FeatureDescriptor f;
    f.mean = mean;
    stats.features.push_back(f);
  }
  const Dataset d = GenStatisticsBased(stats, 50, 3);
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_EQ(d.row(i)[0], 0.2);
    EXPECT_EQ(d.row(i)[1], 0.7);
  }
}

TEST(Statistics, ZeroRowsGiveAnEmptyDataset) {
  EXPECT_TRUE(GenStatisticsBased(StatsFor(3, 2), 0, 1).empty());
}

TEST(Statistics, SampleMeansTrackDescriptorMeans) {
  FeatureStats stats;
  stats.class_prior = {1.0, 1.0};
  for (double mean : {0.3, 0.5, 0.8}) {
    FeatureDescriptor f;
    f.mean = mean;
    f.stddev = 0.05;
    stats.features.push_back(f);
  }
  const Dataset d = GenStatisticsBased(stats, 10000, 5);
  for (std::size_t j = 0; j < 3; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) s += d.row(i)[j];
    EXPECT_NEAR(s / d.size(), stats.features[j].mean, 0.05);
  }
}

TEST(Statistics, MissingDescriptorsAreAnError) {
  EXPECT_THROW(GenStatisticsBased(FeatureStats{}, 5, 1), ArgumentError);
}

TEST(QuerySearch, OneHotApiAcceptsFirstSample) {
  auto api = OneHotApi(3, 4);
  ShadowGenConfig cfg;
  cfg.confidence_threshold = 0.9;
  QueryBudget budget(100);
  const auto a = GenQueryBased(api, StatsFor(3, 4), cfg, budget, 1);
  EXPECT_EQ(api.query_count(), 1u);
  EXPECT_EQ(a.label, a.response.Argmax());
}

TEST(QuerySearch, UnreachableThresholdExhaustsBudgetWithBestPoint) {
  auto api = UniformApi(3, 4);
  ShadowGenConfig cfg;
  cfg.confidence_threshold = 0.5;
  QueryBudget budget(57);
  try {
    GenQueryBased(api, StatsFor(3, 4), cfg, budget, 1);
    FAIL();
  } catch (const BudgetExhausted& e) {
    EXPECT_TRUE(e.best_point.has_value());
    EXPECT_EQ(e.queries_spent, 57u);
  }
  EXPECT_EQ(api.query_count(), 57u);
}

TEST(QuerySearch, CounterMatchesLoopIterations) {
  // Confident only in the top-right corner of feature 0: rejections first.
  int iterations = 0;
  ScriptedApi api(4, 2, [&](FeatureView x) {
    ++iterations;
    return x[0] > 0.8 ? std::vector<double>{0.05, 0.95} : std::vector<double>{0.5, 0.5};
  });
  FeatureStats stats;
  stats.class_prior = {0.5, 0.5};
  for (int j = 0; j < 4; ++j) {
    FeatureDescriptor f;
    f.mean = 0.5;
    f.stddev = 0.3;
    stats.features.push_back(f);
  }
  QueryBudget budget(10000);
  ShadowGenConfig cfg;
  GenQueryBased(api, stats, cfg, budget, 9);
  EXPECT_EQ(api.query_count(), static_cast<std::uint64_t>(iterations));
  EXPECT_EQ(budget.spent(), api.query_count());
}

TEST(Region, TinyRadiusCollapsesOnCenter) {
  ShadowGenConfig cfg;
  cfg.region_radius = 1e-12;
  const FeatureVector c{0.3, 0.6};
  const Dataset d = GenRegionBased(c, 1, 2, cfg, 4);
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_NEAR(d.row(i)[0], 0.3, 1e-11);
    EXPECT_NEAR(d.row(i)[1], 0.6, 1e-11);
  }
}

TEST(Region, IncludesCenterPlusSamples) {
  ShadowGenConfig cfg;
  cfg.samples_per_region = 3;
  const Dataset d = GenRegionBased({0.5, 0.5}, 0, 2, cfg, 1);
  EXPECT_EQ(d.size(), 4u);
  EXPECT_EQ(d.row(0)[0], 0.5);
}

TEST(Region, SamplesStayInsideClippedCube) {
  ShadowGenConfig cfg;
  cfg.samples_per_region = 1000;
  cfg.region_radius = 0.15;
  const FeatureVector c{0.05, 0.5, 0.95};
  const Dataset d = GenRegionBased(c, 2, 3, cfg, 7);
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_EQ(d.label(i), 2);
    for (std::size_t j = 0; j < 3; ++j) {
      EXPECT_LE(std::fabs(d.row(i)[j] - c[j]), 0.15 + 1e-15);
      EXPECT_GE(d.row(i)[j], 0.0);
      EXPECT_LE(d.row(i)[j], 1.0);
    }
  }
}

TEST(Build, StatisticsTechniqueSpendsNoQueries) {
  auto api = OneHotApi(3, 2);
  ShadowGenConfig cfg;
  cfg.technique = ShadowTechnique::kStatistics;
  cfg.target_size = 100;
  const auto b = BuildShadowDataset(api, StatsFor(3, 2), cfg, 1);
  EXPECT_EQ(api.query_count(), 0u);
  EXPECT_EQ(b.data.size(), 100u);
}

TEST(Build, QueryPlusRegionAcceptsEnoughSeeds) {
  auto api = OneHotApi(3, 4);
  ShadowGenConfig cfg;
  cfg.target_size = 100;
  cfg.samples_per_region = 9;
  const auto b = BuildShadowDataset(api, StatsFor(3, 4), cfg, 2);
  EXPECT_GE(b.provenance.accepted_points, 10u);
  EXPECT_GE(b.data.size(), 100u);
  EXPECT_EQ(b.provenance.queries_spent, api.query_count());
  EXPECT_LE(api.query_count(), cfg.query_budget);
  for (int y : b.data.labels()) {
    EXPECT_GE(y, 0);
    EXPECT_LT(y, 4);
  }
}

TEST(Build, SeedPointLabelsMatchApiArgmax) {
  auto api = OneHotApi(2, 3);
  ShadowGenConfig cfg;
  cfg.technique = ShadowTechnique::kQuery;
  cfg.target_size = 40;
  const auto b = BuildShadowDataset(api, StatsFor(2, 3), cfg, 3);
  auto check = OneHotApi(2, 3);
  for (std::size_t i = 0; i < b.data.size(); ++i) {
    EXPECT_EQ(b.data.label(i), check.Query(b.data.row(i)).Argmax());
  }
}

TEST(Build, BudgetErrorCarriesPartialShadowSet) {
  auto api = OneHotApi(3, 2);
  ShadowGenConfig cfg;
  cfg.target_size = 1000;
  cfg.query_budget = 20;
  try {
    BuildShadowDataset(api, StatsFor(3, 2), cfg, 1);
    FAIL();
  } catch (const BudgetExhausted& e) {
    ASSERT_TRUE(e.partial.has_value());
    EXPECT_EQ(e.partial->size(), 200u);
    EXPECT_EQ(e.queries_spent, 20u);
  }
}

TEST(Build, ThresholdGatesAcceptance) {
  const Dataset blobs = SynthBlobs(500, 5, 5, 0.05, 3);
  const auto model = std::make_shared<const Classifier>(
      Fit(ModelKind::kLogisticRegression, TrainConfig{}, blobs));
  const FeatureStats stats = ComputeFeatureStats(blobs);
  auto rate = [&](double tau) {
    ModelApi api(model);
    ShadowGenConfig cfg;
    cfg.confidence_threshold = tau;
    cfg.target_size = 100000;
    cfg.query_budget = 3000;
    try {
      BuildShadowDataset(api, stats, cfg, 11);
    } catch (const BudgetExhausted& e) {
      // Each accepted seed contributes 1 + s rows.
      const double accepted = static_cast<double>(e.partial->size()) / (1 + cfg.samples_per_region);
      return accepted / static_cast<double>(e.queries_spent);
    }
    ADD_FAILURE() << "budget should run out";
    return 0.0;
  };
  const double loose = rate(0.8), strict = rate(0.99);
  EXPECT_GT(loose, 0.0);
  EXPECT_GE(loose, 10.0 * strict) << "loose " << loose << " strict " << strict;
}

TEST(Build, ProvenanceSidecar) {
  auto api = OneHotApi(3, 2);
  ShadowGenConfig cfg;
  cfg.target_size = 30;
  const auto b = BuildShadowDataset(api, StatsFor(3, 2), cfg, 5);
  const auto stem = std::filesystem::temp_directory_path() / "membrinf_shadow_test";
  SaveShadowBuild(b, stem);
  std::ifstream in(stem.string() + ".provenance.json");
  std::string text((std::istreambuf_iterator<char>(in)), {});
  for (const char* key : {"technique", "tau", "delta", "\"r\"", "\"s\"", "queries_spent", "seed"}) {
    EXPECT_NE(text.find(key), std::string::npos) << key;
  }
  EXPECT_EQ(LoadDataset(stem.string() + ".data").size(), b.data.size());
}

TEST(Config, ThresholdMustExceedChance) {
  ShadowGenConfig cfg;
  cfg.confidence_threshold = 0.25;
  EXPECT_THROW(cfg.Validate(4), ArgumentError);
  cfg.confidence_threshold = 0.26;
  EXPECT_NO_THROW(cfg.Validate(4));
}

}  // namespace
}  // namespace membrinf
