#include <gtest/gtest.h>

#include <sstream>

#include "membrinf/mitigation.h"
#include "membrinf/pipeline.h"

namespace membrinf {
namespace {

ProbabilityVector RandomSimplex(Rng& rng, int k) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> p(static_cast<std::size_t>(k));
  for (double& v : p) v = e(rng);
  // Occasionally plant ties and exact zeros.
  if (rng() % 5 == 0) p[1] = p[0];
  double s = 0;
  for (double v : p) s += v;
  for (double& v : p) v /= s;
  if (rng() % 7 == 0) {
    p.assign(p.size(), 0.0);
    p[rng() % p.size()] = 1.0;
  }
  return ProbabilityVector(std::move(p));
}

std::size_t NonZero(const ProbabilityVector& p) {
  return static_cast<std::size_t>(std::count_if(p.begin(), p.end(), [](double v) { return v > 0; }));
}

TEST(TopK, KeepsLargestAndRenormalizes) {
  const auto q = HardenTopK(ProbabilityVector({0.1, 0.6, 0.3}), 2);
  EXPECT_DOUBLE_EQ(q[0], 0.0);
  EXPECT_DOUBLE_EQ(q[1], 0.6 / 0.9);
  EXPECT_DOUBLE_EQ(q[2], 0.3 / 0.9);
}

TEST(TopK, TiesKeepLowerIndex) {
  const auto q = HardenTopK(ProbabilityVector({0.25, 0.25, 0.25, 0.25}), 1);
  EXPECT_EQ(q.values(), (std::vector<double>{1.0, 0.0, 0.0, 0.0}));
}

TEST(TopK, WithoutRenormalizationMassDrops) {
  const auto q = HardenTopK(ProbabilityVector({0.1, 0.6, 0.3}), 1, false);
  EXPECT_EQ(q.values(), (std::vector<double>{0.0, 0.6, 0.0}));
}

TEST(TopK, FullWidthIsIdentity) {
  const ProbabilityVector p({0.2, 0.5, 0.3});
  EXPECT_EQ(HardenTopK(p, 3), p);
  EXPECT_THROW(HardenTopK(p, 0), ArgumentError);
}

TEST(LabelOnly, OneHotAtArgmax) {
  EXPECT_EQ(HardenLabelOnly(ProbabilityVector({0.3, 0.3, 0.4})).values(),
            (std::vector<double>{0, 0, 1}));
  EXPECT_EQ(HardenLabelOnly(ProbabilityVector({0.4, 0.4, 0.2})).values(),
            (std::vector<double>{1, 0, 0}));
}

TEST(Noise, ZeroScaleIsIdentityAndSeedIsDeterministic) {
  const ProbabilityVector p({0.2, 0.5, 0.3});
  EXPECT_EQ(HardenNoise(p, 0.0, 1), p);
  EXPECT_EQ(HardenNoise(p, 0.2, 5), HardenNoise(p, 0.2, 5));
  EXPECT_NE(HardenNoise(p, 0.2, 5), HardenNoise(p, 0.2, 6));
  EXPECT_THROW(HardenNoise(p, -1.0, 1), ArgumentError);
}

TEST(Noise, LaplaceSpreadMatchesScale) {
  // Mean absolute deviation of Laplace(0, b) is b; check the pre-clip spread
  // through a vector that never clips.
  const ProbabilityVector p({0.5, 0.5});
  double dev = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const auto q = HardenNoise(p, 0.01, static_cast<std::uint64_t>(i));
    dev += std::fabs(q[0] - 0.5);
  }
  // q0 - 0.5 is about (e0 - e1) / 2, and E|e0 - e1| = 1.5 b.
  EXPECT_NEAR(dev / n, 0.0075, 0.001);
}

TEST(Fuzz, TransformsPreserveInvariants) {
  Rng rng(2024);
  const int trials = 100000;
  for (int t = 0; t < trials; ++t) {
    const int k = 2 + static_cast<int>(rng() % 12);
    const ProbabilityVector p = RandomSimplex(rng, k);
    const int top = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(k));
    const int argmax = p.Argmax();
    switch (t % 4) {
      case 0: {
        const auto q = HardenTopK(p, top);
        ASSERT_TRUE(IsValidSimplex(q.view())) << t;
        ASSERT_LE(NonZero(q), static_cast<std::size_t>(top));
        ASSERT_EQ(q.Argmax(), argmax);
        break;
      }
      case 1: {
        const auto q = HardenTopK(p, top, false);
        double s = 0;
        for (double v : q) {
          ASSERT_GE(v, 0.0);
          s += v;
        }
        ASSERT_LE(s, 1.0 + 1e-9);
        ASSERT_EQ(q.Argmax(), argmax);
        break;
      }
      case 2: {
        const auto q = HardenLabelOnly(p);
        ASSERT_TRUE(IsValidSimplex(q.view()));
        ASSERT_EQ(NonZero(q), 1u);
        ASSERT_EQ(q.Argmax(), argmax);
        break;
      }
      case 3: {
        const auto q = HardenNoise(p, 0.5 * std::uniform_real_distribution<>(0, 1)(rng), rng());
        ASSERT_TRUE(IsValidSimplex(q.view())) << t;
        ASSERT_EQ(q.size(), p.size());
        break;
      }
    }
  }
}

TEST(Policy, ParseAndValidate) {
  EXPECT_EQ(ParseHardeningPolicy("TopK", 3, 0).top_k, 3);
  EXPECT_EQ(ParseHardeningPolicy("LabelOnly", 0, 0).kind, HardeningPolicy::Kind::kLabelOnly);
  EXPECT_EQ(ParseHardeningPolicy("OutputNoise", 0.1, 4).noise_scale, 0.1);
  EXPECT_THROW(ParseHardeningPolicy("TopK", 1.5, 0), ArgumentError);
  EXPECT_THROW(ParseHardeningPolicy("Blur", 0, 0), ArgumentError);
  EXPECT_THROW(HardeningPolicy::TopK(5).Validate(4), ArgumentError);
  EXPECT_NO_THROW(HardeningPolicy::TopK(4).Validate(4));
  EXPECT_THROW(HardeningPolicy::OutputNoise(-0.1, 0).Validate(4), ArgumentError);
}

TEST(HardenedApi, WrapsEveryResponse) {
  const Dataset d = SynthBlobs(200, 3, 4, 0.2, 1);
  auto model = std::make_shared<const Classifier>(Fit(ModelKind::kNaiveBayes, {}, d));
  ModelApi inner(model);
  HardenedApi api(inner, HardeningPolicy::LabelOnly());
  for (std::size_t i = 0; i < 20; ++i) {
    const auto q = api.Query(d.row(i));
    EXPECT_EQ(NonZero(q), 1u);
    EXPECT_EQ(q.Argmax(), model->Predict(d.row(i)));
  }
  EXPECT_EQ(api.query_count(), 20u);
  EXPECT_EQ(inner.query_count(), 20u);
  EXPECT_THROW(HardenedApi(inner, HardeningPolicy::TopK(9)), ArgumentError);
}

TEST(HardenedApi, NoiseVariesAcrossRepeatedQueries) {
  const Dataset d = SynthBlobs(100, 3, 3, 0.2, 1);
  auto model = std::make_shared<const Classifier>(Fit(ModelKind::kNaiveBayes, {}, d));
  ModelApi inner(model);
  HardenedApi api(inner, HardeningPolicy::OutputNoise(0.1, 3));
  EXPECT_NE(api.Query(d.row(0)), api.Query(d.row(0)));
}

class ReportFixture : public ::testing::Test {
 protected:
  ExperimentData data_ = MakeExperimentData(
      DataSpec{DataSourceKind::kBlobs, 300, 300, 5, 3, 0.4, {}, {}, {}}, Protocol{3, 1}, 4);
};

TEST_F(ReportFixture, RowsInOrderWithUtilityDelta) {
  PipelineConfig cfg;
  cfg.target_kind = ModelKind::kLogisticRegression;
  cfg.attack_cfg = DefaultAttackConfig();
  const auto rows = MitigationReport(
      data_, cfg, {HardeningPolicy::TopK(1), HardeningPolicy::LabelOnly()}, {0.0, 10.0}, 7);
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[0].policy, "None");
  EXPECT_EQ(rows[1].policy, "TopK");
  EXPECT_EQ(rows[2].policy, "LabelOnly");
  EXPECT_EQ(rows[3].policy, "L2");
  EXPECT_EQ(rows[4].parameter, 10.0);
  EXPECT_EQ(rows[0].utility_delta, 0.0);
  // Output hardening keeps the argmax, so accuracy is unchanged.
  EXPECT_DOUBLE_EQ(rows[1].model_accuracy, rows[0].model_accuracy);
  EXPECT_DOUBLE_EQ(rows[2].model_accuracy, rows[0].model_accuracy);
  for (const auto& r : rows) {
    EXPECT_DOUBLE_EQ(r.utility_delta, r.model_accuracy - rows[0].model_accuracy);
  }
  std::ostringstream csv;
  WriteMitigationCsv(rows, csv);
  const std::string text = csv.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 6);
}

TEST_F(ReportFixture, L2GridNeedsLogisticTarget) {
  PipelineConfig cfg;
  cfg.target_kind = ModelKind::kDecisionTree;
  EXPECT_THROW(MitigationReport(data_, cfg, {}, {1.0}, 1), ArgumentError);
}

}  // namespace
}  // namespace membrinf
