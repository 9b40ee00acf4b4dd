#include <gtest/gtest.h>

#include <atomic>
#include <set>

#include "membrinf/pipeline.h"

namespace membrinf {
namespace {

std::string Key(FeatureView x) {
  return std::string(reinterpret_cast<const char*>(x.data()), x.size_bytes());
}

std::set<std::string> Keys(const Dataset& d) {
  std::set<std::string> out;
  for (std::size_t i = 0; i < d.size(); ++i) out.insert(Key(d.row(i)));
  return out;
}

DataSpec Blobs(std::size_t n, std::size_t n_shadow, std::size_t m, int k, double sigma) {
  DataSpec s;
  s.kind = DataSourceKind::kBlobs;
  s.n = n;
  s.n_shadow = n_shadow;
  s.m = m;
  s.k = k;
  s.sigma = sigma;
  return s;
}

PipelineConfig Config(ModelKind target) {
  PipelineConfig c;
  c.target_kind = target;
  c.attack_cfg = DefaultAttackConfig();
  return c;
}

TEST(Data, FoldsTimesRunsWithDisjointPools) {
  const auto data = MakeExperimentData(Blobs(200, 100, 4, 3, 0.3), Protocol{5, 2}, 1);
  ASSERT_EQ(data.folds.size(), 10u);
  for (const auto& f : data.folds) {
    EXPECT_EQ(f.target_train.size() + f.target_test.size(), 200u);
    EXPECT_EQ(f.shadow_pool.size(), 100u);
    const auto train = Keys(f.target_train), shadow = Keys(f.shadow_pool);
    for (const auto& key : Keys(f.target_test)) EXPECT_FALSE(train.count(key));
    for (const auto& key : train) EXPECT_FALSE(shadow.count(key));
  }
  // Each run regenerates the synthetic pool.
  EXPECT_NE(Keys(data.folds[0].shadow_pool), Keys(data.folds[5].shadow_pool));
}

TEST(Data, TestFoldsPartitionThePool) {
  const auto data = MakeExperimentData(Blobs(100, 50, 10, 2, 0.3), Protocol{4, 1}, 2);
  std::set<std::string> seen;
  std::size_t total = 0;
  for (const auto& f : data.folds) {
    total += f.target_test.size();
    for (const auto& key : Keys(f.target_test)) seen.insert(key);
  }
  EXPECT_EQ(total, 100u);
  EXPECT_EQ(seen.size(), 100u);
}

TEST(Data, ProtocolBoundsChecked) {
  EXPECT_THROW(MakeExperimentData(Blobs(100, 50, 3, 2, 0.3), Protocol{1, 1}, 1), ArgumentError);
  EXPECT_THROW(MakeExperimentData(Blobs(100, 50, 3, 2, 0.3), Protocol{2, 0}, 1), ArgumentError);
  EXPECT_THROW(MakeExperimentData(Blobs(100, 0, 3, 2, 0.3), Protocol{2, 1}, 1), ArgumentError);
}

TEST(Eval, EqualSizeDisjointSets) {
  const auto data = MakeExperimentData(Blobs(300, 100, 4, 3, 0.3), Protocol{5, 1}, 3);
  const auto& fold = data.folds[0];
  const auto sets = MakeEvalSets(fold, 0.0, 1);
  EXPECT_EQ(sets.members.size(), sets.nonmembers.size());
  EXPECT_EQ(sets.members.size(), fold.target_test.size());
  const auto train = Keys(fold.target_train);
  for (const auto& key : Keys(sets.members)) EXPECT_TRUE(train.count(key));
  for (const auto& key : Keys(sets.nonmembers)) EXPECT_FALSE(train.count(key));
}

TEST(Eval, DuplicateRowsNeverCountAsNonMembers) {
  FoldData fold;
  fold.target_train = Dataset(1, 2);
  fold.target_test = Dataset(1, 2);
  for (int i = 0; i < 6; ++i) fold.target_train.Add(FeatureVector{0.1 * i}, i % 2);
  fold.target_test.Add(FeatureVector{0.1}, 1);  // duplicate of a training row
  fold.target_test.Add(FeatureVector{0.9}, 0);
  const auto sets = MakeEvalSets(fold, 0.0, 1);
  ASSERT_EQ(sets.nonmembers.size(), 1u);
  EXPECT_EQ(sets.nonmembers.row(0)[0], 0.9);
}

TEST(Eval, TargetNoisePerturbsBothSets) {
  const auto data = MakeExperimentData(Blobs(200, 100, 4, 3, 0.3), Protocol{4, 1}, 3);
  const auto clean = MakeEvalSets(data.folds[0], 0.0, 5);
  const auto noisy = MakeEvalSets(data.folds[0], 0.5, 5);
  ASSERT_EQ(clean.members.size(), noisy.members.size());
  EXPECT_NE(Keys(clean.members), Keys(noisy.members));
  EXPECT_NE(Keys(clean.nonmembers), Keys(noisy.nonmembers));
}

TEST(Shadow, DisjointSampleHonoursSize) {
  const auto data = MakeExperimentData(Blobs(100, 200, 3, 2, 0.3), Protocol{2, 1}, 3);
  auto cfg = Config(ModelKind::kNaiveBayes);
  cfg.shadow_size = 50;
  const auto target = TrainTarget(data.folds[0], cfg);
  ModelApi api(target);
  const Dataset d = ObtainShadow(data.folds[0], cfg, api, 1);
  EXPECT_EQ(d.size(), 50u);
  EXPECT_EQ(api.query_count(), 0u);
  const auto pool = Keys(data.folds[0].shadow_pool);
  for (const auto& key : Keys(d)) EXPECT_TRUE(pool.count(key));
}

TEST(Shadow, GeneratedSourceQueriesTheTarget) {
  const auto data = MakeExperimentData(Blobs(200, 200, 3, 2, 0.1), Protocol{2, 1}, 3);
  auto cfg = Config(ModelKind::kDecisionTree);
  cfg.shadow_source = ShadowSource::kGenerated;
  cfg.shadow_size = 100;
  const auto target = TrainTarget(data.folds[0], cfg);
  ModelApi api(target);
  const Dataset d = ObtainShadow(data.folds[0], cfg, api, 1);
  EXPECT_GE(d.size(), 100u);
  EXPECT_GT(api.query_count(), 0u);
  EXPECT_LE(api.query_count(), cfg.shadowgen.query_budget);
}

TEST(Summary, SampleStd) {
  const double v[] = {1, 2, 3, 4};
  const auto s = Summarize(v);
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_NEAR(s.stddev, 1.2909944487358056, 1e-15);
  EXPECT_EQ(Summarize(std::span<const double>(v, 1)).stddev, 0.0);
}

TEST(Parallel, VisitsEveryIndexOnceAndRethrows) {
  std::vector<std::atomic<int>> hits(100);
  ParallelFor(100, 4, [&](std::size_t i) { hits[i]++; });
  for (auto& h : hits) EXPECT_EQ(h.load(), 1);
  EXPECT_THROW(ParallelFor(10, 3,
                           [](std::size_t i) {
                             if (i == 7) throw ArgumentError("boom");
                           }),
               ArgumentError);
}

TEST(Pipeline, WorkerCountDoesNotChangeResults) {
  const auto data = MakeExperimentData(Blobs(300, 200, 5, 3, 0.3), Protocol{4, 1}, 7);
  const auto cfg = Config(ModelKind::kDecisionTree);
  const auto a = RunPipeline(data, cfg, 11, 1);
  const auto b = RunPipeline(data, cfg, 11, 4);
  ASSERT_EQ(a.trials.size(), 4u);
  for (std::size_t i = 0; i < a.trials.size(); ++i) {
    EXPECT_EQ(a.trials[i].attack.accuracy, b.trials[i].attack.accuracy);
    EXPECT_EQ(a.trials[i].target_test_accuracy, b.trials[i].target_test_accuracy);
  }
}

TEST(Pipeline, TreeTargetLeaksMoreThanBayes) {
  // One dimension so the ten tight blobs still overlap; in more dimensions
  // they separate and every target answers one-hot.
  const auto data = MakeExperimentData(Blobs(400, 400, 1, 10, 0.05), Protocol{5, 1}, 1);
  const auto dt = RunPipeline(data, Config(ModelKind::kDecisionTree), 2);
  const auto nb = RunPipeline(data, Config(ModelKind::kNaiveBayes), 2);
  EXPECT_GT(dt.attack_accuracy.mean, 0.6);
  EXPECT_LT(nb.attack_accuracy.mean, 0.58);
}

TEST(Pipeline, ShuffledMembershipIsNearChance) {
  const auto data = MakeExperimentData(Blobs(1000, 500, 10, 4, 0.4), Protocol{5, 1}, 3);
  auto cfg = Config(ModelKind::kKnn);
  cfg.gen_kind = ModelKind::kKnn;
  cfg.shuffle_membership = true;
  const auto s = RunPipeline(data, cfg, 4);
  EXPECT_NEAR(s.attack_accuracy.mean, 0.5, 0.05);
}

TEST(Pipeline, LabelOnlyPolicyReachesTheAttacker) {
  const auto data = MakeExperimentData(Blobs(300, 200, 5, 3, 0.3), Protocol{3, 1}, 7);
  auto cfg = Config(ModelKind::kLogisticRegression);
  cfg.policy = HardeningPolicy::LabelOnly();
  const auto s = RunPipeline(data, cfg, 1);
  const auto base = RunPipeline(data, Config(ModelKind::kLogisticRegression), 1);
  EXPECT_DOUBLE_EQ(s.target_accuracy.mean, base.target_accuracy.mean);
  for (const auto& t : s.trials) EXPECT_GT(t.queries, 0u);
}

}  // namespace
}  // namespace membrinf
