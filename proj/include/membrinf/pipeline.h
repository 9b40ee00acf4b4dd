#ifndef MEMBRINF_PIPELINE_H_
#define MEMBRINF_PIPELINE_H_

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "membrinf/attack.h"
#include "membrinf/datakit.h"
#include "membrinf/mitigation.h"
#include "membrinf/models.h"
#include "membrinf/shadowgen.h"

namespace membrinf {

enum class DataSourceKind { kBlobs, kPurchases, kCsv };

struct DataSpec {
  DataSourceKind kind = DataSourceKind::kPurchases;
  std::size_t n = 2000;         // target pool per run
  std::size_t n_shadow = 1000;  // attacker pool per run
  std::size_t m = 50;
  int k = 20;
  double sigma = 0.1;  // blobs only
  PurchaseProfileParams purchases;
  std::filesystem::path csv_path;
  CsvSchema csv_schema;
};

struct Protocol {
  int folds = 5;
  int runs = 3;
};

// One target train/test split plus the attacker's disjoint data pool.
struct FoldData {
  int run = 0;
  int fold = 0;
  Dataset target_train;
  Dataset target_test;
  Dataset shadow_pool;
};

struct ExperimentData {
  std::vector<FoldData> folds;
  std::vector<std::string> warnings;
};

// Synthetic sources are regenerated per run; CSV data is loaded once and
// re-split per run.
ExperimentData MakeExperimentData(const DataSpec& spec, const Protocol& protocol,
                                  std::uint64_t seed);

enum class ShadowSource { kDisjoint, kGenerated };

struct PipelineConfig {
  ModelKind target_kind = ModelKind::kDecisionTree;
  ModelKind gen_kind = ModelKind::kDecisionTree;
  ModelKind attack_kind = ModelKind::kDecisionTree;
  TrainConfig target_cfg;
  TrainConfig gen_cfg;
  TrainConfig attack_cfg;
  int partitions = 2;
  AttackMode mode = AttackMode::kGlobal;
  ShadowSource shadow_source = ShadowSource::kDisjoint;
  ShadowGenConfig shadowgen;
  std::size_t shadow_size = 0;  // 0: the whole pool
  double target_noise = 0.0;
  double shadow_noise = 0.0;
  HardeningPolicy policy;
  bool shuffle_membership = false;
  bool use_labels = true;
};

// Defaults for the attack classifier: a shallow tree, a longer LR schedule.
TrainConfig DefaultAttackConfig();

struct EvalSets {
  Dataset members;
  Dataset nonmembers;
};

// Equal-size member/non-member samples; non-members exclude rows that also
// occur in the training split. Target noise perturbs both sets.
EvalSets MakeEvalSets(const FoldData& fold, double target_noise, std::uint64_t seed);

std::shared_ptr<const Classifier> TrainTarget(const FoldData& fold,
                                              const PipelineConfig& cfg);

// D' for one trial: a sample of the disjoint pool or a generated set built
// against `api`. Shadow noise is applied last.
Dataset ObtainShadow(const FoldData& fold, const PipelineConfig& cfg, TargetApi& api,
                     std::uint64_t seed);

struct TrialResult {
  AttackMetrics attack;
  double target_test_accuracy = 0.0;
  double target_train_accuracy = 0.0;
  std::uint64_t queries = 0;
  std::vector<std::string> warnings;
};

TrialResult RunTrial(const FoldData& fold, const PipelineConfig& cfg,
                     std::uint64_t seed);

struct Summary {
  double mean = 0.0;
  double stddev = 0.0;  // sample std, 0 for a single value
  std::size_t count = 0;
};

Summary Summarize(std::span<const double> values);

struct PipelineSummary {
  Summary attack_accuracy;
  Summary attack_precision;
  Summary attack_recall;
  Summary target_accuracy;
  std::vector<TrialResult> trials;
};

// Runs one trial per fold on `workers` threads; trial seeds derive from
// (seed, fold index) only.
PipelineSummary RunPipeline(const ExperimentData& data, const PipelineConfig& cfg,
                            std::uint64_t seed, int workers = 1);

// Calls fn(i) for i in [0, n) on up to `workers` threads.
void ParallelFor(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace membrinf

#endif  // MEMBRINF_PIPELINE_H_
