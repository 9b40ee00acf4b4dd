#include "membrinf/pipeline.h"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>
#include <unordered_set>

namespace membrinf {
namespace {

enum SeedTag : std::uint64_t {
  kTagSplit = 1,
  kTagFolds,
  kTagEval,
  kTagShadow,
  kTagShadowNoise,
  kTagAttackSet,
  kTagShuffle,
  kTagPolicy,
};

std::string RowKey(FeatureView x) {
  return std::string(reinterpret_cast<const char*>(x.data()), x.size_bytes());
}

std::vector<std::size_t> Sample(std::size_t n, std::size_t count, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(std::min(count, n));
  return idx;
}

}  // namespace

TrainConfig DefaultAttackConfig() {
  TrainConfig cfg;
  cfg.tree.max_depth = 4;
  cfg.tree.min_samples_split = 20;
  cfg.logistic.learning_rate = 1.0;
  cfg.logistic.epochs = 1000;
  return cfg;
}

ExperimentData MakeExperimentData(const DataSpec& spec, const Protocol& protocol,
                                  std::uint64_t seed) {
  if (protocol.folds < 2) throw ArgumentError("need at least 2 folds");
  if (protocol.runs < 1) throw ArgumentError("need at least 1 run");
  ExperimentData out;
  std::optional<Dataset> csv;
  if (spec.kind == DataSourceKind::kCsv) csv = LoadCsv(spec.csv_path, spec.csv_schema);
  const std::size_t total = spec.n + spec.n_shadow;
  if (spec.n == 0 || spec.n_shadow == 0) throw ArgumentError("pool sizes must be positive");

  for (int run = 0; run < protocol.runs; ++run) {
    const std::uint64_t run_seed = DeriveSeed(seed, {static_cast<std::uint64_t>(run)});
    Dataset all;
    switch (spec.kind) {
      case DataSourceKind::kBlobs:
        all = SynthBlobs(total, spec.m, spec.k, spec.sigma, run_seed);
        break;
      case DataSourceKind::kPurchases:
        all = SynthPurchases(total, spec.m, spec.k, run_seed, spec.purchases);
        break;
      case DataSourceKind::kCsv:
        all = *csv;
        break;
    }
    const double frac = static_cast<double>(spec.n) / static_cast<double>(total);
    auto [pool, shadow] = StratifiedHalves(all, frac, DeriveSeed(run_seed, {kTagSplit}));
    std::vector<int> fold = StratifiedFoldAssignment(
        pool, protocol.folds, DeriveSeed(run_seed, {kTagFolds}), &out.warnings);
    for (int f = 0; f < protocol.folds; ++f) {
      std::vector<std::size_t> train_idx, test_idx;
      for (std::size_t i = 0; i < pool.size(); ++i) {
        (fold[i] == f ? test_idx : train_idx).push_back(i);
      }
      out.folds.push_back(
          {run, f, pool.Subset(train_idx), pool.Subset(test_idx), shadow});
    }
  }
  return out;
}

EvalSets MakeEvalSets(const FoldData& fold, double target_noise, std::uint64_t seed) {
  std::unordered_set<std::string> train_rows;
  for (std::size_t i = 0; i < fold.target_train.size(); ++i) {
    train_rows.insert(RowKey(fold.target_train.row(i)));
  }
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < fold.target_test.size(); ++i) {
    if (!train_rows.count(RowKey(fold.target_test.row(i)))) candidates.push_back(i);
  }
  const std::size_t count = std::min(candidates.size(), fold.target_train.size());
  if (count == 0) throw ArgumentError("no usable non-member rows");
  Rng rng(seed);
  std::vector<std::size_t> out_idx;
  for (std::size_t t : Sample(candidates.size(), count, rng)) out_idx.push_back(candidates[t]);
  const auto in_idx = Sample(fold.target_train.size(), count, rng);

  EvalSets sets{fold.target_train.Subset(in_idx), fold.target_test.Subset(out_idx)};
  if (target_noise > 0.0) {
    sets.members = AddUniformNoise(sets.members, target_noise, DeriveSeed(seed, {1}));
    sets.nonmembers = AddUniformNoise(sets.nonmembers, target_noise, DeriveSeed(seed, {2}));
  }
  return sets;
}

std::shared_ptr<const Classifier> TrainTarget(const FoldData& fold,
                                              const PipelineConfig& cfg) {
  return std::make_shared<const Classifier>(
      Fit(cfg.target_kind, cfg.target_cfg, fold.target_train));
}

Dataset ObtainShadow(const FoldData& fold, const PipelineConfig& cfg, TargetApi& api,
                     std::uint64_t seed) {
  const std::size_t want = cfg.shadow_size ? cfg.shadow_size : fold.shadow_pool.size();
  Dataset shadow;
  if (cfg.shadow_source == ShadowSource::kDisjoint) {
    if (want >= fold.shadow_pool.size()) {
      shadow = fold.shadow_pool;
    } else {
      Rng rng(seed);
      auto idx = Sample(fold.shadow_pool.size(), want, rng);
      std::sort(idx.begin(), idx.end());
      shadow = fold.shadow_pool.Subset(idx);
    }
  } else {
    ShadowGenConfig gen = cfg.shadowgen;
    gen.target_size = want;
    shadow = BuildShadowDataset(api, ComputeFeatureStats(fold.shadow_pool), gen, seed).data;
  }
  if (cfg.shadow_noise > 0.0) {
    shadow = AddUniformNoise(shadow, cfg.shadow_noise, DeriveSeed(seed, {kTagShadowNoise}));
  }
  return shadow;
}

TrialResult RunTrial(const FoldData& fold, const PipelineConfig& cfg, std::uint64_t seed) {
  TrialResult res;
  const auto target = TrainTarget(fold, cfg);
  ModelApi base(target);
  HardeningPolicy policy = cfg.policy;
  policy.seed = DeriveSeed(seed, {kTagPolicy});
  HardenedApi api(base, policy);

  const Dataset shadow = ObtainShadow(fold, cfg, api, DeriveSeed(seed, {kTagShadow}));
  AttackTrainSet dstar =
      BuildAttackSet(shadow, cfg.partitions, cfg.gen_kind, cfg.gen_cfg,
                     DeriveSeed(seed, {kTagAttackSet}), PolicyTransform(policy));
  if (cfg.shuffle_membership) ShuffleMembership(dstar, DeriveSeed(seed, {kTagShuffle}));
  const AttackModel fa = TrainAttackModel(dstar, cfg.attack_kind, cfg.attack_cfg, cfg.mode);
  res.warnings = dstar.warnings;
  res.warnings.insert(res.warnings.end(), fa.warnings().begin(), fa.warnings().end());

  const EvalSets sets = MakeEvalSets(fold, cfg.target_noise, DeriveSeed(seed, {kTagEval}));
  // MakeEvalSets drew disjoint records; noise may still collide two of them.
  res.attack = EvaluateAttack(fa, api, sets.members, sets.nonmembers, cfg.use_labels,
                              cfg.target_noise == 0.0);
  res.queries = api.query_count();

  auto accuracy = [&](const Dataset& d) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      const auto p = policy.Apply(target->PredictProba(d.row(i)), ~std::uint64_t{0} - i);
      correct += p.Argmax() == d.label(i);
    }
    return d.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(d.size());
  };
  res.target_test_accuracy = accuracy(fold.target_test);
  res.target_train_accuracy = accuracy(fold.target_train);
  return res;
}

Summary Summarize(std::span<const double> values) {
  Summary s;
  s.count = values.size();
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(s.count);
  if (s.count > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(s.count - 1));
  }
  return s;
}

PipelineSummary RunPipeline(const ExperimentData& data, const PipelineConfig& cfg,
                            std::uint64_t seed, int workers) {
  PipelineSummary out;
  out.trials.resize(data.folds.size());
  ParallelFor(data.folds.size(), workers, [&](std::size_t i) {
    out.trials[i] = RunTrial(data.folds[i], cfg, DeriveSeed(seed, {i}));
  });
  std::vector<double> acc, prec, rec, tacc;
  for (const auto& t : out.trials) {
    acc.push_back(t.attack.accuracy);
    prec.push_back(t.attack.precision);
    rec.push_back(t.attack.recall);
    tacc.push_back(t.target_test_accuracy);
  }
  out.attack_accuracy = Summarize(acc);
  out.attack_precision = Summarize(prec);
  out.attack_recall = Summarize(rec);
  out.target_accuracy = Summarize(tacc);
  return out;
}

void ParallelFor(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
  for (std::size_t t = 0; t < count; ++t) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace membrinf
