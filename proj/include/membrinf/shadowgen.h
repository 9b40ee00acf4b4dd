#ifndef MEMBRINF_SHADOWGEN_H_
#define MEMBRINF_SHADOWGEN_H_

#include <atomic>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>

#include "membrinf/datakit.h"
#include "membrinf/models.h"

namespace membrinf {

// Black-box prediction service. Adversary code holds only this interface.
class TargetApi {
 public:
  virtual ~TargetApi() = default;
  virtual ProbabilityVector Query(FeatureView x) = 0;
  // Input arity accepted by the service.
  virtual std::size_t m() const = 0;
  virtual int k() const = 0;
  virtual std::uint64_t query_count() const = 0;
};

// In-process service backed by a fitted classifier. Thread-safe.
class ModelApi final : public TargetApi {
 public:
  explicit ModelApi(std::shared_ptr<const Classifier> model)
      : model_(std::move(model)) {}

  ProbabilityVector Query(FeatureView x) override {
    queries_.fetch_add(1, std::memory_order_relaxed);
    return model_->PredictProba(x);
  }
  std::size_t m() const override { return model_->m(); }
  int k() const override { return model_->k(); }
  std::uint64_t query_count() const override {
    return queries_.load(std::memory_order_relaxed);
  }

 private:
  std::shared_ptr<const Classifier> model_;
  std::atomic<std::uint64_t> queries_{0};
};

// Caller-side query allowance for one shadow build.
class QueryBudget {
 public:
  explicit QueryBudget(std::uint64_t limit) : limit_(limit) {}
  std::uint64_t limit() const { return limit_; }
  std::uint64_t spent() const { return spent_; }
  std::uint64_t remaining() const { return limit_ - spent_; }
  bool exhausted() const { return spent_ >= limit_; }
  // Queries `api` once, charging the budget; throws BudgetExhausted first
  // when nothing is left.
  ProbabilityVector Query(TargetApi& api, FeatureView x);

 private:
  std::uint64_t limit_;
  std::uint64_t spent_ = 0;
};

class BudgetExhausted : public Error {
 public:
  explicit BudgetExhausted(const std::string& what) : Error(what) {}

  // Highest-confidence point seen by the query search, when one exists.
  std::optional<FeatureVector> best_point;
  std::optional<ProbabilityVector> best_response;
  // Shadow rows collected before the budget ran out.
  std::optional<Dataset> partial;
  std::uint64_t queries_spent = 0;
};

enum class ShadowTechnique { kStatistics, kQuery, kRegion, kQueryPlusRegion };

std::string_view ShadowTechniqueName(ShadowTechnique t);
ShadowTechnique ParseShadowTechnique(std::string_view name);

struct ShadowGenConfig {
  ShadowTechnique technique = ShadowTechnique::kQueryPlusRegion;
  double confidence_threshold = 0.8;
  int max_updates = 20;
  double region_radius = 0.1;
  int samples_per_region = 9;
  std::size_t target_size = 1000;
  std::uint64_t query_budget = 5000;

  // Checks ranges; `k` is needed for the threshold bound tau > 1/k.
  void Validate(int k) const;
};

struct ProbeResult {
  std::size_t m = 0;
  int k = 0;
};

// Sends `probes` trial queries sampled from `stats` and reads the class
// count from the response arity.
ProbeResult ProbeStructure(TargetApi& api, const FeatureStats& stats,
                           QueryBudget& budget, std::uint64_t seed,
                           int probes = 2);

// One independent draw per feature from its descriptor, clipped to [0,1].
// Uses class-conditional descriptors for `label` when `stats` has them.
FeatureVector SampleFeatures(const FeatureStats& stats, Rng& rng,
                             std::optional<int> label = std::nullopt);

// Statistics-based generation: labels from the class prior, then features.
Dataset GenStatisticsBased(const FeatureStats& stats, std::size_t n,
                           std::uint64_t seed);

struct AcceptedPoint {
  FeatureVector x;
  ProbabilityVector response;
  int label = 0;
};

// Query-based search for a point the target labels with confidence >= tau.
// Restarts from a fresh statistics sample after max_updates rejections.
AcceptedPoint GenQueryBased(TargetApi& api, const FeatureStats& stats,
                            const ShadowGenConfig& cfg, QueryBudget& budget,
                            std::uint64_t seed);

// d_f plus samples_per_region points drawn uniformly from the hypercube of
// half-width region_radius around it (clipped to [0,1]^m), all labelled
// with `label`.
Dataset GenRegionBased(const FeatureVector& center, int label, int k,
                       const ShadowGenConfig& cfg, std::uint64_t seed);

struct ShadowProvenance {
  ShadowTechnique technique = ShadowTechnique::kQueryPlusRegion;
  double confidence_threshold = 0.0;
  double region_radius = 0.0;
  int max_updates = 0;
  int samples_per_region = 0;
  std::uint64_t queries_spent = 0;
  std::uint64_t seed = 0;
  std::size_t accepted_points = 0;
};

struct ShadowBuild {
  Dataset data;
  ShadowProvenance provenance;
};

// Builds D' until it holds at least target_size rows.
ShadowBuild BuildShadowDataset(TargetApi& api, const FeatureStats& stats,
                               const ShadowGenConfig& cfg, std::uint64_t seed);

void WriteProvenance(const ShadowProvenance& p, std::ostream& out);
// Writes `<stem>.data` (dataset format) and `<stem>.provenance.json`.
void SaveShadowBuild(const ShadowBuild& b, const std::filesystem::path& stem);

}  // namespace membrinf

#endif  // MEMBRINF_SHADOWGEN_H_
