#ifndef MEMBRINF_MITIGATION_H_
#define MEMBRINF_MITIGATION_H_

#include <atomic>
#include <iosfwd>
#include <string>
#include <vector>

#include "membrinf/attack.h"
#include "membrinf/models.h"
#include "membrinf/shadowgen.h"

namespace membrinf {

// Keeps the k' largest entries (ties to the lower index), zeroes the rest and
// renormalizes unless `renormalize` is false.
ProbabilityVector HardenTopK(const ProbabilityVector& p, int top_k,
                             bool renormalize = true);

// One-hot at the argmax (lowest index on ties).
ProbabilityVector HardenLabelOnly(const ProbabilityVector& p);

// Adds Laplace(0, scale) to every entry, clips at 0 and renormalizes; falls
// back to uniform when everything clips. Deterministic in `seed`.
ProbabilityVector HardenNoise(const ProbabilityVector& p, double scale,
                              std::uint64_t seed);

struct HardeningPolicy {
  enum class Kind { kNone, kTopK, kLabelOnly, kOutputNoise };

  Kind kind = Kind::kNone;
  int top_k = 1;
  bool renormalize = true;
  double noise_scale = 0.0;
  std::uint64_t seed = 0;

  static HardeningPolicy None() { return {}; }
  static HardeningPolicy TopK(int k, bool renormalize = true) {
    return {Kind::kTopK, k, renormalize, 0.0, 0};
  }
  static HardeningPolicy LabelOnly() { return {Kind::kLabelOnly, 1, true, 0.0, 0}; }
  static HardeningPolicy OutputNoise(double scale, std::uint64_t seed) {
    return {Kind::kOutputNoise, 1, true, scale, seed};
  }

  // "None", "TopK", "LabelOnly", "OutputNoise".
  std::string Name() const;
  // Policy-specific parameter for report rows (k', scale, or 0).
  double Parameter() const;
  void Validate(int k) const;

  // `query_index` feeds the noise seed so repeated queries differ.
  ProbabilityVector Apply(const ProbabilityVector& p, std::uint64_t query_index) const;
};

HardeningPolicy ParseHardeningPolicy(std::string_view name, double parameter,
                                     std::uint64_t seed);

// Wraps a service and post-processes every response with a policy.
class HardenedApi final : public TargetApi {
 public:
  HardenedApi(TargetApi& inner, HardeningPolicy policy);

  ProbabilityVector Query(FeatureView x) override;
  std::size_t m() const override { return inner_.m(); }
  int k() const override { return inner_.k(); }
  std::uint64_t query_count() const override {
    return queries_.load(std::memory_order_relaxed);
  }
  const HardeningPolicy& policy() const { return policy_; }

 private:
  TargetApi& inner_;
  HardeningPolicy policy_;
  std::atomic<std::uint64_t> queries_{0};
};

// Response transform for building D* against a hardened service.
ResponseTransform PolicyTransform(const HardeningPolicy& policy);

struct MitigationRow {
  std::string policy;
  double parameter = 0.0;
  double model_accuracy = 0.0;
  double attack_accuracy = 0.0;
  double utility_delta = 0.0;  // model_accuracy minus the baseline's
};

struct PipelineConfig;
struct ExperimentData;

// Baseline row first, then one row per policy, then one per LR
// regularization strength in `l2_grid` (with no output hardening).
std::vector<MitigationRow> MitigationReport(const ExperimentData& data,
                                            const PipelineConfig& base,
                                            const std::vector<HardeningPolicy>& policies,
                                            const std::vector<double>& l2_grid,
                                            std::uint64_t seed);

void WriteMitigationCsv(const std::vector<MitigationRow>& rows, std::ostream& out);

}  // namespace membrinf

#endif  // MEMBRINF_MITIGATION_H_
