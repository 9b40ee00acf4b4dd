#ifndef MEMBRINF_ATTACK_H_
#define MEMBRINF_ATTACK_H_

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "membrinf/datakit.h"
#include "membrinf/models.h"
#include "membrinf/shadowgen.h"

namespace membrinf {

enum class Membership { kOut = 0, kIn = 1 };

struct AttackInstance {
  ProbabilityVector probs;
  Membership membership = Membership::kOut;
  int shadow_label = 0;
};

struct AttackTrainSet {
  int k = 0;
  int partitions = 0;
  std::vector<AttackInstance> instances;
  std::vector<std::string> warnings;

  std::size_t CountIn() const;
  std::size_t CountOut() const { return instances.size() - CountIn(); }
};

enum class AttackMode { kGlobal, kPerClass };

std::string_view AttackModeName(AttackMode mode);
AttackMode ParseAttackMode(std::string_view name);

// Post-processing applied to every generator response while D* is built, so
// the attacker sees what a hardened API would return.
using ResponseTransform = std::function<ProbabilityVector(const ProbabilityVector&)>;

// Splits D' 50/50 (stratified) into a generator pool and D'_test, trains one
// generator per partition of the pool, and labels IN/OUT responses. Each
// partition contributes min(|partition|, |D'_test|) IN rows and the same
// number of OUT rows sampled from D'_test.
AttackTrainSet BuildAttackSet(const Dataset& shadow, int partitions,
                              ModelKind gen_kind, const TrainConfig& gen_cfg,
                              std::uint64_t seed,
                              const ResponseTransform& transform = {});

// Randomly permutes membership tags; IN/OUT counts are preserved.
void ShuffleMembership(AttackTrainSet& set, std::uint64_t seed);

// Attack-model input for one response. Global mode: the probability of the
// record's label followed by the remaining entries sorted descending (the
// argmax stands in when the label is unknown). Per-class mode: raw vector.
FeatureVector AttackFeatures(const ProbabilityVector& p, std::optional<int> label,
                             AttackMode mode);

class AttackModel {
 public:
  AttackModel(AttackMode mode, int k, std::optional<Classifier> global,
              std::vector<std::optional<Classifier>> per_class,
              std::vector<std::string> warnings)
      : mode_(mode),
        k_(k),
        global_(std::move(global)),
        per_class_(std::move(per_class)),
        warnings_(std::move(warnings)) {}

  AttackMode mode() const { return mode_; }
  int k() const { return k_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  // Probability that the record behind response `p` was a training member.
  double InProbability(const ProbabilityVector& p, std::optional<int> label) const;

 private:
  AttackMode mode_;
  int k_;
  std::optional<Classifier> global_;
  std::vector<std::optional<Classifier>> per_class_;
  std::vector<std::string> warnings_;
};

// Classes with fewer than this many IN or OUT rows fall back to the global
// model in per-class mode.
inline constexpr std::size_t kMinPerClassRows = 2;

AttackModel TrainAttackModel(const AttackTrainSet& set, ModelKind kind,
                             const TrainConfig& cfg, AttackMode mode);

struct MembershipDecision {
  Membership membership = Membership::kOut;
  double in_probability = 0.0;
};

// One query to `api`.
MembershipDecision InferMembership(const AttackModel& fa, TargetApi& api,
                                   FeatureView x,
                                   std::optional<int> label = std::nullopt);

struct AttackMetrics {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  // No positive predictions: precision reported as 1.0.
  bool precision_undefined = false;
};

AttackMetrics ComputeMetrics(std::size_t tp, std::size_t fp, std::size_t tn,
                             std::size_t fn);

// Members and non-members must be disjoint and of equal size. Uses each
// record's own label when `use_labels`. Callers that perturb already
// disjoint records pass check_disjoint=false, since noise can make two
// different records collide.
AttackMetrics EvaluateAttack(const AttackModel& fa, TargetApi& api,
                             const Dataset& members, const Dataset& nonmembers,
                             bool use_labels = true, bool check_disjoint = true);

// Header p0..p{k-1},membership,shadow_label with raw response vectors.
void WriteAttackSetCsv(const AttackTrainSet& set, std::ostream& out);
AttackTrainSet ReadAttackSetCsv(std::istream& in);

}  // namespace membrinf

#endif  // MEMBRINF_ATTACK_H_
