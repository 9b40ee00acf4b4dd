#ifndef MEMBRINF_FEDERATION_H_
#define MEMBRINF_FEDERATION_H_

#include <iosfwd>
#include <vector>

#include "membrinf/attack.h"
#include "membrinf/datakit.h"
#include "membrinf/models.h"
#include "membrinf/pipeline.h"

namespace membrinf {

// Prediction-level federation: every party trains on its own data and the
// shared answer is the point-wise mean of the party vectors. Immutable.
class Federation {
 public:
  // Parts must be pairwise disjoint and share m and k; at least 2.
  Federation(std::vector<Dataset> parts, ModelKind kind, const TrainConfig& cfg);

  std::size_t parties() const { return models_.size(); }
  std::size_t m() const { return parts_.front().m(); }
  int k() const { return parts_.front().k(); }

  ProbabilityVector Predict(FeatureView x) const;
  ProbabilityVector PartyPredict(std::size_t party, FeatureView x) const;

  // Simulator-side access; attacker code receives an InsiderView instead.
  const Dataset& party_dataset(std::size_t party) const { return parts_.at(party); }

 private:
  std::vector<Dataset> parts_;
  std::vector<Classifier> models_;
};

// What an insider party can see: its own data and every party's output
// vector for queries it chooses.
class InsiderView {
 public:
  virtual ~InsiderView() = default;
  virtual std::size_t insider_index() const = 0;
  virtual std::size_t party_count() const = 0;
  virtual const Dataset& own_data() const = 0;
  virtual std::vector<ProbabilityVector> QueryParties(FeatureView x) = 0;
};

class FederationInsiderView final : public InsiderView {
 public:
  FederationInsiderView(const Federation& fed, std::size_t insider);

  std::size_t insider_index() const override { return insider_; }
  std::size_t party_count() const override { return fed_.parties(); }
  const Dataset& own_data() const override { return fed_.party_dataset(insider_); }
  std::vector<ProbabilityVector> QueryParties(FeatureView x) override;

 private:
  const Federation& fed_;
  std::size_t insider_;
};

// Service view of the averaged output, for outsider attacks.
class FederatedApi final : public TargetApi {
 public:
  explicit FederatedApi(const Federation& fed) : fed_(fed) {}
  ProbabilityVector Query(FeatureView x) override {
    ++queries_;
    return fed_.Predict(x);
  }
  std::size_t m() const override { return fed_.m(); }
  int k() const override { return fed_.k(); }
  std::uint64_t query_count() const override { return queries_; }

 private:
  const Federation& fed_;
  std::uint64_t queries_ = 0;
};

struct InsiderAttackConfig {
  ModelKind gen_kind = ModelKind::kDecisionTree;
  ModelKind attack_kind = ModelKind::kDecisionTree;
  TrainConfig gen_cfg;
  TrainConfig attack_cfg = DefaultAttackConfig();
  int partitions = 2;
  AttackMode mode = AttackMode::kGlobal;
  std::uint64_t seed = 0;
};

struct Attribution {
  std::size_t party = 0;
  double confidence = 0.0;
};

// Trains an attack model on the insider's own data, scores each target's
// vector from every other party and attributes it to the highest
// IN-probability (lowest party index on ties).
std::vector<Attribution> InsiderAttack(InsiderView& view, const Dataset& targets,
                                       const InsiderAttackConfig& cfg);

struct AttributionMetrics {
  double accuracy = 0.0;
  // Mean over attributed parties of correct / attributed.
  double precision = 0.0;
  std::size_t count = 0;
};

AttributionMetrics ScoreAttribution(const std::vector<Attribution>& attributions,
                                    const std::vector<std::size_t>& owners);

struct MemberProbes {
  Dataset instances;
  std::vector<std::size_t> owners;
};

// `per_party` members sampled from every non-insider party.
MemberProbes SampleMemberProbes(const Federation& fed, std::size_t insider,
                                std::size_t per_party, std::uint64_t seed);

// Standard attack against the averaged output. Members are drawn from the
// union of party datasets, as many as `nonmembers`.
AttackMetrics OutsiderAttack(const Federation& fed, const Dataset& shadow,
                             const Dataset& nonmembers, const InsiderAttackConfig& cfg);

struct FederationSetup {
  int parties = 3;
  ModelKind kind = ModelKind::kDecisionTree;
  TrainConfig cfg;
  InsiderAttackConfig attack;
  std::size_t insider = 0;
  std::size_t probes_per_party = 100;
};

struct HeterogeneityPoint {
  double knob = 0.0;
  double distance = 0.0;  // mean over party pairs
  double precision = 0.0;
  double accuracy = 0.0;
  std::uint64_t seed = 0;
};

// Pairs without a shared class are skipped.
double MeanInterPartyDistance(const std::vector<Dataset>& parts);

// One federation per knob value; the split seed is shared across knobs.
std::vector<HeterogeneityPoint> HeterogeneitySweep(const Dataset& base,
                                                   const std::vector<double>& knobs,
                                                   const FederationSetup& setup,
                                                   std::uint64_t seed);

void WriteSweepCsv(const std::vector<HeterogeneityPoint>& points, std::ostream& out);

}  // namespace membrinf

#endif  // MEMBRINF_FEDERATION_H_
