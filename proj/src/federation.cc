#include "membrinf/federation.h"

#include <algorithm>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_set>

namespace membrinf {
namespace {

std::string RowKey(FeatureView x, int label) {
  std::string key(reinterpret_cast<const char*>(x.data()), x.size_bytes());
  key.append(reinterpret_cast<const char*>(&label), sizeof(label));
  return key;
}

}  // namespace

Federation::Federation(std::vector<Dataset> parts, ModelKind kind,
                       const TrainConfig& cfg)
    : parts_(std::move(parts)) {
  if (parts_.size() < 2) throw ArgumentError("a federation needs at least 2 parties");
  std::unordered_set<std::string> seen;
  for (std::size_t p = 0; p < parts_.size(); ++p) {
    const Dataset& d = parts_[p];
    if (d.m() != parts_[0].m() || d.k() != parts_[0].k()) {
      throw ArgumentError("party " + std::to_string(p) + " disagrees on m or k");
    }
    std::unordered_set<std::string> own;
    for (std::size_t i = 0; i < d.size(); ++i) {
      auto key = RowKey(d.row(i), d.label(i));
      if (seen.count(key)) {
        throw ArgumentError("party " + std::to_string(p) +
                            " shares an instance with an earlier party");
      }
      own.insert(std::move(key));
    }
    seen.merge(own);
  }
  models_.reserve(parts_.size());
  for (const auto& d : parts_) models_.push_back(Fit(kind, cfg, d));
}

ProbabilityVector Federation::Predict(FeatureView x) const {
  std::vector<double> sum(static_cast<std::size_t>(k()), 0.0);
  for (const auto& model : models_) {
    const auto p = model.PredictProba(x);
    for (std::size_t c = 0; c < sum.size(); ++c) sum[c] += p[c];
  }
  for (double& v : sum) v /= static_cast<double>(models_.size());
  return ProbabilityVector(std::move(sum));
}

ProbabilityVector Federation::PartyPredict(std::size_t party, FeatureView x) const {
  return models_.at(party).PredictProba(x);
}

FederationInsiderView::FederationInsiderView(const Federation& fed, std::size_t insider)
    : fed_(fed), insider_(insider) {
  if (insider >= fed.parties()) throw ArgumentError("insider index out of range");
}

std::vector<ProbabilityVector> FederationInsiderView::QueryParties(FeatureView x) {
  std::vector<ProbabilityVector> out;
  out.reserve(fed_.parties());
  for (std::size_t p = 0; p < fed_.parties(); ++p) out.push_back(fed_.PartyPredict(p, x));
  return out;
}

std::vector<Attribution> InsiderAttack(InsiderView& view, const Dataset& targets,
                                       const InsiderAttackConfig& cfg) {
  if (view.party_count() < 2) throw ArgumentError("need at least 2 parties");
  const AttackTrainSet dstar = BuildAttackSet(view.own_data(), cfg.partitions,
                                              cfg.gen_kind, cfg.gen_cfg, cfg.seed);
  const AttackModel fa = TrainAttackModel(dstar, cfg.attack_kind, cfg.attack_cfg, cfg.mode);

  std::vector<Attribution> out;
  out.reserve(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const auto vectors = view.QueryParties(targets.row(i));
    Attribution best{0, -1.0};
    for (std::size_t p = 0; p < vectors.size(); ++p) {
      if (p == view.insider_index()) continue;
      const double conf = fa.InProbability(vectors[p], targets.label(i));
      if (conf > best.confidence) best = {p, conf};
    }
    out.push_back(best);
  }
  return out;
}

AttributionMetrics ScoreAttribution(const std::vector<Attribution>& attributions,
                                    const std::vector<std::size_t>& owners) {
  if (attributions.size() != owners.size()) {
    throw ArgumentError("attribution and owner lists differ in length");
  }
  AttributionMetrics m;
  m.count = owners.size();
  if (owners.empty()) return m;
  std::map<std::size_t, std::pair<std::size_t, std::size_t>> per_party;  // correct, total
  std::size_t correct = 0;
  for (std::size_t i = 0; i < owners.size(); ++i) {
    const bool hit = attributions[i].party == owners[i];
    correct += hit;
    auto& [c, t] = per_party[attributions[i].party];
    c += hit;
    ++t;
  }
  m.accuracy = static_cast<double>(correct) / static_cast<double>(owners.size());
  double sum = 0.0;
  for (const auto& [party, ct] : per_party) {
    sum += static_cast<double>(ct.first) / static_cast<double>(ct.second);
  }
  m.precision = sum / static_cast<double>(per_party.size());
  return m;
}

MemberProbes SampleMemberProbes(const Federation& fed, std::size_t insider,
                                std::size_t per_party, std::uint64_t seed) {
  MemberProbes probes;
  probes.instances = fed.party_dataset(0).EmptyLike();
  Rng rng(seed);
  for (std::size_t p = 0; p < fed.parties(); ++p) {
    if (p == insider) continue;
    const Dataset& d = fed.party_dataset(p);
    std::vector<std::size_t> idx(d.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(std::min(per_party, d.size()));
    for (std::size_t i : idx) {
      probes.instances.Add(d.row(i), d.label(i));
      probes.owners.push_back(p);
    }
  }
  return probes;
}

AttackMetrics OutsiderAttack(const Federation& fed, const Dataset& shadow,
                             const Dataset& nonmembers, const InsiderAttackConfig& cfg) {
  const AttackTrainSet dstar =
      BuildAttackSet(shadow, cfg.partitions, cfg.gen_kind, cfg.gen_cfg, cfg.seed);
  const AttackModel fa = TrainAttackModel(dstar, cfg.attack_kind, cfg.attack_cfg, cfg.mode);

  std::vector<std::pair<std::size_t, std::size_t>> rows;
  for (std::size_t p = 0; p < fed.parties(); ++p) {
    for (std::size_t i = 0; i < fed.party_dataset(p).size(); ++i) rows.emplace_back(p, i);
  }
  Rng rng(DeriveSeed(cfg.seed, {Fnv1a("members")}));
  std::shuffle(rows.begin(), rows.end(), rng);
  rows.resize(std::min(rows.size(), nonmembers.size()));
  Dataset members = nonmembers.EmptyLike();
  for (const auto& [p, i] : rows) {
    members.Add(fed.party_dataset(p).row(i), fed.party_dataset(p).label(i));
  }
  Dataset out = nonmembers;
  if (members.size() < out.size()) {
    std::vector<std::size_t> idx(members.size());
    std::iota(idx.begin(), idx.end(), 0);
    out = nonmembers.Subset(idx);
  }
  FederatedApi api(fed);
  return EvaluateAttack(fa, api, members, out);
}

double MeanInterPartyDistance(const std::vector<Dataset>& parts) {
  double total = 0.0;
  int pairs = 0;
  for (std::size_t a = 0; a < parts.size(); ++a) {
    for (std::size_t b = a + 1; b < parts.size(); ++b) {
      bool shared = false;
      const auto ca = parts[a].ClassCounts(), cb = parts[b].ClassCounts();
      for (std::size_t c = 0; c < ca.size(); ++c) shared = shared || (ca[c] && cb[c]);
      if (!shared) continue;
      total += InterPartyInClassDistance(parts[a], parts[b]);
      ++pairs;
    }
  }
  if (pairs == 0) throw ArgumentError("no pair of parties shares a class");
  return total / pairs;
}

std::vector<HeterogeneityPoint> HeterogeneitySweep(const Dataset& base,
                                                   const std::vector<double>& knobs,
                                                   const FederationSetup& setup,
                                                   std::uint64_t seed) {
  std::vector<HeterogeneityPoint> out;
  for (double knob : knobs) {
    auto parts = DisjointPartySplit(base, setup.parties, knob, DeriveSeed(seed, {1}));
    const double distance = MeanInterPartyDistance(parts);
    const Federation fed(std::move(parts), setup.kind, setup.cfg);
    FederationInsiderView view(fed, setup.insider);
    InsiderAttackConfig attack = setup.attack;
    attack.seed = DeriveSeed(seed, {2});
    const MemberProbes probes =
        SampleMemberProbes(fed, setup.insider, setup.probes_per_party, DeriveSeed(seed, {3}));
    const auto metrics =
        ScoreAttribution(InsiderAttack(view, probes.instances, attack), probes.owners);
    out.push_back({knob, distance, metrics.precision, metrics.accuracy, seed});
  }
  return out;
}

void WriteSweepCsv(const std::vector<HeterogeneityPoint>& points, std::ostream& out) {
  std::ostringstream buf;
  buf.precision(17);
  buf << "knob,distance,insider_precision,insider_accuracy,seed\n";
  for (const auto& p : points) {
    buf << p.knob << ',' << p.distance << ',' << p.precision << ',' << p.accuracy << ','
        << p.seed << '\n';
  }
  out << buf.str();
}

}  // namespace membrinf
