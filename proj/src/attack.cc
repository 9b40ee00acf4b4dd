#include "membrinf/attack.h"

#include <algorithm>
#include <charconv>
#include <functional>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_set>

namespace membrinf {
namespace {

std::vector<std::size_t> SampleWithoutReplacement(std::size_t n, std::size_t count,
                                                  Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(std::min(count, n));
  return idx;
}

Dataset AttackDataset(const AttackTrainSet& set,
                      const std::function<bool(const AttackInstance&)>& keep,
                      AttackMode mode) {
  Dataset d(static_cast<std::size_t>(set.k), 2);
  for (const auto& inst : set.instances) {
    if (!keep(inst)) continue;
    d.Add(AttackFeatures(inst.probs, inst.shadow_label, mode),
          static_cast<int>(inst.membership));
  }
  return d;
}

std::string RowKey(FeatureView x, int label) {
  std::string key(reinterpret_cast<const char*>(x.data()), x.size_bytes());
  key.append(reinterpret_cast<const char*>(&label), sizeof(label));
  return key;
}

}  // namespace

std::size_t AttackTrainSet::CountIn() const {
  return static_cast<std::size_t>(
      std::count_if(instances.begin(), instances.end(),
                    [](const auto& i) { return i.membership == Membership::kIn; }));
}

std::string_view AttackModeName(AttackMode mode) {
  return mode == AttackMode::kGlobal ? "Global" : "PerClass";
}

AttackMode ParseAttackMode(std::string_view name) {
  if (name == "Global") return AttackMode::kGlobal;
  if (name == "PerClass") return AttackMode::kPerClass;
  throw ArgumentError("unknown attack mode '" + std::string(name) + "'");
}

AttackTrainSet BuildAttackSet(const Dataset& shadow, int partitions,
                              ModelKind gen_kind, const TrainConfig& gen_cfg,
                              std::uint64_t seed, const ResponseTransform& transform) {
  if (partitions < 1) throw ArgumentError("partition count must be >= 1");
  if (shadow.size() < 2 * static_cast<std::size_t>(partitions)) {
    throw ArgumentError("shadow dataset too small for " + std::to_string(partitions) +
                        " partitions");
  }
  AttackTrainSet set;
  set.k = shadow.k();
  set.partitions = partitions;

  auto [pool, test] = StratifiedHalves(shadow, 0.5, DeriveSeed(seed, {0}));
  std::vector<int> fold =
      StratifiedFoldAssignment(pool, partitions, DeriveSeed(seed, {1}), &set.warnings);
  Rng rng(DeriveSeed(seed, {2}));

  for (int part = 0; part < partitions; ++part) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (fold[i] == part) idx.push_back(i);
    }
    const Dataset train = pool.Subset(idx);
    if (train.ClassesPresent() < 2) {
      throw ArgumentError("partition " + std::to_string(part) +
                          " is too small to train a shadow model");
    }
    const Classifier gen = Fit(gen_kind, gen_cfg, train);
    const std::size_t count = std::min(train.size(), test.size());
    if (count < train.size()) {
      set.warnings.push_back("partition " + std::to_string(part) + " has " +
                             std::to_string(train.size()) + " rows but D'_test only " +
                             std::to_string(test.size()) + "; IN rows capped");
    }

    auto emit = [&](const Dataset& src, std::span<const std::size_t> rows,
                    Membership tag) {
      for (std::size_t r : rows) {
        ProbabilityVector p = gen.PredictProba(src.row(r));
        if (transform) p = transform(p);
        set.instances.push_back({std::move(p), tag, src.label(r)});
      }
    };
    emit(train, SampleWithoutReplacement(train.size(), count, rng), Membership::kIn);
    emit(test, SampleWithoutReplacement(test.size(), count, rng), Membership::kOut);
  }
  return set;
}

void ShuffleMembership(AttackTrainSet& set, std::uint64_t seed) {
  std::vector<Membership> tags;
  tags.reserve(set.instances.size());
  for (const auto& i : set.instances) tags.push_back(i.membership);
  Rng rng(seed);
  std::shuffle(tags.begin(), tags.end(), rng);
  for (std::size_t i = 0; i < tags.size(); ++i) set.instances[i].membership = tags[i];
}

FeatureVector AttackFeatures(const ProbabilityVector& p, std::optional<int> label,
                             AttackMode mode) {
  if (mode == AttackMode::kPerClass) return p.values();
  const int y = label && *label >= 0 && static_cast<std::size_t>(*label) < p.size()
                    ? *label
                    : p.Argmax();
  FeatureVector f;
  f.reserve(p.size());
  f.push_back(p[static_cast<std::size_t>(y)]);
  for (std::size_t c = 0; c < p.size(); ++c) {
    if (static_cast<int>(c) != y) f.push_back(p[c]);
  }
  std::sort(f.begin() + 1, f.end(), std::greater<>());
  return f;
}

double AttackModel::InProbability(const ProbabilityVector& p,
                                  std::optional<int> label) const {
  if (static_cast<int>(p.size()) != k_) {
    throw ArgumentError("response has " + std::to_string(p.size()) +
                        " entries, attack model expects " + std::to_string(k_));
  }
  if (mode_ == AttackMode::kPerClass) {
    const int y = label ? *label : p.Argmax();
    if (y >= 0 && y < k_ && per_class_[static_cast<std::size_t>(y)]) {
      return per_class_[static_cast<std::size_t>(y)]->PredictProba(p.view())[1];
    }
  }
  return global_->PredictProba(AttackFeatures(p, label, AttackMode::kGlobal))[1];
}

AttackModel TrainAttackModel(const AttackTrainSet& set, ModelKind kind,
                             const TrainConfig& cfg, AttackMode mode) {
  if (set.CountIn() == 0 || set.CountOut() == 0) {
    throw ArgumentError("attack training set needs both IN and OUT rows");
  }
  std::vector<std::string> warnings;
  std::vector<std::optional<Classifier>> per_class(static_cast<std::size_t>(set.k));
  bool need_global = mode == AttackMode::kGlobal;

  if (mode == AttackMode::kPerClass) {
    for (int c = 0; c < set.k; ++c) {
      Dataset d = AttackDataset(
          set, [c](const AttackInstance& i) { return i.shadow_label == c; },
          AttackMode::kPerClass);
      const auto counts = d.ClassCounts();
      if (counts[0] < kMinPerClassRows || counts[1] < kMinPerClassRows) {
        warnings.push_back("class " + std::to_string(c) +
                           " has too few attack rows; using the global model");
        need_global = true;
        continue;
      }
      per_class[static_cast<std::size_t>(c)] = Fit(kind, cfg, d);
    }
  }
  std::optional<Classifier> global;
  if (need_global) {
    global = Fit(kind, cfg,
                 AttackDataset(set, [](const AttackInstance&) { return true; },
                               AttackMode::kGlobal));
  }
  return AttackModel(mode, set.k, std::move(global), std::move(per_class),
                     std::move(warnings));
}

MembershipDecision InferMembership(const AttackModel& fa, TargetApi& api,
                                   FeatureView x, std::optional<int> label) {
  const ProbabilityVector p = api.Query(x);
  const double in = fa.InProbability(p, label);
  return {in > 0.5 ? Membership::kIn : Membership::kOut, in};
}

AttackMetrics ComputeMetrics(std::size_t tp, std::size_t fp, std::size_t tn,
                             std::size_t fn) {
  AttackMetrics m{tp, fp, tn, fn};
  const std::size_t total = tp + fp + tn + fn;
  m.accuracy = total ? static_cast<double>(tp + tn) / static_cast<double>(total) : 0.0;
  m.precision_undefined = tp + fp == 0;
  m.precision = m.precision_undefined
                    ? 1.0
                    : static_cast<double>(tp) / static_cast<double>(tp + fp);
  m.recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  return m;
}

AttackMetrics EvaluateAttack(const AttackModel& fa, TargetApi& api,
                             const Dataset& members, const Dataset& nonmembers,
                             bool use_labels, bool check_disjoint) {
  if (members.size() != nonmembers.size()) {
    throw ArgumentError("member and non-member sets differ in size (" +
                        std::to_string(members.size()) + " vs " +
                        std::to_string(nonmembers.size()) + ")");
  }
  if (members.empty()) throw ArgumentError("evaluation sets are empty");
  if (check_disjoint) {
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < members.size(); ++i) {
      seen.insert(RowKey(members.row(i), members.label(i)));
    }
    for (std::size_t i = 0; i < nonmembers.size(); ++i) {
      if (seen.count(RowKey(nonmembers.row(i), nonmembers.label(i)))) {
        throw ArgumentError("member and non-member sets overlap");
      }
    }
  }
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  auto label_of = [&](const Dataset& d, std::size_t i) -> std::optional<int> {
    if (use_labels) return d.label(i);
    return std::nullopt;
  };
  for (std::size_t i = 0; i < members.size(); ++i) {
    const auto d = InferMembership(fa, api, members.row(i), label_of(members, i));
    (d.membership == Membership::kIn ? tp : fn)++;
  }
  for (std::size_t i = 0; i < nonmembers.size(); ++i) {
    const auto d = InferMembership(fa, api, nonmembers.row(i), label_of(nonmembers, i));
    (d.membership == Membership::kIn ? fp : tn)++;
  }
  return ComputeMetrics(tp, fp, tn, fn);
}

void WriteAttackSetCsv(const AttackTrainSet& set, std::ostream& out) {
  std::ostringstream buf;
  buf.precision(17);
  for (int c = 0; c < set.k; ++c) buf << 'p' << c << ',';
  buf << "membership,shadow_label\n";
  for (const auto& inst : set.instances) {
    for (double v : inst.probs) buf << v << ',';
    buf << (inst.membership == Membership::kIn ? "IN" : "OUT") << ','
        << inst.shadow_label << '\n';
  }
  out << buf.str();
}

AttackTrainSet ReadAttackSetCsv(std::istream& in) {
  AttackTrainSet set;
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line)) throw ParseError("missing header", lineno);
  set.k = static_cast<int>(std::count(line.begin(), line.end(), ',')) - 1;
  if (set.k < 1) throw ParseError("malformed header", lineno);
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (cells.size() != static_cast<std::size_t>(set.k) + 2) {
      throw ParseError("expected " + std::to_string(set.k + 2) + " cells", lineno);
    }
    std::vector<double> p(static_cast<std::size_t>(set.k));
    for (int c = 0; c < set.k; ++c) {
      const auto& s = cells[static_cast<std::size_t>(c)];
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), p[static_cast<std::size_t>(c)]);
      if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw ParseError("bad probability '" + s + "'", lineno);
      }
    }
    const auto& tag = cells[static_cast<std::size_t>(set.k)];
    if (tag != "IN" && tag != "OUT") throw ParseError("bad membership '" + tag + "'", lineno);
    int label = 0;
    const auto& ls = cells.back();
    auto [ptr, ec] = std::from_chars(ls.data(), ls.data() + ls.size(), label);
    if (ec != std::errc() || ptr != ls.data() + ls.size()) {
      throw ParseError("bad label '" + ls + "'", lineno);
    }
    set.instances.push_back({ProbabilityVector(std::move(p)),
                             tag == "IN" ? Membership::kIn : Membership::kOut, label});
  }
  return set;
}

}  // namespace membrinf
