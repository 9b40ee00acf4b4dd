#include "membrinf/shadowgen.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>

#include "json.hpp"

namespace membrinf {
namespace {

double SampleDescriptor(const FeatureDescriptor& f, Rng& rng) {
  if (f.kind == FeatureKind::kCategorical && !f.frequencies.empty()) {
    double r = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    double last = f.frequencies.begin()->first;
    for (const auto& [value, freq] : f.frequencies) {
      last = value;
      r -= freq;
      if (r < 0.0) return value;
    }
    return last;
  }
  if (f.stddev <= 0.0) return std::clamp(f.mean, 0.0, 1.0);
  return std::clamp(std::normal_distribution<double>(f.mean, f.stddev)(rng), 0.0,
                    1.0);
}

int SampleLabel(const FeatureStats& stats, Rng& rng) {
  std::discrete_distribution<int> prior(stats.class_prior.begin(),
                                        stats.class_prior.end());
  return prior(rng);
}

void RequireStats(const FeatureStats& stats) {
  if (stats.features.empty()) throw ArgumentError("feature stats are empty");
  if (stats.class_prior.empty()) throw ArgumentError("feature stats lack a class prior");
}

}  // namespace

ProbabilityVector QueryBudget::Query(TargetApi& api, FeatureView x) {
  if (exhausted()) {
    BudgetExhausted e("query budget of " + std::to_string(limit_) + " exhausted");
    e.queries_spent = spent_;
    throw e;
  }
  ++spent_;
  return api.Query(x);
}

std::string_view ShadowTechniqueName(ShadowTechnique t) {
  switch (t) {
    case ShadowTechnique::kStatistics: return "Statistics";
    case ShadowTechnique::kQuery: return "Query";
    case ShadowTechnique::kRegion: return "Region";
    case ShadowTechnique::kQueryPlusRegion: return "QueryPlusRegion";
  }
  return "?";
}

ShadowTechnique ParseShadowTechnique(std::string_view name) {
  for (auto t : {ShadowTechnique::kStatistics, ShadowTechnique::kQuery,
                 ShadowTechnique::kRegion, ShadowTechnique::kQueryPlusRegion}) {
    if (ShadowTechniqueName(t) == name) return t;
  }
  throw ArgumentError("unknown shadow technique '" + std::string(name) + "'");
}

void ShadowGenConfig::Validate(int k) const {
  if (!(confidence_threshold > 1.0 / k && confidence_threshold <= 1.0)) {
    throw ArgumentError("confidence threshold must lie in (1/k, 1]");
  }
  if (max_updates < 1) throw ArgumentError("max_updates must be >= 1");
  if (!(region_radius > 0.0 && region_radius < 1.0)) {
    throw ArgumentError("region radius must lie in (0,1)");
  }
  if (samples_per_region < 0) throw ArgumentError("samples_per_region must be >= 0");
  if (target_size < 1) throw ArgumentError("target size must be >= 1");
  if (query_budget < 1) throw ArgumentError("query budget must be >= 1");
}

ProbeResult ProbeStructure(TargetApi& api, const FeatureStats& stats,
                           QueryBudget& budget, std::uint64_t seed, int probes) {
  RequireStats(stats);
  Rng rng(seed);
  ProbeResult res;
  res.m = stats.m();
  for (int i = 0; i < std::max(probes, 1); ++i) {
    const auto x = SampleFeatures(stats, rng);
    const auto p = budget.Query(api, x);
    const int arity = static_cast<int>(p.size());
    if (i > 0 && arity != res.k) {
      throw ProtocolError("inconsistent response arity: " + std::to_string(res.k) +
                          " then " + std::to_string(arity));
    }
    res.k = arity;
  }
  return res;
}

FeatureVector SampleFeatures(const FeatureStats& stats, Rng& rng,
                             std::optional<int> label) {
  const bool conditional =
      label && static_cast<std::size_t>(*label) < stats.per_class.size();
  const auto& desc =
      conditional ? stats.per_class[static_cast<std::size_t>(*label)] : stats.features;
  FeatureVector x(desc.size());
  for (std::size_t j = 0; j < desc.size(); ++j) x[j] = SampleDescriptor(desc[j], rng);
  return x;
}

Dataset GenStatisticsBased(const FeatureStats& stats, std::size_t n,
                           std::uint64_t seed) {
  RequireStats(stats);
  Rng rng(seed);
  std::vector<FeatureKind> kinds;
  for (const auto& f : stats.features) kinds.push_back(f.kind);
  Dataset d(stats.m(), stats.k(), kinds);
  d.Reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int y = SampleLabel(stats, rng);
    d.Add(SampleFeatures(stats, rng, y), y);
  }
  return d;
}

AcceptedPoint GenQueryBased(TargetApi& api, const FeatureStats& stats,
                            const ShadowGenConfig& cfg, QueryBudget& budget,
                            std::uint64_t seed) {
  RequireStats(stats);
  Rng rng(seed);
  const std::size_t m = stats.m();
  const std::size_t resample =
      std::max<std::size_t>(1, (m + 3) / 4);  // ceil(m/4)
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);

  std::optional<FeatureVector> best_x;
  std::optional<ProbabilityVector> best_p;
  try {
    for (;;) {
      FeatureVector x = SampleFeatures(stats, rng);
      for (int update = 0; update < cfg.max_updates; ++update) {
        ProbabilityVector p = budget.Query(api, x);
        if (!best_p || p.Max() > best_p->Max()) {
          best_x = x;
          best_p = p;
        }
        if (p.Max() >= cfg.confidence_threshold) {
          const int label = p.Argmax();
          return {std::move(x), std::move(p), label};
        }
        // Resample a random ceil(m/4)-subset of features.
        std::shuffle(order.begin(), order.end(), rng);
        const FeatureVector fresh = SampleFeatures(stats, rng);
        for (std::size_t t = 0; t < resample; ++t) x[order[t]] = fresh[order[t]];
      }
    }
  } catch (BudgetExhausted& e) {
    e.best_point = best_x;
    e.best_response = best_p;
    throw;
  }
}

Dataset GenRegionBased(const FeatureVector& center, int label, int k,
                       const ShadowGenConfig& cfg, std::uint64_t seed) {
  if (!(cfg.region_radius > 0.0 && cfg.region_radius < 1.0)) {
    throw ArgumentError("region radius must lie in (0,1)");
  }
  Rng rng(seed);
  Dataset d(center.size(), k);
  d.Reserve(static_cast<std::size_t>(cfg.samples_per_region) + 1);
  d.Add(center, label);
  FeatureVector x(center.size());
  for (int s = 0; s < cfg.samples_per_region; ++s) {
    for (std::size_t j = 0; j < center.size(); ++j) {
      const double lo = std::max(0.0, center[j] - cfg.region_radius);
      const double hi = std::min(1.0, center[j] + cfg.region_radius);
      x[j] = lo < hi ? std::uniform_real_distribution<double>(lo, hi)(rng) : lo;
    }
    d.Add(x, label);
  }
  return d;
}

ShadowBuild BuildShadowDataset(TargetApi& api, const FeatureStats& stats,
                               const ShadowGenConfig& cfg, std::uint64_t seed) {
  RequireStats(stats);
  const int k = api.k();
  cfg.Validate(k);
  if (stats.m() != api.m()) {
    throw ArgumentError("feature stats describe " + std::to_string(stats.m()) +
                        " features, target expects " + std::to_string(api.m()));
  }
  ShadowBuild out;
  out.provenance = {cfg.technique,      cfg.confidence_threshold,
                    cfg.region_radius,  cfg.max_updates,
                    cfg.samples_per_region, 0,
                    seed,               0};

  if (cfg.technique == ShadowTechnique::kStatistics) {
    out.data = GenStatisticsBased(stats, cfg.target_size, seed);
    if (out.data.k() != k) {
      throw ArgumentError("class prior length disagrees with target class count");
    }
    return out;
  }

  std::vector<FeatureKind> kinds;
  for (const auto& f : stats.features) kinds.push_back(f.kind);
  out.data = Dataset(stats.m(), k, kinds);
  QueryBudget budget(cfg.query_budget);
  Rng rng(seed);
  std::uint64_t round = 0;
  try {
    while (out.data.size() < cfg.target_size) {
      const std::uint64_t round_seed = DeriveSeed(seed, {round++});
      FeatureVector center;
      int label = 0;
      if (cfg.technique == ShadowTechnique::kRegion) {
        center = SampleFeatures(stats, rng);
        label = budget.Query(api, center).Argmax();
      } else {
        AcceptedPoint a = GenQueryBased(api, stats, cfg, budget, round_seed);
        center = std::move(a.x);
        label = a.label;
      }
      ++out.provenance.accepted_points;
      if (cfg.technique == ShadowTechnique::kQuery) {
        out.data.Add(center, label);
        continue;
      }
      const Dataset region =
          GenRegionBased(center, label, k, cfg, DeriveSeed(round_seed, {1}));
      for (std::size_t i = 0; i < region.size() && out.data.size() < cfg.target_size;
           ++i) {
        out.data.Add(region.row(i), region.label(i));
      }
    }
  } catch (BudgetExhausted& e) {
    e.partial = out.data;
    e.queries_spent = budget.spent();
    throw;
  }
  out.provenance.queries_spent = budget.spent();
  return out;
}

void WriteProvenance(const ShadowProvenance& p, std::ostream& out) {
  nlohmann::json j;
  j["technique"] = std::string(ShadowTechniqueName(p.technique));
  j["tau"] = p.confidence_threshold;
  j["delta"] = p.region_radius;
  j["r"] = p.max_updates;
  j["s"] = p.samples_per_region;
  j["queries_spent"] = p.queries_spent;
  j["accepted_points"] = p.accepted_points;
  j["seed"] = p.seed;
  out << j.dump(2) << '\n';
}

void SaveShadowBuild(const ShadowBuild& b, const std::filesystem::path& stem) {
  SaveDataset(b.data, stem.string() + ".data");
  std::ofstream out(stem.string() + ".provenance.json");
  if (!out) throw Error("cannot write provenance for " + stem.string());
  WriteProvenance(b.provenance, out);
}

}  // namespace membrinf
