#include "membrinf/mitigation.h"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <ostream>
#include <sstream>

#include "membrinf/pipeline.h"

namespace membrinf {

ProbabilityVector HardenTopK(const ProbabilityVector& p, int top_k, bool renormalize) {
  if (top_k < 1) throw ArgumentError("top-k needs k' >= 1");
  const std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(top_k), p.size());
  std::vector<std::size_t> order(p.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p[a] > p[b]; });
  std::vector<double> out(p.size(), 0.0);
  double sum = 0.0;
  for (std::size_t t = 0; t < keep; ++t) {
    out[order[t]] = p[order[t]];
    sum += p[order[t]];
  }
  if (renormalize) {
    for (std::size_t t = 0; t < keep; ++t) {
      out[order[t]] = sum > 0.0 ? out[order[t]] / sum : 1.0 / static_cast<double>(keep);
    }
  }
  return ProbabilityVector(std::move(out));
}

ProbabilityVector HardenLabelOnly(const ProbabilityVector& p) {
  std::vector<double> out(p.size(), 0.0);
  if (!out.empty()) out[static_cast<std::size_t>(p.Argmax())] = 1.0;
  return ProbabilityVector(std::move(out));
}

ProbabilityVector HardenNoise(const ProbabilityVector& p, double scale,
                              std::uint64_t seed) {
  if (scale < 0.0) throw ArgumentError("noise scale must be >= 0");
  if (scale == 0.0) return p;
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  std::vector<double> out(p.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double v = u(rng);
    const double noise = -scale * std::copysign(1.0, v) * std::log1p(-2.0 * std::abs(v));
    out[i] = std::max(0.0, p[i] + noise);
    sum += out[i];
  }
  for (double& v : out) {
    v = sum > 0.0 ? v / sum : 1.0 / static_cast<double>(out.size());
  }
  return ProbabilityVector(std::move(out));
}

std::string HardeningPolicy::Name() const {
  switch (kind) {
    case Kind::kNone: return "None";
    case Kind::kTopK: return "TopK";
    case Kind::kLabelOnly: return "LabelOnly";
    case Kind::kOutputNoise: return "OutputNoise";
  }
  return "?";
}

double HardeningPolicy::Parameter() const {
  switch (kind) {
    case Kind::kTopK: return top_k;
    case Kind::kOutputNoise: return noise_scale;
    default: return 0.0;
  }
}

void HardeningPolicy::Validate(int k) const {
  if (kind == Kind::kTopK && (top_k < 1 || top_k > k)) {
    throw ArgumentError("top-k must lie in [1, k]");
  }
  if (kind == Kind::kOutputNoise && !(noise_scale >= 0.0)) {
    throw ArgumentError("noise scale must be >= 0");
  }
}

ProbabilityVector HardeningPolicy::Apply(const ProbabilityVector& p,
                                         std::uint64_t query_index) const {
  switch (kind) {
    case Kind::kNone: return p;
    case Kind::kTopK: return HardenTopK(p, top_k, renormalize);
    case Kind::kLabelOnly: return HardenLabelOnly(p);
    case Kind::kOutputNoise:
      return HardenNoise(p, noise_scale, DeriveSeed(seed, {query_index}));
  }
  return p;
}

HardeningPolicy ParseHardeningPolicy(std::string_view name, double parameter,
                                     std::uint64_t seed) {
  if (name == "None") return HardeningPolicy::None();
  if (name == "LabelOnly") return HardeningPolicy::LabelOnly();
  if (name == "TopK") {
    if (parameter < 1 || parameter != std::floor(parameter)) {
      throw ArgumentError("TopK needs an integer parameter >= 1");
    }
    return HardeningPolicy::TopK(static_cast<int>(parameter));
  }
  if (name == "OutputNoise") return HardeningPolicy::OutputNoise(parameter, seed);
  throw ArgumentError("unknown hardening policy '" + std::string(name) + "'");
}

HardenedApi::HardenedApi(TargetApi& inner, HardeningPolicy policy)
    : inner_(inner), policy_(policy) {
  policy_.Validate(inner.k());
}

ProbabilityVector HardenedApi::Query(FeatureView x) {
  const std::uint64_t index = queries_.fetch_add(1, std::memory_order_relaxed);
  return policy_.Apply(inner_.Query(x), index);
}

ResponseTransform PolicyTransform(const HardeningPolicy& policy) {
  if (policy.kind == HardeningPolicy::Kind::kNone) return {};
  auto counter = std::make_shared<std::uint64_t>(0);
  HardeningPolicy shadow_policy = policy;
  shadow_policy.seed = DeriveSeed(policy.seed, {Fnv1a("shadow")});
  return [shadow_policy, counter](const ProbabilityVector& p) {
    return shadow_policy.Apply(p, (*counter)++);
  };
}

std::vector<MitigationRow> MitigationReport(const ExperimentData& data,
                                            const PipelineConfig& base,
                                            const std::vector<HardeningPolicy>& policies,
                                            const std::vector<double>& l2_grid,
                                            std::uint64_t seed) {
  if (!l2_grid.empty() && base.target_kind != ModelKind::kLogisticRegression) {
    throw ArgumentError("regularization grid needs an LR target");
  }
  std::vector<MitigationRow> rows;
  auto add = [&](const std::string& name, double param, PipelineConfig cfg) {
    const PipelineSummary s = RunPipeline(data, cfg, seed);
    MitigationRow r{name, param, s.target_accuracy.mean, s.attack_accuracy.mean, 0.0};
    r.utility_delta = rows.empty() ? 0.0 : r.model_accuracy - rows.front().model_accuracy;
    rows.push_back(r);
  };
  PipelineConfig baseline = base;
  baseline.policy = HardeningPolicy::None();
  add("None", 0.0, baseline);
  for (const auto& p : policies) {
    PipelineConfig cfg = base;
    cfg.policy = p;
    add(p.Name(), p.Parameter(), cfg);
  }
  for (double l2 : l2_grid) {
    PipelineConfig cfg = baseline;
    cfg.target_cfg.logistic.l2 = l2;
    add("L2", l2, cfg);
  }
  return rows;
}

void WriteMitigationCsv(const std::vector<MitigationRow>& rows, std::ostream& out) {
  std::ostringstream buf;
  buf.precision(17);
  buf << "policy,parameter,model_accuracy,attack_accuracy,utility_delta\n";
  for (const auto& r : rows) {
    buf << r.policy << ',' << r.parameter << ',' << r.model_accuracy << ','
        << r.attack_accuracy << ',' << r.utility_delta << '\n';
  }
  out << buf.str();
}

}  // namespace membrinf
