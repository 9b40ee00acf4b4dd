// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance            run all twelve
//   acceptance --only 7   run one (ctest runs them this way)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "membrinf/experiment.h"

namespace {

using namespace membrinf;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Fmt(double v, int digits = 3) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string Join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) out += (out.empty() ? "" : " ") + p;
  return out;
}

double Metric(const Report& r, std::size_t cell, const std::string& key) {
  const auto& c = r.cells.at(cell);
  if (!c.error.empty()) throw Error("cell failed: " + c.error);
  return c.metric(key).value();
}

double Summary(const Report& r, const std::string& key) {
  for (const auto& [k, v] : r.summary) {
    if (k == key) return v;
  }
  throw Error("summary lacks " + key);
}

ExperimentConfig Blobs(std::uint64_t seed, std::size_t m, double sigma, int k, std::size_t n,
                       std::size_t n_shadow) {
  ExperimentConfig cfg;
  cfg.seed = seed;
  cfg.data.kind = DataSourceKind::kBlobs;
  cfg.data.m = m;
  cfg.data.sigma = sigma;
  cfg.data.k = k;
  cfg.data.n = n;
  cfg.data.n_shadow = n_shadow;
  cfg.protocol = {5, 1};
  return cfg;
}

ExperimentConfig Purchases(std::uint64_t seed, int k) {
  ExperimentConfig cfg;
  cfg.seed = seed;
  cfg.data.kind = DataSourceKind::kPurchases;
  cfg.data.n = 2000;
  cfg.data.n_shadow = 1000;
  cfg.data.m = 50;
  cfg.data.k = k;
  cfg.protocol = {5, 1};
  return cfg;
}

const std::vector<ModelKind> kKinds = {ModelKind::kDecisionTree, ModelKind::kKnn,
                                       ModelKind::kLogisticRegression, ModelKind::kNaiveBayes};

// ---------------------------------------------------------------------------

Outcome TableSixOracle() {
  const FixedStddev s = FixedModelStddev(CifarReferenceGrid());
  const double want[] = {0.0643, 0.1233, 0.1366};
  const double got[] = {s.target, s.generator, s.attack};
  bool ok = true;
  for (int i = 0; i < 3; ++i) ok = ok && std::fabs(got[i] - want[i]) <= 0.0005;
  return {ok, "fixed-target " + Fmt(s.target, 5) + " fixed-generator " + Fmt(s.generator, 5) +
                  " fixed-attack " + Fmt(s.attack, 5)};
}

Outcome ShuffledMembership() {
  std::vector<std::string> parts;
  bool ok = true;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    ExperimentConfig cfg = Blobs(seed, 10, 0.4, 4, 2000, 1000);
    cfg.protocol = {5, 3};
    const auto data = MakeExperimentData(cfg.data, cfg.protocol, ExperimentDataSeed(cfg));
    auto pcfg = MakePipelineConfig(cfg, ModelKind::kKnn, ModelKind::kKnn, ModelKind::kDecisionTree);
    pcfg.shuffle_membership = true;
    const double acc = RunPipeline(data, pcfg, ExperimentPipelineSeed(cfg)).attack_accuracy.mean;
    ok = ok && std::fabs(acc - 0.5) <= 0.05;
    parts.push_back(Fmt(acc));
  }
  return {ok, "accuracy per seed " + Join(parts)};
}

Outcome ModelOrdering() {
  int good = 0;
  std::vector<std::string> parts;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    ExperimentConfig cfg = Purchases(seed, 20);
    cfg.targets = {ModelKind::kDecisionTree, ModelKind::kNaiveBayes};
    const Report r = RunMatrix(cfg);
    const double dt = Metric(r, 0, "attack_accuracy_mean");
    const double nb = Metric(r, 1, "attack_accuracy_mean");
    good += dt - nb >= 0.10 && nb <= 0.58;
    parts.push_back("DT " + Fmt(dt) + "/NB " + Fmt(nb));
  }
  return {good >= 4, std::to_string(good) + "/5 seeds; " + Join(parts)};
}

Outcome KTrend() {
  int good = 0;
  std::vector<std::string> parts;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    ExperimentConfig cfg = Purchases(seed, 20);
    cfg.kind = ExperimentKind::kDataDriven;
    cfg.k_values = {10, 20, 50};
    const Report r = RunDataDriven(cfg);
    const double a = Metric(r, 0, "attack_accuracy_mean");
    const double b = Metric(r, 1, "attack_accuracy_mean");
    const double c = Metric(r, 2, "attack_accuracy_mean");
    good += a <= b && b <= c;
    parts.push_back(Fmt(a) + "<=" + Fmt(b) + "<=" + Fmt(c));
  }
  return {good >= 4, std::to_string(good) + "/5 seeds monotone; " + Join(parts)};
}

Outcome Transferability() {
  ExperimentConfig cfg = Purchases(1, 20);
  cfg.generators = kKinds;
  cfg.attacks = kKinds;
  const Report r = RunMatrix(cfg);
  int viable = 0;
  double worst = 1.0;
  for (std::size_t i = 0; i < r.cells.size(); ++i) {
    const double acc = Metric(r, i, "attack_accuracy_mean");
    viable += acc >= 0.55;
    worst = std::min(worst, acc);
  }
  return {viable >= 12, std::to_string(viable) + "/16 configurations >= 0.55; lowest " + Fmt(worst)};
}

Outcome FixedTargetDominance() {
  int good = 0;
  std::vector<std::string> parts;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    ExperimentConfig cfg = Blobs(seed, 10, 0.4, 4, 2000, 1000);
    cfg.targets = cfg.generators = cfg.attacks = kKinds;
    const Report r = RunMatrix(cfg);
    const double t = Summary(r, "fixed_target_std");
    const double g = Summary(r, "fixed_generator_std");
    const double a = Summary(r, "fixed_attack_std");
    good += t < g && t < a;
    parts.push_back("t " + Fmt(t) + "/g " + Fmt(g) + "/a " + Fmt(a));
  }
  return {good >= 4, std::to_string(good) + "/5 seeds; " + Join(parts)};
}

// Shared by the two noise criteria.
ExperimentConfig NoiseFixture(std::uint64_t seed, ExperimentKind kind) {
  ExperimentConfig cfg = Blobs(seed, 50, 0.8, 10, 300, 600);
  cfg.kind = kind;
  cfg.targets = cfg.generators = cfg.attacks = {ModelKind::kLogisticRegression};
  cfg.train.logistic.learning_rate = 1.0;
  cfg.train.logistic.epochs = 1000;
  cfg.train.logistic.l2 = 0.0;
  return cfg;
}

constexpr std::uint64_t kNoiseSeeds = 3;

// Mean accuracy curve over the noise seeds.
std::vector<double> NoiseCurve(ExperimentKind kind) {
  std::vector<double> curve;
  for (std::uint64_t seed = 1; seed <= kNoiseSeeds; ++seed) {
    const Report r = RunKnowledgeSweep(NoiseFixture(seed, kind));
    curve.resize(r.cells.size(), 0.0);
    for (std::size_t i = 0; i < r.cells.size(); ++i) {
      curve[i] += Metric(r, i, "attack_accuracy_mean") / kNoiseSeeds;
    }
  }
  return curve;
}

std::vector<double> Sigmas() {
  std::vector<double> s;
  for (int i = 0; i <= 10; ++i) s.push_back(i / 10.0);
  return s;
}

std::string Curve(const std::vector<double>& c) {
  std::vector<std::string> parts;
  for (double v : c) parts.push_back(Fmt(v));
  return Join(parts);
}

Outcome TargetNoiseDecline() {
  const auto curve = NoiseCurve(ExperimentKind::kTargetNoiseSweep);
  const double rho = Spearman(Sigmas(), curve);
  return {rho < -0.7, "rho " + Fmt(rho) + " over seeds 1-3; curve " + Curve(curve)};
}

Outcome ShadowNoiseResilience() {
  const auto target = NoiseCurve(ExperimentKind::kTargetNoiseSweep);
  const auto shadow = NoiseCurve(ExperimentKind::kShadowNoiseSweep);
  const double target_drop = target.front() - target.back();
  const double shadow_drop = shadow.front() - shadow.back();
  return {shadow_drop < 0.5 * target_drop,
          "shadow drop " + Fmt(shadow_drop) + " vs target drop " + Fmt(target_drop) +
              "; shadow curve " + Curve(shadow)};
}

ExperimentConfig FederationFixture(std::uint64_t seed) {
  ExperimentConfig cfg = Blobs(seed, 10, 0.4, 4, 1500, 1000);
  cfg.protocol = {5, 1};
  cfg.parties = 3;
  cfg.insider = 0;
  cfg.probes_per_party = 100;
  cfg.knob = 0.8;
  return cfg;
}

Outcome InsiderBeatsBaseline() {
  double sum = 0.0;
  std::vector<std::string> parts;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    ExperimentConfig cfg = FederationFixture(seed);
    cfg.kind = ExperimentKind::kInsider;
    const Report r = RunInsider(cfg);
    const double p = Metric(r, 0, "insider_precision");
    sum += p;
    parts.push_back(Fmt(p));
  }
  const double mean = sum / 5;
  return {mean >= 0.58, "mean precision " + Fmt(mean) + "; per seed " + Join(parts)};
}

Outcome HeterogeneityTrend() {
  int better = 0;
  bool monotone = true;
  std::vector<std::string> parts;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    ExperimentConfig cfg = FederationFixture(seed);
    cfg.kind = ExperimentKind::kHeterogeneitySweep;
    cfg.sweep = {0.0, 0.25, 0.5, 0.75, 1.0};
    const Report r = RunHeterogeneity(cfg);
    for (std::size_t j = 1; j < r.cells.size(); ++j) {
      monotone = monotone && Metric(r, j - 1, "distance") < Metric(r, j, "distance");
    }
    const double lo = Metric(r, 0, "insider_accuracy");
    const double hi = Metric(r, r.cells.size() - 1, "insider_accuracy");
    better += hi > lo;
    parts.push_back(Fmt(lo) + "->" + Fmt(hi));
  }
  return {better >= 4 && monotone,
          std::to_string(better) + "/5 seeds knob 1 > knob 0; distance " +
              (monotone ? "strictly monotone" : "NOT monotone") + "; " + Join(parts)};
}

Outcome MitigationDirections() {
  int label_only = 0;
  double att0 = 0, att10 = 0, mod0 = 0, mod10 = 0;
  std::vector<std::string> parts;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    ExperimentConfig cfg = NoiseFixture(seed, ExperimentKind::kMitigation);
    // A larger shadow pool steadies the DT attack; at 600 LabelOnly flips direction in 2/5 seeds.
    cfg.data.n_shadow = 1000;
    cfg.attacks = {ModelKind::kDecisionTree};
    cfg.policies = {{"LabelOnly", 0}};
    cfg.l2_grid = {0.0, 10.0};
    const Report r = RunMitigation(cfg);
    const double none = Metric(r, 0, "attack_accuracy");
    const double hard = Metric(r, 1, "attack_accuracy");
    label_only += hard < none;
    att0 += Metric(r, 2, "attack_accuracy") / 5;
    att10 += Metric(r, 3, "attack_accuracy") / 5;
    mod0 += Metric(r, 2, "model_accuracy") / 5;
    mod10 += Metric(r, 3, "model_accuracy") / 5;
    parts.push_back(Fmt(none) + "->" + Fmt(hard));
  }
  const bool l2 = att10 < att0 && mod10 < mod0;
  return {label_only >= 4 && l2,
          "LabelOnly lowers attack in " + std::to_string(label_only) + "/5 (" + Join(parts) +
              "); L2 0 vs 10: attack " + Fmt(att0) + " vs " + Fmt(att10) + ", model " +
              Fmt(mod0) + " vs " + Fmt(mod10)};
}

// Squared distances: sqrt can round two distinct sums together and reorder ties.
std::vector<double> BruteForceKnn(const Dataset& train, FeatureView x, int neighbors) {
  std::vector<std::pair<double, std::size_t>> dist;
  for (std::size_t i = 0; i < train.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) s += (train.row(i)[j] - x[j]) * (train.row(i)[j] - x[j]);
    dist.emplace_back(s, i);
  }
  std::sort(dist.begin(), dist.end());
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(neighbors), dist.size());
  std::vector<double> p(static_cast<std::size_t>(train.k()), 0.0);
  for (std::size_t t = 0; t < n; ++t) p[static_cast<std::size_t>(train.label(dist[t].second))] += 1.0;
  for (double& v : p) v /= static_cast<double>(n);
  return p;
}

Dataset GridSet(std::size_t n, std::size_t m, int k, std::uint64_t seed, int levels) {
  Rng rng(seed);
  std::uniform_int_distribution<int> cell(0, levels);
  std::uniform_real_distribution<double> u(0, 1);
  Dataset d(m, k);
  FeatureVector x(m);
  for (std::size_t i = 0; i < n; ++i) {
    for (double& v : x) v = levels ? cell(rng) / static_cast<double>(levels) : u(rng);
    d.Add(x, static_cast<int>(i % static_cast<std::size_t>(k)));
  }
  return d;
}

Outcome UnitOracles() {
  std::size_t knn_checks = 0, knn_bad = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Dataset train = GridSet(5 + seed % 46, 3, 3, seed, seed % 2 ? 3 : 0);
    const Dataset probe = GridSet(20, 3, 3, seed + 1000, 3);
    for (int neighbors : {1, 2, 3, 5, 9}) {
      TrainConfig cfg;
      cfg.knn.neighbors = neighbors;
      const Classifier c = Fit(ModelKind::kKnn, cfg, train);
      for (std::size_t i = 0; i < probe.size(); ++i, ++knn_checks) {
        knn_bad += c.PredictProba(probe.row(i)).values() != BruteForceKnn(train, probe.row(i), neighbors);
      }
    }
  }

  double worst_rel = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Dataset batch = GridSet(30, 4, 3, seed, 0);
    Rng rng(seed + 99);
    std::normal_distribution<double> n(0, 0.5);
    LogisticWeights w(4, 3);
    for (double& v : w.w) v = n(rng);
    const double l2 = 0.1;
    const auto g = LrGradient(w, batch, l2);
    const double h = 1e-5;
    for (std::size_t i = 0; i < w.w.size(); ++i) {
      LogisticWeights plus = w, minus = w;
      plus.w[i] += h;
      minus.w[i] -= h;
      const double fd = (LrLoss(plus, batch, l2) - LrLoss(minus, batch, l2)) / (2 * h);
      const double scale = std::max(std::fabs(fd), std::fabs(g.w[i]));
      if (scale > 0) worst_rel = std::max(worst_rel, std::fabs(fd - g.w[i]) / scale);
    }
  }

  std::size_t fuzz_bad = 0;
  Rng rng(7);
  std::exponential_distribution<double> e(1.0);
  std::uniform_real_distribution<double> u(0, 1);
  const std::size_t applications = 100000;
  for (std::size_t t = 0; t < applications; ++t) {
    const int k = 2 + static_cast<int>(rng() % 20);
    std::vector<double> raw(static_cast<std::size_t>(k));
    for (double& v : raw) v = e(rng);
    if (t % 5 == 0) raw[1] = raw[0];
    double s = 0;
    for (double v : raw) s += v;
    for (double& v : raw) v /= s;
    const ProbabilityVector p(raw);
    const int top = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(k));
    ProbabilityVector q;
    bool argmax_kept = true;
    switch (t % 3) {
      case 0:
        q = HardenTopK(p, top);
        argmax_kept = q.Argmax() == p.Argmax();
        fuzz_bad += std::count_if(q.begin(), q.end(), [](double v) { return v > 0; }) > top;
        break;
      case 1:
        q = HardenLabelOnly(p);
        argmax_kept = q.Argmax() == p.Argmax();
        break;
      default:
        q = HardenNoise(p, u(rng), rng());
        break;
    }
    fuzz_bad += !IsValidSimplex(q.view()) || q.size() != p.size() || !argmax_kept;
  }

  const bool ok = knn_bad == 0 && worst_rel <= 1e-4 && fuzz_bad == 0;
  return {ok, "kNN " + std::to_string(knn_checks - knn_bad) + "/" + std::to_string(knn_checks) +
                  " exact; LR gradient worst relative error " + Fmt(worst_rel * 1e6, 3) +
                  "e-6; " + std::to_string(applications) + " transforms, " +
                  std::to_string(fuzz_bad) + " violations"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"membrinf acceptance suite"};
  int only = 0;
  app.add_option("--only", only, "run a single criterion")->check(CLI::Range(1, 12));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::function<Outcome()>> criteria = {
      TableSixOracle,      ShuffledMembership,    ModelOrdering,        KTrend,
      Transferability,     FixedTargetDominance,  TargetNoiseDecline,   ShadowNoiseResilience,
      InsiderBeatsBaseline, HeterogeneityTrend,   MitigationDirections, UnitOracles,
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i) + 1;
    if (only && number != only) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = criteria[i]();
    } catch (const std::exception& e) {
      out = {false, std::string("error: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %d: %s (%.1fs) %s\n", number, out.pass ? "PASS" : "FAIL", secs,
                out.detail.c_str());
    std::fflush(stdout);
    failures += !out.pass;
  }
  return failures ? 1 : 0;
}
