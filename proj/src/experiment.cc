#include "membrinf/experiment.h"

#include <algorithm>
#include <charconv>
#include <functional>
#include <cmath>
#include <mutex>

namespace membrinf {
namespace {

std::string Str(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::uint64_t DataSeed(const ExperimentConfig& cfg) { return ExperimentDataSeed(cfg); }
std::uint64_t PipelineSeed(const ExperimentConfig& cfg) { return ExperimentPipelineSeed(cfg); }

Report NewReport(const ExperimentConfig& cfg) {
  Report r;
  r.experiment = cfg.name;
  r.config_hash = ConfigHash(cfg);
  r.version = std::string(kLibraryVersion);
  r.seed = cfg.seed;
  r.notes.push_back("members are sampled from the target training folds and non-members "
                    "from the held-out fold, in equal numbers");
  r.notes.push_back("the attack model configuration is held fixed across all cells");
  return r;
}

void AddSummary(ReportCell& cell, const PipelineSummary& s) {
  cell.metrics = {
      {"attack_accuracy_mean", s.attack_accuracy.mean},
      {"attack_accuracy_std", s.attack_accuracy.stddev},
      {"precision_mean", s.attack_precision.mean},
      {"precision_std", s.attack_precision.stddev},
      {"recall_mean", s.attack_recall.mean},
      {"recall_std", s.attack_recall.stddev},
      {"target_accuracy_mean", s.target_accuracy.mean},
      {"target_accuracy_std", s.target_accuracy.stddev},
      {"trials", static_cast<double>(s.attack_accuracy.count)},
  };
}

// Runs fn on every cell, recording exceptions in the cell rather than
// aborting the run.
void RunCells(std::vector<ReportCell>& cells, int workers,
              const std::function<void(std::size_t, ReportCell&)>& fn) {
  ParallelFor(cells.size(), workers, [&](std::size_t i) {
    try {
      fn(i, cells[i]);
    } catch (const std::exception& e) {
      cells[i].metrics.clear();
      cells[i].error = e.what();
    }
  });
}

// n rows from the configured source.
Dataset GenerateData(const DataSpec& spec, std::size_t n, std::uint64_t seed) {
  switch (spec.kind) {
    case DataSourceKind::kBlobs: return SynthBlobs(n, spec.m, spec.k, spec.sigma, seed);
    case DataSourceKind::kPurchases:
      return SynthPurchases(n, spec.m, spec.k, seed, spec.purchases);
    case DataSourceKind::kCsv: return LoadCsv(spec.csv_path, spec.csv_schema);
  }
  throw ArgumentError("unknown data source");
}

FederationSetup MakeFederationSetup(const ExperimentConfig& cfg) {
  FederationSetup setup;
  setup.parties = cfg.parties;
  setup.kind = cfg.targets.front();
  setup.cfg = cfg.train;
  setup.insider = cfg.insider;
  setup.probes_per_party = cfg.probes_per_party;
  setup.attack.gen_kind = cfg.generators.front();
  setup.attack.attack_kind = cfg.attacks.front();
  setup.attack.gen_cfg = cfg.train;
  setup.attack.attack_cfg = cfg.attack_train;
  setup.attack.partitions = cfg.partitions;
  setup.attack.mode = cfg.mode;
  return setup;
}

void AddMean(Report& r, const std::string& metric, const std::string& key) {
  double sum = 0.0;
  int count = 0;
  for (const auto& c : r.cells) {
    if (auto v = c.metric(metric)) {
      sum += *v;
      ++count;
    }
  }
  if (count > 0) r.summary.emplace_back(key, sum / count);
}

}  // namespace

std::uint64_t ExperimentDataSeed(const ExperimentConfig& cfg) {
  return DeriveSeed(cfg.seed, {Fnv1a("data")});
}

std::uint64_t ExperimentPipelineSeed(const ExperimentConfig& cfg) {
  return DeriveSeed(cfg.seed, {Fnv1a("pipeline")});
}

Report RunMatrix(const ExperimentConfig& cfg) {
  Report report = NewReport(cfg);
  const ExperimentData data = MakeExperimentData(cfg.data, cfg.protocol, DataSeed(cfg));
  for (const auto& w : data.warnings) report.notes.push_back("warning: " + w);

  struct Coord {
    ModelKind t, g, a;
  };
  std::vector<Coord> coords;
  for (auto t : cfg.targets) {
    for (auto g : cfg.generators) {
      for (auto a : cfg.attacks) coords.push_back({t, g, a});
    }
  }
  report.cells.resize(coords.size());
  for (std::size_t i = 0; i < coords.size(); ++i) {
    report.cells[i].coords = {{"target", std::string(ModelKindName(coords[i].t))},
                              {"generator", std::string(ModelKindName(coords[i].g))},
                              {"attack", std::string(ModelKindName(coords[i].a))}};
  }
  RunCells(report.cells, cfg.workers, [&](std::size_t i, ReportCell& cell) {
    const auto pcfg = MakePipelineConfig(cfg, coords[i].t, coords[i].g, coords[i].a);
    AddSummary(cell, RunPipeline(data, pcfg, PipelineSeed(cfg)));
  });

  if (report.FailedCells() == 0) {
    const FixedStddev s = FixedModelStddev(GridFromReport(report));
    report.summary = {{"fixed_target_std", s.target},
                      {"fixed_generator_std", s.generator},
                      {"fixed_attack_std", s.attack}};
  }
  report.plot = {"generator", "attack_accuracy_mean", {"target", "attack"}};
  return report;
}

MatrixGrid GridFromReport(const Report& report) {
  std::vector<std::string> t, g, a;
  auto add = [](std::vector<std::string>& axis, const std::string& v) {
    if (std::find(axis.begin(), axis.end(), v) == axis.end()) axis.push_back(v);
  };
  for (const auto& c : report.cells) {
    add(t, c.coord("target").value_or(""));
    add(g, c.coord("generator").value_or(""));
    add(a, c.coord("attack").value_or(""));
  }
  MatrixGrid grid(t, g, a);
  auto index = [](const std::vector<std::string>& axis, const std::string& v) {
    return static_cast<std::size_t>(std::find(axis.begin(), axis.end(), v) - axis.begin());
  };
  for (const auto& c : report.cells) {
    grid.at(index(t, c.coord("target").value_or("")),
            index(g, c.coord("generator").value_or("")),
            index(a, c.coord("attack").value_or(""))) = c.metric("attack_accuracy_mean");
  }
  return grid;
}

Report RunDataDriven(const ExperimentConfig& cfg) {
  Report report = NewReport(cfg);
  const bool blobs = cfg.data.kind == DataSourceKind::kBlobs;
  if (cfg.data.kind == DataSourceKind::kCsv) {
    throw ConfigError("DataDriven needs a synthetic data source");
  }
  std::vector<int> ks = cfg.k_values;
  if (ks.empty()) ks = {cfg.data.k};
  std::vector<double> sigmas = cfg.sigma_values;
  if (sigmas.empty() || !blobs) sigmas = {cfg.data.sigma};

  struct Point {
    int k;
    double sigma;
  };
  std::vector<Point> points;
  for (int k : ks) {
    for (double s : sigmas) points.push_back({k, s});
  }
  report.cells.resize(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    report.cells[i].coords = {{"k", std::to_string(points[i].k)}};
    if (blobs) report.cells[i].coords.emplace_back("sigma", Str(points[i].sigma));
  }
  RunCells(report.cells, cfg.workers, [&](std::size_t i, ReportCell& cell) {
    DataSpec spec = cfg.data;
    spec.k = points[i].k;
    spec.sigma = points[i].sigma;
    const ExperimentData data = MakeExperimentData(spec, cfg.protocol, DataSeed(cfg));
    const auto pcfg = MakePipelineConfig(cfg, cfg.targets.front(), cfg.generators.front(),
                                         cfg.attacks.front());
    AddSummary(cell, RunPipeline(data, pcfg, PipelineSeed(cfg)));
    const FoldData& first = data.folds.front();
    const Dataset pool[] = {first.target_train, first.target_test};
    cell.metrics.emplace(cell.metrics.begin(), "in_class_std", InClassStd(Concat(pool)));
  });
  report.plot = {"k", "attack_accuracy_mean", {}};
  if (blobs) report.plot.series = {"sigma"};
  return report;
}

Report RunKnowledgeSweep(const ExperimentConfig& cfg) {
  Report report = NewReport(cfg);
  const bool size_sweep = cfg.kind == ExperimentKind::kShadowSizeSweep;
  std::vector<double> grid = cfg.sweep;
  if (grid.empty()) {
    if (size_sweep) {
      grid = {100, 250, 500, 1000};
    } else {
      for (int i = 0; i <= 10; ++i) grid.push_back(i / 10.0);
    }
  }
  const std::string axis = size_sweep ? "shadow_size" : "sigma";
  if (size_sweep) {
    report.notes.push_back("no noise is added in the shadow-size sweep");
  } else if (cfg.kind == ExperimentKind::kTargetNoiseSweep) {
    report.notes.push_back("noise perturbs only the queried member and non-member rows");
  } else {
    report.notes.push_back("noise perturbs only the shadow rows before shadow training");
  }

  const ExperimentData data = MakeExperimentData(cfg.data, cfg.protocol, DataSeed(cfg));
  for (const auto& w : data.warnings) report.notes.push_back("warning: " + w);
  report.cells.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    report.cells[i].coords = {{axis, size_sweep ? std::to_string(static_cast<long long>(grid[i]))
                                                : Str(grid[i])}};
  }
  RunCells(report.cells, cfg.workers, [&](std::size_t i, ReportCell& cell) {
    auto pcfg = MakePipelineConfig(cfg, cfg.targets.front(), cfg.generators.front(),
                                   cfg.attacks.front());
    switch (cfg.kind) {
      case ExperimentKind::kTargetNoiseSweep: pcfg.target_noise = grid[i]; break;
      case ExperimentKind::kShadowNoiseSweep: pcfg.shadow_noise = grid[i]; break;
      default: pcfg.shadow_size = static_cast<std::size_t>(grid[i]); break;
    }
    AddSummary(cell, RunPipeline(data, pcfg, PipelineSeed(cfg)));
  });

  if (report.FailedCells() == 0 && grid.size() >= 2) {
    std::vector<double> acc;
    for (const auto& c : report.cells) acc.push_back(*c.metric("attack_accuracy_mean"));
    report.summary = {{"spearman_rho", Spearman(grid, acc)},
                      {"total_drop", acc.front() - acc.back()}};
  }
  report.plot = {axis, "attack_accuracy_mean", {}};
  return report;
}

Report RunInsider(const ExperimentConfig& cfg) {
  Report report = NewReport(cfg);
  report.notes.push_back("insider precision is the mean over attributed parties of the "
                         "share of correct attributions");
  const FederationSetup setup = MakeFederationSetup(cfg);
  report.cells.resize(static_cast<std::size_t>(cfg.protocol.runs));
  for (std::size_t r = 0; r < report.cells.size(); ++r) {
    report.cells[r].coords = {{"run", std::to_string(r)}};
  }
  RunCells(report.cells, cfg.workers, [&](std::size_t r, ReportCell& cell) {
    const std::uint64_t seed = DeriveSeed(cfg.seed, {r});
    const Dataset all = GenerateData(cfg.data, cfg.data.n + cfg.data.n_shadow,
                                     DeriveSeed(seed, {0}));
    const double frac = static_cast<double>(cfg.data.n) /
                        static_cast<double>(cfg.data.n + cfg.data.n_shadow);
    const auto [base, pool] = StratifiedHalves(all, frac, DeriveSeed(seed, {1}));
    auto parts = DisjointPartySplit(base, cfg.parties, cfg.knob, DeriveSeed(seed, {2}));
    const double distance = MeanInterPartyDistance(parts);
    const Federation fed(std::move(parts), setup.kind, setup.cfg);

    InsiderAttackConfig attack = setup.attack;
    attack.seed = DeriveSeed(seed, {3});
    FederationInsiderView view(fed, setup.insider);
    const MemberProbes probes =
        SampleMemberProbes(fed, setup.insider, setup.probes_per_party, DeriveSeed(seed, {4}));
    const auto insider =
        ScoreAttribution(InsiderAttack(view, probes.instances, attack), probes.owners);

    const auto [shadow, nonmembers] = StratifiedHalves(pool, 0.5, DeriveSeed(seed, {5}));
    const AttackMetrics outsider = OutsiderAttack(fed, shadow, nonmembers, attack);
    cell.metrics = {{"insider_precision", insider.precision},
                    {"insider_accuracy", insider.accuracy},
                    {"outsider_accuracy", outsider.accuracy},
                    {"outsider_precision", outsider.precision},
                    {"distance", distance},
                    {"probes", static_cast<double>(insider.count)}};
  });
  AddMean(report, "insider_precision", "insider_precision_mean");
  AddMean(report, "insider_accuracy", "insider_accuracy_mean");
  AddMean(report, "outsider_accuracy", "outsider_accuracy_mean");
  report.summary.emplace_back("attribution_chance", 1.0 / (cfg.parties - 1));
  report.plot = {"run", "insider_precision", {}};
  return report;
}

Report RunHeterogeneity(const ExperimentConfig& cfg) {
  Report report = NewReport(cfg);
  std::vector<double> knobs = cfg.sweep;
  if (knobs.empty()) knobs = {0.0, 0.25, 0.5, 0.75, 1.0};
  const FederationSetup setup = MakeFederationSetup(cfg);
  const std::size_t runs = static_cast<std::size_t>(cfg.protocol.runs);

  report.cells.resize(runs * knobs.size());
  for (std::size_t r = 0; r < runs; ++r) {
    for (std::size_t j = 0; j < knobs.size(); ++j) {
      report.cells[r * knobs.size() + j].coords = {{"run", std::to_string(r)},
                                                   {"knob", Str(knobs[j])}};
    }
  }
  // One sweep per run; a failed run marks all of its points.
  std::vector<std::string> run_errors(runs);
  ParallelFor(runs, cfg.workers, [&](std::size_t r) {
    const std::uint64_t seed = DeriveSeed(cfg.seed, {r});
    try {
      const Dataset base = GenerateData(cfg.data, cfg.data.n, DeriveSeed(seed, {0}));
      const auto points = HeterogeneitySweep(base, knobs, setup, seed);
      for (std::size_t j = 0; j < points.size(); ++j) {
        report.cells[r * knobs.size() + j].metrics = {
            {"distance", points[j].distance},
            {"insider_precision", points[j].precision},
            {"insider_accuracy", points[j].accuracy}};
      }
    } catch (const std::exception& e) {
      for (std::size_t j = 0; j < knobs.size(); ++j) {
        report.cells[r * knobs.size() + j].error = e.what();
      }
    }
  });

  for (std::size_t j = 0; j < knobs.size(); ++j) {
    double sum = 0.0;
    int count = 0;
    for (std::size_t r = 0; r < runs; ++r) {
      if (auto v = report.cells[r * knobs.size() + j].metric("insider_accuracy")) {
        sum += *v;
        ++count;
      }
    }
    if (count) report.summary.emplace_back("insider_accuracy_at_" + Str(knobs[j]), sum / count);
  }
  report.plot = {"knob", "insider_accuracy", {"run"}};
  return report;
}

Report RunMitigation(const ExperimentConfig& cfg) {
  Report report = NewReport(cfg);
  std::vector<MitigationPolicySpec> specs = cfg.policies;
  if (specs.empty()) specs = {{"TopK", 1}, {"LabelOnly", 0}, {"OutputNoise", 0.1}};
  const ExperimentData data = MakeExperimentData(cfg.data, cfg.protocol, DataSeed(cfg));
  const auto base = MakePipelineConfig(cfg, cfg.targets.front(), cfg.generators.front(),
                                       cfg.attacks.front());

  struct Row {
    std::string name;
    double parameter;
    PipelineConfig pcfg;
  };
  std::vector<Row> rows{{"None", 0.0, base}};
  for (const auto& s : specs) {
    const HardeningPolicy policy =
        ParseHardeningPolicy(s.name, s.parameter, DeriveSeed(cfg.seed, {Fnv1a("noise")}));
    PipelineConfig p = base;
    p.policy = policy;
    rows.push_back({policy.Name(), policy.Parameter(), p});
  }
  if (!cfg.l2_grid.empty() && base.target_kind != ModelKind::kLogisticRegression) {
    throw ConfigError("mitigation.l2 needs an LR target");
  }
  for (double l2 : cfg.l2_grid) {
    PipelineConfig p = base;
    p.target_cfg.logistic.l2 = l2;
    rows.push_back({"L2", l2, p});
  }

  report.cells.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    report.cells[i].coords = {{"policy", rows[i].name}, {"parameter", Str(rows[i].parameter)}};
  }
  RunCells(report.cells, cfg.workers, [&](std::size_t i, ReportCell& cell) {
    const PipelineSummary s = RunPipeline(data, rows[i].pcfg, PipelineSeed(cfg));
    cell.metrics = {{"model_accuracy", s.target_accuracy.mean},
                    {"attack_accuracy", s.attack_accuracy.mean},
                    {"attack_accuracy_std", s.attack_accuracy.stddev}};
  });
  const auto baseline = report.cells.front().metric("model_accuracy");
  for (auto& cell : report.cells) {
    const auto acc = cell.metric("model_accuracy");
    if (acc && baseline) cell.metrics.emplace_back("utility_delta", *acc - *baseline);
  }
  report.plot = {"policy", "attack_accuracy", {"parameter"}};
  return report;
}

Report RunMaxCombo(const ExperimentConfig& cfg) {
  const Report matrix = RunMatrix(cfg);
  if (matrix.FailedCells() > 0) {
    for (const auto& c : matrix.cells) {
      if (!c.error.empty()) throw Error("matrix cell failed: " + c.error);
    }
  }
  const MatrixGrid grid = GridFromReport(matrix);
  Report report = NewReport(cfg);
  report.summary = matrix.summary;
  for (const auto& row : MaxCombo(grid)) {
    ReportCell cell;
    cell.coords = {{"row", row.label},
                   {"target", grid.targets[row.t]},
                   {"generator", grid.generators[row.g]},
                   {"attack", grid.attacks[row.a]}};
    cell.metrics = {{"attack_accuracy", row.accuracy}, {"delta", row.delta}};
    report.cells.push_back(std::move(cell));
  }
  report.plot = {"row", "attack_accuracy", {}};
  return report;
}

Report RunExperiment(const ExperimentConfig& cfg) {
  switch (cfg.kind) {
    case ExperimentKind::kMatrixSweep: return RunMatrix(cfg);
    case ExperimentKind::kDataDriven: return RunDataDriven(cfg);
    case ExperimentKind::kTargetNoiseSweep:
    case ExperimentKind::kShadowNoiseSweep:
    case ExperimentKind::kShadowSizeSweep: return RunKnowledgeSweep(cfg);
    case ExperimentKind::kInsider: return RunInsider(cfg);
    case ExperimentKind::kHeterogeneitySweep: return RunHeterogeneity(cfg);
    case ExperimentKind::kMitigation: return RunMitigation(cfg);
    case ExperimentKind::kMaxCombo: return RunMaxCombo(cfg);
  }
  throw ArgumentError("unknown experiment kind");
}

}  // namespace membrinf
