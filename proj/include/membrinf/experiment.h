#ifndef MEMBRINF_EXPERIMENT_H_
#define MEMBRINF_EXPERIMENT_H_

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "membrinf/federation.h"
#include "membrinf/mitigation.h"
#include "membrinf/pipeline.h"

namespace membrinf {

enum class ExperimentKind {
  kMatrixSweep,
  kDataDriven,
  kTargetNoiseSweep,
  kShadowNoiseSweep,
  kShadowSizeSweep,
  kInsider,
  kHeterogeneitySweep,
  kMitigation,
  kMaxCombo,
};

std::string_view ExperimentKindName(ExperimentKind kind);
ExperimentKind ParseExperimentKind(std::string_view name);

struct MitigationPolicySpec {
  std::string name;
  double parameter = 0.0;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kMatrixSweep;
  std::string name;  // file stem; defaults to the kind in kebab case
  std::uint64_t seed = 0;
  int workers = 1;
  std::filesystem::path output_dir = "out";
  Protocol protocol;
  DataSpec data;

  std::vector<ModelKind> targets{ModelKind::kDecisionTree};
  std::vector<ModelKind> generators{ModelKind::kDecisionTree};
  std::vector<ModelKind> attacks{ModelKind::kDecisionTree};
  TrainConfig train;         // target and generator models
  TrainConfig attack_train;  // attack models
  int partitions = 2;
  AttackMode mode = AttackMode::kGlobal;
  ShadowSource shadow_source = ShadowSource::kDisjoint;
  ShadowGenConfig shadowgen;
  std::size_t shadow_size = 0;

  // Sweep axis for noise, shadow-size and heterogeneity experiments.
  std::vector<double> sweep;
  std::vector<int> k_values;
  std::vector<double> sigma_values;

  int parties = 3;
  std::size_t insider = 0;
  std::size_t probes_per_party = 100;
  double knob = 0.8;

  std::vector<MitigationPolicySpec> policies;
  std::vector<double> l2_grid;

  ExperimentConfig();
};

// JSON config with nested sections; unknown keys are rejected.
ExperimentConfig ParseConfig(const std::string& text);
ExperimentConfig LoadConfig(const std::filesystem::path& path);
// Throws ConfigError describing the first problem.
void ValidateConfig(const ExperimentConfig& cfg);
// Canonical JSON of the effective configuration; its hash names reports.
std::string CanonicalConfig(const ExperimentConfig& cfg);
std::string ConfigHash(const ExperimentConfig& cfg);

// Seeds for the data splits and for the trials. Every cell of an experiment
// shares them, so a 1x1x1 matrix equals a direct pipeline run.
std::uint64_t ExperimentDataSeed(const ExperimentConfig& cfg);
std::uint64_t ExperimentPipelineSeed(const ExperimentConfig& cfg);

PipelineConfig MakePipelineConfig(const ExperimentConfig& cfg, ModelKind target,
                                  ModelKind generator, ModelKind attack);

// ---------------------------------------------------------------------------
// Reports.

struct ReportCell {
  std::vector<std::pair<std::string, std::string>> coords;
  std::vector<std::pair<std::string, double>> metrics;
  std::string error;  // empty when the cell succeeded

  std::optional<double> metric(std::string_view key) const;
  std::optional<std::string> coord(std::string_view key) const;
};

struct PlotSpec {
  std::string x;                    // coordinate holding the x value
  std::string y;                    // metric plotted
  std::vector<std::string> series;  // coordinates joined into the series name
};

struct Report {
  std::string experiment;
  std::string config_hash;
  std::string version;
  std::uint64_t seed = 0;
  std::vector<std::string> notes;
  std::vector<ReportCell> cells;
  std::vector<std::pair<std::string, double>> summary;
  PlotSpec plot;

  std::size_t FailedCells() const;
};

enum class ReportFormat { kCsv, kJsonl, kPlotData, kSummary };

std::string RenderReport(const Report& report, ReportFormat format);
// Writes every format into `dir` as {experiment}-{hash}.{csv,jsonl,plot.csv,
// summary.json}; returns the paths written.
std::vector<std::filesystem::path> EmitReport(const Report& report,
                                              const std::filesystem::path& dir);
// Empty when the file carries a config hash and library version in the
// expected places; otherwise the problems found.
std::vector<std::string> ValidateReportFile(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Analyses.

// Accuracy grid indexed [target][generator][attack].
struct MatrixGrid {
  std::vector<std::string> targets, generators, attacks;
  std::vector<std::optional<double>> values;

  MatrixGrid() = default;
  MatrixGrid(std::vector<std::string> t, std::vector<std::string> g,
             std::vector<std::string> a);
  std::optional<double>& at(std::size_t t, std::size_t g, std::size_t a);
  const std::optional<double>& at(std::size_t t, std::size_t g, std::size_t a) const;
};

struct FixedStddev {
  double target = 0.0;
  double generator = 0.0;
  double attack = 0.0;
};

// For each axis: population std over the cells sharing one value of that
// axis, averaged over its values. Throws listing missing cells.
FixedStddev FixedModelStddev(const MatrixGrid& grid);

// Published CIFAR-10 accuracy grid (fractions), rows DT, kNN, LR, NB on
// every axis.
MatrixGrid CifarReferenceGrid();

struct ComboRow {
  std::string label;
  std::size_t t = 0, g = 0, a = 0;
  double accuracy = 0.0;
  double delta = 0.0;  // accuracy minus the maximum
};

// The best cell, then the three all-same-kind cells for the kinds in it.
std::vector<ComboRow> MaxCombo(const MatrixGrid& grid);

// Spearman rank correlation with average ranks for ties.
double Spearman(std::span<const double> x, std::span<const double> y);

// ---------------------------------------------------------------------------
// Runners.

Report RunExperiment(const ExperimentConfig& cfg);

Report RunMatrix(const ExperimentConfig& cfg);
Report RunDataDriven(const ExperimentConfig& cfg);
Report RunKnowledgeSweep(const ExperimentConfig& cfg);
Report RunInsider(const ExperimentConfig& cfg);
Report RunHeterogeneity(const ExperimentConfig& cfg);
Report RunMitigation(const ExperimentConfig& cfg);
Report RunMaxCombo(const ExperimentConfig& cfg);

// Grid view over a matrix report's mean accuracies.
MatrixGrid GridFromReport(const Report& report);

}  // namespace membrinf

#endif  // MEMBRINF_EXPERIMENT_H_
