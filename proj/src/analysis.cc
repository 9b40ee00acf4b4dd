#include <algorithm>
#include <cmath>
#include <numeric>

#include "membrinf/experiment.h"

namespace membrinf {
namespace {

double PopulationStd(const std::vector<double>& v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

std::vector<double> AverageRanks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> rank(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) rank[order[t]] = r;
    i = j + 1;
  }
  return rank;
}

std::size_t IndexOf(const std::vector<std::string>& axis, const std::string& name,
                    const char* axis_name) {
  auto it = std::find(axis.begin(), axis.end(), name);
  if (it == axis.end()) {
    throw ArgumentError(std::string(axis_name) + " axis has no " + name + " entry");
  }
  return static_cast<std::size_t>(it - axis.begin());
}

}  // namespace

MatrixGrid::MatrixGrid(std::vector<std::string> t, std::vector<std::string> g,
                       std::vector<std::string> a)
    : targets(std::move(t)), generators(std::move(g)), attacks(std::move(a)) {
  values.resize(targets.size() * generators.size() * attacks.size());
}

std::optional<double>& MatrixGrid::at(std::size_t t, std::size_t g, std::size_t a) {
  return values.at((t * generators.size() + g) * attacks.size() + a);
}

const std::optional<double>& MatrixGrid::at(std::size_t t, std::size_t g,
                                            std::size_t a) const {
  return values.at((t * generators.size() + g) * attacks.size() + a);
}

FixedStddev FixedModelStddev(const MatrixGrid& grid) {
  const std::size_t nt = grid.targets.size(), ng = grid.generators.size(),
                    na = grid.attacks.size();
  if (nt == 0 || ng == 0 || na == 0) throw ArgumentError("matrix grid is empty");
  std::string missing;
  for (std::size_t t = 0; t < nt; ++t) {
    for (std::size_t g = 0; g < ng; ++g) {
      for (std::size_t a = 0; a < na; ++a) {
        if (grid.at(t, g, a)) continue;
        if (!missing.empty()) missing += ", ";
        missing += "(" + grid.targets[t] + "," + grid.generators[g] + "," + grid.attacks[a] + ")";
      }
    }
  }
  if (!missing.empty()) throw ArgumentError("matrix grid is missing cells " + missing);

  // axis 0: target, 1: generator, 2: attack.
  auto average_std = [&](int axis) {
    const std::size_t n = axis == 0 ? nt : axis == 1 ? ng : na;
    double sum = 0.0;
    for (std::size_t fixed = 0; fixed < n; ++fixed) {
      std::vector<double> vals;
      for (std::size_t t = 0; t < nt; ++t) {
        for (std::size_t g = 0; g < ng; ++g) {
          for (std::size_t a = 0; a < na; ++a) {
            const std::size_t coord = axis == 0 ? t : axis == 1 ? g : a;
            if (coord == fixed) vals.push_back(*grid.at(t, g, a));
          }
        }
      }
      sum += PopulationStd(vals);
    }
    return sum / static_cast<double>(n);
  };
  return {average_std(0), average_std(1), average_std(2)};
}

MatrixGrid CifarReferenceGrid() {
  const std::vector<std::string> kinds{"DT", "kNN", "LR", "NB"};
  // [attack][target][generator], percent.
  static constexpr double kPercent[4][4][4] = {
      {{90.44, 85.64, 60.48, 65.78},
       {54.92, 69.32, 55.01, 51.38},
       {53.84, 61.06, 61.10, 50.02},
       {50.46, 50.58, 49.98, 50.20}},
      {{89.96, 81.55, 89.07, 61.10},
       {55.33, 68.32, 62.45, 50.89},
       {51.34, 59.58, 64.78, 50.09},
       {50.12, 50.61, 50.46, 50.11}},
      {{90.37, 90.11, 88.81, 66.98},
       {51.72, 69.90, 65.29, 55.64},
       {50.01, 64.34, 67.40, 54.49},
       {50.54, 50.63, 50.60, 50.29}},
      {{90.42, 89.86, 90.52, 63.71},
       {50.33, 68.31, 57.65, 53.08},
       {50.00, 64.22, 67.63, 53.54},
       {50.58, 50.44, 50.58, 50.01}},
  };
  MatrixGrid grid(kinds, kinds, kinds);
  for (std::size_t a = 0; a < 4; ++a) {
    for (std::size_t t = 0; t < 4; ++t) {
      for (std::size_t g = 0; g < 4; ++g) grid.at(t, g, a) = kPercent[a][t][g] / 100.0;
    }
  }
  return grid;
}

std::vector<ComboRow> MaxCombo(const MatrixGrid& grid) {
  std::optional<ComboRow> best;
  for (std::size_t t = 0; t < grid.targets.size(); ++t) {
    for (std::size_t g = 0; g < grid.generators.size(); ++g) {
      for (std::size_t a = 0; a < grid.attacks.size(); ++a) {
        const auto& v = grid.at(t, g, a);
        if (v && (!best || *v > best->accuracy)) best = ComboRow{"max", t, g, a, *v, 0.0};
      }
    }
  }
  if (!best) throw ArgumentError("matrix grid has no values");
  std::vector<ComboRow> rows{*best};
  auto same_kind = [&](const std::string& label, const std::string& kind) {
    const std::size_t t = IndexOf(grid.targets, kind, "target");
    const std::size_t g = IndexOf(grid.generators, kind, "generator");
    const std::size_t a = IndexOf(grid.attacks, kind, "attack");
    const auto& v = grid.at(t, g, a);
    if (!v) throw ArgumentError("matrix grid is missing the all-" + kind + " cell");
    rows.push_back({label, t, g, a, *v, *v - best->accuracy});
  };
  same_kind("all=" + grid.targets[best->t] + " (target kind)", grid.targets[best->t]);
  same_kind("all=" + grid.generators[best->g] + " (generator kind)",
            grid.generators[best->g]);
  same_kind("all=" + grid.attacks[best->a] + " (attack kind)", grid.attacks[best->a]);
  return rows;
}

double Spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ArgumentError("Spearman needs equal-length inputs");
  if (x.size() < 2) throw ArgumentError("Spearman needs at least 2 points");
  const auto rx = AverageRanks(x), ry = AverageRanks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;  // a constant input has no ordering
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace membrinf
