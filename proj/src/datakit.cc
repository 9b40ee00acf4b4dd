#include "membrinf/datakit.h"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace membrinf {
namespace {

void Shuffle(std::vector<std::size_t>& v, Rng& rng) {
  std::shuffle(v.begin(), v.end(), rng);
}

std::vector<std::vector<std::size_t>> IndicesByClass(const Dataset& d) {
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(d.k()));
  for (std::size_t i = 0; i < d.size(); ++i) {
    by_class[static_cast<std::size_t>(d.label(i))].push_back(i);
  }
  return by_class;
}

double SquaredDistance(FeatureView a, FeatureView b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double t = a[j] - b[j];
    s += t * t;
  }
  return s;
}

std::string KindName(FeatureKind k) {
  return k == FeatureKind::kContinuous ? "continuous" : "categorical";
}

FeatureKind KindFromName(const std::string& s, std::size_t line) {
  if (s == "continuous") return FeatureKind::kContinuous;
  if (s == "categorical") return FeatureKind::kCategorical;
  throw ParseError("unknown feature kind '" + s + "'", line);
}

// Splits one CSV record, honouring quotes. Consumes extra physical lines when
// a quoted field spans a newline.
bool ReadRecord(std::istream& in, std::vector<std::string>& fields,
                std::size_t& line_no, std::size_t& record_line) {
  fields.clear();
  std::string line;
  if (!std::getline(in, line)) return false;
  ++line_no;
  record_line = line_no;
  std::string field;
  bool quoted = false;
  for (;;) {
    for (std::size_t i = 0; i < line.size(); ++i) {
      const char c = line[i];
      if (quoted) {
        if (c == '"') {
          if (i + 1 < line.size() && line[i + 1] == '"') {
            field.push_back('"');
            ++i;
          } else {
            quoted = false;
          }
        } else {
          field.push_back(c);
        }
      } else if (c == '"') {
        quoted = true;
      } else if (c == ',') {
        fields.push_back(field);
        field.clear();
      } else if (c == '\r' && i + 1 == line.size()) {
        // CRLF line ending.
      } else {
        field.push_back(c);
      }
    }
    if (!quoted) break;
    if (!std::getline(in, line)) {
      throw ParseError("unterminated quoted field", record_line);
    }
    ++line_no;
    field.push_back('\n');
  }
  fields.push_back(field);
  return true;
}

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

}  // namespace

// ---------------------------------------------------------------------------
// Dataset

Dataset::Dataset(std::size_t m, int k)
    : Dataset(m, k, std::vector<FeatureKind>(m, FeatureKind::kContinuous)) {}

Dataset::Dataset(std::size_t m, int k, std::vector<FeatureKind> kinds)
    : m_(m), k_(k), kinds_(std::move(kinds)) {
  if (k < 1) throw ArgumentError("class count must be positive");
  if (kinds_.size() != m_) {
    throw ArgumentError("feature_kinds length does not match m");
  }
}

void Dataset::Add(FeatureView x, int label) {
  if (x.size() != m_) {
    throw ArgumentError("feature vector has length " +
                        std::to_string(x.size()) + ", expected " +
                        std::to_string(m_));
  }
  if (label < 0 || label >= k_) {
    throw ArgumentError("label " + std::to_string(label) + " outside [0," +
                        std::to_string(k_) + ")");
  }
  features_.insert(features_.end(), x.begin(), x.end());
  labels_.push_back(label);
}

void Dataset::Reserve(std::size_t n) {
  features_.reserve(n * m_);
  labels_.reserve(n);
}

Dataset Dataset::Subset(std::span<const std::size_t> idx) const {
  Dataset out = EmptyLike();
  out.Reserve(idx.size());
  for (std::size_t i : idx) out.Add(row(i), label(i));
  return out;
}

Dataset Dataset::EmptyLike() const { return Dataset(m_, k_, kinds_); }

std::vector<std::size_t> Dataset::ClassCounts() const {
  std::vector<std::size_t> counts(static_cast<std::size_t>(k_), 0);
  for (int y : labels_) ++counts[static_cast<std::size_t>(y)];
  return counts;
}

int Dataset::ClassesPresent() const {
  int n = 0;
  for (std::size_t c : ClassCounts()) n += c > 0 ? 1 : 0;
  return n;
}

Dataset Concat(std::span<const Dataset> parts) {
  if (parts.empty()) throw ArgumentError("nothing to concatenate");
  Dataset out = parts.front().EmptyLike();
  for (const Dataset& p : parts) {
    if (p.m() != out.m() || p.k() != out.k()) {
      throw ArgumentError("cannot concatenate datasets with different m/k");
    }
    for (std::size_t i = 0; i < p.size(); ++i) out.Add(p.row(i), p.label(i));
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV

Dataset ParseCsv(std::istream& in, const CsvSchema& schema) {
  std::vector<std::string> header;
  std::size_t line_no = 0;
  std::size_t record_line = 0;
  if (!ReadRecord(in, header, line_no, record_line)) {
    throw ParseError("missing header row", 1);
  }
  for (auto& h : header) h = Trim(h);
  const auto label_it =
      std::find(header.begin(), header.end(), schema.label_column);
  if (label_it == header.end()) {
    throw ParseError("label column '" + schema.label_column + "' not found", 1);
  }
  const std::size_t label_col =
      static_cast<std::size_t>(label_it - header.begin());
  for (const auto& c : schema.categorical_columns) {
    if (std::find(header.begin(), header.end(), c) == header.end()) {
      throw ParseError("categorical column '" + c + "' not found", 1);
    }
  }

  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> row_lines;
  std::vector<std::string> fields;
  while (ReadRecord(in, fields, line_no, record_line)) {
    if (fields.size() == 1 && Trim(fields[0]).empty()) continue;
    if (fields.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) +
                           " fields, found " + std::to_string(fields.size()),
                       record_line);
    }
    for (auto& f : fields) {
      f = Trim(f);
      if (f == "?") throw ParseError("missing value '?'", record_line);
    }
    rows.push_back(fields);
    row_lines.push_back(record_line);
  }

  std::set<std::string> label_values;
  for (const auto& r : rows) label_values.insert(r[label_col]);
  if (label_values.size() < 2) {
    throw ArgumentError("degenerate single-class dataset");
  }
  std::map<std::string, int> label_index;
  for (const auto& v : label_values) {
    label_index.emplace(v, static_cast<int>(label_index.size()));
  }

  struct Column {
    std::size_t source = 0;
    bool categorical = false;
    std::vector<std::string> categories;  // sorted
    double min = 0.0, max = 0.0;
  };
  std::vector<Column> columns;
  std::vector<std::vector<double>> numeric(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c == label_col) continue;
    Column col;
    col.source = c;
    col.categorical = schema.categorical_columns.count(header[c]) > 0;
    if (col.categorical) {
      std::set<std::string> cats;
      for (const auto& r : rows) cats.insert(r[c]);
      col.categories.assign(cats.begin(), cats.end());
    } else {
      auto& vals = numeric[c];
      vals.reserve(rows.size());
      for (std::size_t r = 0; r < rows.size(); ++r) {
        const std::string& s = rows[r][c];
        std::size_t used = 0;
        double v = 0.0;
        try {
          v = std::stod(s, &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (used == 0 || used != s.size() || !std::isfinite(v)) {
          throw ParseError("column '" + header[c] + "': '" + s +
                               "' is not a number",
                           row_lines[r]);
        }
        vals.push_back(v);
      }
      if (!vals.empty()) {
        col.min = *std::min_element(vals.begin(), vals.end());
        col.max = *std::max_element(vals.begin(), vals.end());
      }
    }
    columns.push_back(std::move(col));
  }

  std::vector<FeatureKind> kinds;
  for (const auto& col : columns) {
    if (col.categorical) {
      kinds.insert(kinds.end(), col.categories.size(), FeatureKind::kCategorical);
    } else {
      kinds.push_back(FeatureKind::kContinuous);
    }
  }
  const std::size_t m = kinds.size();
  Dataset out(m, static_cast<int>(label_index.size()), kinds);
  out.Reserve(rows.size());
  FeatureVector x(m);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::size_t j = 0;
    for (const auto& col : columns) {
      if (col.categorical) {
        const auto& v = rows[r][col.source];
        for (const auto& cat : col.categories) x[j++] = (cat == v) ? 1.0 : 0.0;
      } else {
        const double v = numeric[col.source][r];
        const double range = col.max - col.min;
        x[j++] = range > 0.0 ? (v - col.min) / range : 0.0;
      }
    }
    out.Add(x, label_index.at(rows[r][label_col]));
  }
  return out;
}

Dataset LoadCsv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return ParseCsv(in, schema);
}

void WriteDataset(const Dataset& d, std::ostream& out) {
  nlohmann::json header;
  header["m"] = d.m();
  header["k"] = d.k();
  auto kinds = nlohmann::json::array();
  for (auto kind : d.feature_kinds()) kinds.push_back(KindName(kind));
  header["feature_kinds"] = kinds;
  out << header.dump() << '\n';
  out << std::setprecision(17);
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (double v : d.row(i)) out << v << ',';
    out << d.label(i) << '\n';
  }
}

Dataset ReadDataset(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("missing dataset header", 1);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad dataset header: ") + e.what(), 1);
  }
  const std::size_t m = header.at("m").get<std::size_t>();
  const int k = header.at("k").get<int>();
  std::vector<FeatureKind> kinds;
  for (const auto& s : header.at("feature_kinds")) {
    kinds.push_back(KindFromName(s.get<std::string>(), 1));
  }
  Dataset d(m, k, kinds);
  std::size_t line_no = 1;
  FeatureVector x(m);
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    std::size_t j = 0;
    int label = -1;
    while (std::getline(ss, tok, ',')) {
      try {
        if (j < m) {
          x[j] = std::stod(tok);
        } else if (j == m) {
          label = std::stoi(tok);
        }
      } catch (const std::exception&) {
        throw ParseError("bad value '" + tok + "'", line_no);
      }
      ++j;
    }
    if (j != m + 1) throw ParseError("wrong record arity", line_no);
    try {
      d.Add(x, label);
    } catch (const ArgumentError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return d;
}

void SaveDataset(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  WriteDataset(d, out);
}

Dataset LoadDataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return ReadDataset(in);
}

// ---------------------------------------------------------------------------
// Generators

Dataset SynthBlobs(std::size_t n, std::size_t m, int k, double sigma,
                   std::uint64_t seed) {
  if (k < 1 || n < static_cast<std::size_t>(k)) {
    throw ArgumentError("synth_blobs needs n >= k >= 1");
  }
  if (m == 0) throw ArgumentError("synth_blobs needs m >= 1");
  if (!(sigma >= 0.0)) throw ArgumentError("sigma must be non-negative");
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<FeatureVector> centroids(static_cast<std::size_t>(k),
                                       FeatureVector(m));
  for (auto& c : centroids) {
    for (double& v : c) v = unit(rng);
  }
  std::normal_distribution<double> noise(0.0, 1.0);
  Dataset d(m, k);
  d.Reserve(n);
  FeatureVector x(m);
  for (std::size_t i = 0; i < n; ++i) {
    const int y = static_cast<int>(i % static_cast<std::size_t>(k));
    const auto& c = centroids[static_cast<std::size_t>(y)];
    for (std::size_t j = 0; j < m; ++j) {
      x[j] = sigma == 0.0 ? c[j]
                          : std::clamp(c[j] + sigma * noise(rng), 0.0, 1.0);
    }
    d.Add(x, y);
  }
  return d;
}

Dataset SynthPurchases(std::size_t n, std::size_t m, int k, std::uint64_t seed,
                       const PurchaseProfileParams& params) {
  if (k < 2 || static_cast<std::size_t>(k) > n) {
    throw ArgumentError("synth_purchases needs 2 <= k <= n");
  }
  if (m < static_cast<std::size_t>(k)) {
    throw ArgumentError("synth_purchases needs m >= k");
  }
  Rng rng(seed);
  std::uniform_real_distribution<double> base(params.base_rate_low,
                                              params.base_rate_high);
  std::uniform_real_distribution<double> boost(params.boost_low,
                                               params.boost_high);
  std::vector<double> base_rate(m);
  for (double& b : base_rate) b = base(rng);
  const std::size_t favourites = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(params.favourite_fraction *
                                              static_cast<double>(m))));
  std::vector<std::vector<double>> propensity(static_cast<std::size_t>(k));
  std::vector<std::size_t> products(m);
  std::iota(products.begin(), products.end(), 0);
  for (auto& p : propensity) {
    p = base_rate;
    Shuffle(products, rng);
    for (std::size_t f = 0; f < favourites; ++f) {
      p[products[f]] = std::min(1.0, p[products[f]] + boost(rng));
    }
  }

  std::vector<FeatureVector> points(n, FeatureVector(m));
  std::uniform_int_distribution<int> pick_profile(0, k - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (auto& x : points) {
    const auto& p = propensity[static_cast<std::size_t>(pick_profile(rng))];
    for (std::size_t j = 0; j < m; ++j) x[j] = unit(rng) < p[j] ? 1.0 : 0.0;
  }

  for (int attempt = 0; attempt < 10; ++attempt) {
    const KMeansResult km =
        KMeans(points, k, 100, DeriveSeed(seed, {0x6b6d65616e73ULL,
                                                 static_cast<std::uint64_t>(attempt)}));
    std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
    for (int y : km.labels) ++sizes[static_cast<std::size_t>(y)];
    if (std::find(sizes.begin(), sizes.end(), 0) != sizes.end()) continue;
    Dataset d(m, k, std::vector<FeatureKind>(m, FeatureKind::kCategorical));
    d.Reserve(n);
    for (std::size_t i = 0; i < n; ++i) d.Add(points[i], km.labels[i]);
    return d;
  }
  throw Error("k-means left an empty cluster after 10 re-seeds");
}

KMeansResult KMeans(std::span<const FeatureVector> points, int k, int max_iter,
                    std::uint64_t seed) {
  if (points.empty()) throw ArgumentError("k-means on empty input");
  if (k < 1 || static_cast<std::size_t>(k) > points.size()) {
    throw ArgumentError("k-means needs 1 <= k <= point count");
  }
  const std::size_t n = points.size();
  const std::size_t m = points.front().size();
  Rng rng(seed);

  // k-means++ seeding.
  KMeansResult res;
  res.centroids.reserve(static_cast<std::size_t>(k));
  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  res.centroids.push_back(points[first(rng)]);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  while (res.centroids.size() < static_cast<std::size_t>(k)) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], SquaredDistance(points[i], res.centroids.back()));
      total += d2[i];
    }
    std::size_t chosen = 0;
    if (total <= 0.0) {
      chosen = first(rng);
    } else {
      double r = std::uniform_real_distribution<double>(0.0, total)(rng);
      chosen = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        r -= d2[i];
        if (r <= 0.0 && d2[i] > 0.0) {
          chosen = i;
          break;
        }
      }
    }
    res.centroids.push_back(points[chosen]);
  }

  res.labels.assign(n, -1);
  std::vector<FeatureVector> sums(static_cast<std::size_t>(k), FeatureVector(m));
  std::vector<std::size_t> counts(static_cast<std::size_t>(k));
  for (int it = 0; it < max_iter; ++it) {
    bool changed = false;
    double objective = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = SquaredDistance(points[i], res.centroids[0]);
      for (int c = 1; c < k; ++c) {
        const double dc =
            SquaredDistance(points[i], res.centroids[static_cast<std::size_t>(c)]);
        if (dc < best_d) {
          best_d = dc;
          best = c;
        }
      }
      if (res.labels[i] != best) changed = true;
      res.labels[i] = best;
      objective += best_d;
    }
    res.objective.push_back(objective);
    res.iterations = it + 1;
    if (!changed) break;
    for (auto& s : sums) std::fill(s.begin(), s.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto& s = sums[static_cast<std::size_t>(res.labels[i])];
      for (std::size_t j = 0; j < m; ++j) s[j] += points[i][j];
      ++counts[static_cast<std::size_t>(res.labels[i])];
    }
    for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
      if (counts[c] == 0) continue;  // empty cluster keeps its centroid
      for (std::size_t j = 0; j < m; ++j) {
        res.centroids[c][j] = sums[c][j] / static_cast<double>(counts[c]);
      }
    }
  }
  return res;
}

KMeansResult KMeans(const Dataset& d, int k, int max_iter, std::uint64_t seed) {
  std::vector<FeatureVector> pts;
  pts.reserve(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    pts.emplace_back(d.row(i).begin(), d.row(i).end());
  }
  return KMeans(pts, k, max_iter, seed);
}

// ---------------------------------------------------------------------------
// Metrics and noise

double InClassStd(const Dataset& d) {
  if (d.empty()) throw ArgumentError("in_class_std on empty dataset");
  const auto by_class = IndicesByClass(d);
  double total = 0.0;
  int classes = 0;
  for (const auto& idx : by_class) {
    if (idx.empty()) continue;
    double feature_sum = 0.0;
    for (std::size_t j = 0; j < d.m(); ++j) {
      // Shifted by the first value so identical rows give exactly zero.
      const double shift = d.row(idx.front())[j];
      double mean = 0.0;
      for (std::size_t i : idx) mean += d.row(i)[j] - shift;
      mean /= static_cast<double>(idx.size());
      double var = 0.0;
      for (std::size_t i : idx) {
        const double t = d.row(i)[j] - shift - mean;
        var += t * t;
      }
      var /= static_cast<double>(idx.size());
      feature_sum += std::sqrt(var);
    }
    total += d.m() > 0 ? feature_sum / static_cast<double>(d.m()) : 0.0;
    ++classes;
  }
  return total / classes;
}

FeatureVector AddUniformNoise(FeatureView x, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0 && sigma <= 1.0)) {
    throw ArgumentError("noise bound sigma must lie in [0,1]");
  }
  FeatureVector out(x.begin(), x.end());
  if (sigma == 0.0) return out;
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, sigma);
  for (double& v : out) v = std::clamp(v + u(rng), 0.0, 1.0);
  return out;
}

Dataset AddUniformNoise(const Dataset& d, double sigma, std::uint64_t seed) {
  Dataset out = d.EmptyLike();
  out.Reserve(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    out.Add(AddUniformNoise(d.row(i), sigma, DeriveSeed(seed, {i})), d.label(i));
  }
  return out;
}

namespace {

FeatureDescriptor Describe(const Dataset& d, std::span<const std::size_t> idx,
                           std::size_t j) {
  FeatureDescriptor f;
  f.kind = d.feature_kinds()[j];
  if (idx.empty()) return f;
  if (f.kind == FeatureKind::kCategorical) {
    for (std::size_t i : idx) f.frequencies[d.row(i)[j]] += 1.0;
    for (auto& [value, freq] : f.frequencies) {
      freq /= static_cast<double>(idx.size());
    }
  }
  double mean = 0.0;
  f.min = std::numeric_limits<double>::infinity();
  f.max = -std::numeric_limits<double>::infinity();
  for (std::size_t i : idx) {
    const double v = d.row(i)[j];
    mean += v;
    f.min = std::min(f.min, v);
    f.max = std::max(f.max, v);
  }
  mean /= static_cast<double>(idx.size());
  double var = 0.0;
  for (std::size_t i : idx) {
    const double t = d.row(i)[j] - mean;
    var += t * t;
  }
  f.mean = mean;
  f.stddev = std::sqrt(var / static_cast<double>(idx.size()));
  return f;
}

}  // namespace

FeatureStats ComputeFeatureStats(const Dataset& d, bool per_class) {
  if (d.empty()) throw ArgumentError("feature stats of empty dataset");
  FeatureStats s;
  std::vector<std::size_t> all(d.size());
  std::iota(all.begin(), all.end(), 0);
  for (std::size_t j = 0; j < d.m(); ++j) s.features.push_back(Describe(d, all, j));
  const auto counts = d.ClassCounts();
  for (std::size_t c : counts) {
    s.class_prior.push_back(static_cast<double>(c) / static_cast<double>(d.size()));
  }
  if (per_class) {
    const auto by_class = IndicesByClass(d);
    for (const auto& idx : by_class) {
      std::vector<FeatureDescriptor> row;
      for (std::size_t j = 0; j < d.m(); ++j) {
        row.push_back(idx.empty() ? s.features[j] : Describe(d, idx, j));
      }
      s.per_class.push_back(std::move(row));
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// Splitting

std::vector<int> StratifiedFoldAssignment(const Dataset& d, int fold_count,
                                          std::uint64_t seed,
                                          std::vector<std::string>* warnings) {
  Rng rng(seed);
  std::vector<int> fold_ids(static_cast<std::size_t>(fold_count));
  std::iota(fold_ids.begin(), fold_ids.end(), 0);
  std::shuffle(fold_ids.begin(), fold_ids.end(), rng);
  std::vector<int> assignment(d.size(), -1);
  std::size_t counter = 0;
  auto by_class = IndicesByClass(d);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& idx = by_class[c];
    if (idx.empty()) continue;
    if (idx.size() < static_cast<std::size_t>(fold_count) && warnings) {
      warnings->push_back("class " + std::to_string(c) + " has " +
                          std::to_string(idx.size()) + " instances (< " +
                          std::to_string(fold_count) +
                          " folds); not stratified");
    }
    Shuffle(idx, rng);
    for (std::size_t i : idx) {
      assignment[i] = fold_ids[counter++ % static_cast<std::size_t>(fold_count)];
    }
  }
  return assignment;
}

KFoldResult KFoldSplits(const Dataset& d, const SplitPlan& plan) {
  if (plan.fold_count < 2) throw ArgumentError("fold_count must be >= 2");
  if (plan.run_count < 1) throw ArgumentError("run_count must be >= 1");
  if (static_cast<std::size_t>(plan.fold_count) > d.size()) {
    throw ArgumentError("fold_count exceeds instance count");
  }
  KFoldResult res;
  for (int r = 0; r < plan.run_count; ++r) {
    std::vector<std::string>* warn = r == 0 ? &res.warnings : nullptr;
    const auto assignment = StratifiedFoldAssignment(
        d, plan.fold_count, DeriveSeed(plan.seed, {static_cast<std::uint64_t>(r)}),
        warn);
    for (int f = 0; f < plan.fold_count; ++f) {
      std::vector<std::size_t> train, test;
      for (std::size_t i = 0; i < d.size(); ++i) {
        (assignment[i] == f ? test : train).push_back(i);
      }
      res.splits.push_back({r, f, d.Subset(train), d.Subset(test)});
    }
  }
  return res;
}

std::pair<Dataset, Dataset> StratifiedHalves(const Dataset& d,
                                             double first_fraction,
                                             std::uint64_t seed) {
  if (!(first_fraction >= 0.0 && first_fraction <= 1.0)) {
    throw ArgumentError("split fraction must lie in [0,1]");
  }
  Rng rng(seed);
  std::vector<std::size_t> a, b;
  auto by_class = IndicesByClass(d);
  // Per-class floors, then largest remainders, so |a| is exactly
  // round(fraction * n).
  std::vector<std::size_t> take(by_class.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    const double want = first_fraction * static_cast<double>(by_class[c].size());
    take[c] = static_cast<std::size_t>(std::floor(want));
    assigned += take[c];
    remainders.emplace_back(want - static_cast<double>(take[c]), c);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& x, const auto& y) { return x.first > y.first; });
  const auto total = static_cast<std::size_t>(
      std::llround(first_fraction * static_cast<double>(d.size())));
  for (std::size_t t = 0; assigned < total && t < remainders.size(); ++t, ++assigned) {
    ++take[remainders[t].second];
  }
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& idx = by_class[c];
    Shuffle(idx, rng);
    const auto cut = static_cast<std::ptrdiff_t>(take[c]);
    a.insert(a.end(), idx.begin(), idx.begin() + cut);
    b.insert(b.end(), idx.begin() + cut, idx.end());
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return {d.Subset(a), d.Subset(b)};
}

double DirichletConcentration(double heterogeneity) {
  constexpr double kUniform = 100.0;
  constexpr double kSkewed = 0.5;
  return kUniform * std::pow(kSkewed / kUniform, heterogeneity);
}

std::vector<Dataset> DisjointPartySplit(const Dataset& d, int parties,
                                        double heterogeneity,
                                        std::uint64_t seed) {
  if (parties < 2) throw ArgumentError("need at least 2 parties");
  if (!(heterogeneity >= 0.0 && heterogeneity <= 1.0)) {
    throw ArgumentError("heterogeneity must lie in [0,1]");
  }
  const auto p_count = static_cast<std::size_t>(parties);
  if (d.size() / p_count < static_cast<std::size_t>(d.k())) {
    throw ArgumentError("too few instances per party: " +
                        std::to_string(d.size()) + " rows for " +
                        std::to_string(parties) + " parties with k=" +
                        std::to_string(d.k()));
  }
  Rng rng(seed);
  std::vector<std::vector<std::size_t>> owned(p_count);
  auto by_class = IndicesByClass(d);

  const auto k_count = by_class.size();
  std::vector<std::vector<std::size_t>> take(k_count, std::vector<std::size_t>(p_count));
  if (heterogeneity == 0.0) {
    std::size_t counter = 0;
    for (std::size_t c = 0; c < k_count; ++c) {
      for (std::size_t t = 0; t < by_class[c].size(); ++t) ++take[c][counter++ % p_count];
    }
  } else {
    std::vector<double> size(p_count);
    for (std::size_t p = 0; p < p_count; ++p) {
      size[p] = static_cast<double>(d.size() / p_count + (p < d.size() % p_count ? 1 : 0));
    }
    // Per-class party weights from the Dirichlet, then Sinkhorn scaling so
    // rows match class counts and columns match equal party sizes.
    // Gamma draws by inverse CDF of fixed uniforms, so a seed gives weights
    // that move continuously with the knob.
    const double alpha = DirichletConcentration(heterogeneity);
    std::uniform_real_distribution<double> open_unit(1e-9, 1.0 - 1e-9);
    std::vector<std::vector<double>> w(k_count, std::vector<double>(p_count));
    for (auto& row : w) {
      for (double& v : row) {
        v = std::max(boost::math::gamma_p_inv(alpha, open_unit(rng)), 1e-12);
      }
    }
    for (int iter = 0; iter < 1000; ++iter) {
      for (std::size_t c = 0; c < k_count; ++c) {
        const double sum = std::accumulate(w[c].begin(), w[c].end(), 0.0);
        for (double& v : w[c]) v *= static_cast<double>(by_class[c].size()) / sum;
      }
      for (std::size_t p = 0; p < p_count; ++p) {
        double sum = 0.0;
        for (std::size_t c = 0; c < k_count; ++c) sum += w[c][p];
        for (std::size_t c = 0; c < k_count; ++c) w[c][p] *= size[p] / sum;
      }
    }
    // Integer counts: largest remainder per class, then move single rows
    // from over-full to under-full parties.
    std::vector<double> filled(p_count, 0.0);
    for (std::size_t c = 0; c < k_count; ++c) {
      std::vector<std::pair<double, std::size_t>> rema;
      std::size_t assigned = 0;
      for (std::size_t p = 0; p < p_count; ++p) {
        take[c][p] = static_cast<std::size_t>(std::floor(w[c][p]));
        assigned += take[c][p];
        rema.emplace_back(-(w[c][p] - std::floor(w[c][p])), p);
      }
      std::sort(rema.begin(), rema.end());
      for (std::size_t r = 0; assigned < by_class[c].size(); ++r, ++assigned) {
        ++take[c][rema[r % p_count].second];
      }
      for (std::size_t p = 0; p < p_count; ++p) filled[p] += static_cast<double>(take[c][p]);
    }
    for (;;) {
      std::size_t over = p_count, under = p_count;
      for (std::size_t p = 0; p < p_count; ++p) {
        if (filled[p] > size[p] && over == p_count) over = p;
        if (filled[p] < size[p] && under == p_count) under = p;
      }
      if (over == p_count || under == p_count) break;
      std::size_t best = k_count;
      for (std::size_t c = 0; c < k_count; ++c) {
        if (take[c][over] == 0) continue;
        if (best == k_count ||
            w[c][under] - static_cast<double>(take[c][under]) >
                w[best][under] - static_cast<double>(take[best][under])) {
          best = c;
        }
      }
      --take[best][over];
      ++take[best][under];
      --filled[over];
      ++filled[under];
    }
    // Every party holds at least two classes: swap one row with a donor.
    for (std::size_t p = 0; p < p_count; ++p) {
      std::vector<std::size_t> held;
      for (std::size_t c = 0; c < k_count; ++c) {
        if (take[c][p] > 0) held.push_back(c);
      }
      if (held.size() >= 2 || held.empty()) continue;
      const std::size_t mine = held.front();
      bool swapped = false;
      for (std::size_t q = 0; q < p_count && !swapped; ++q) {
        for (std::size_t c = 0; c < k_count && !swapped; ++c) {
          if (q == p || c == mine || take[c][q] == 0) continue;
          --take[c][q];
          ++take[c][p];
          --take[mine][p];
          ++take[mine][q];
          swapped = true;
        }
      }
      if (!swapped) throw ArgumentError("cannot give every party two classes");
    }
  }
  // Within each class, order rows by a blend of a random key and their rank
  // along a random direction; parties take contiguous chunks, so the knob
  // also pulls parties apart inside a class.
  FeatureVector direction(d.m());
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& v : direction) v = normal(rng);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t c = 0; c < k_count; ++c) {
    auto& idx = by_class[c];
    const std::size_t n_c = idx.size();
    std::vector<double> key(n_c), proj(n_c);
    for (std::size_t t = 0; t < n_c; ++t) {
      key[t] = unit(rng);
      const auto x = d.row(idx[t]);
      proj[t] = std::inner_product(x.begin(), x.end(), direction.begin(), 0.0);
    }
    std::vector<std::size_t> order(n_c);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return proj[a] < proj[b]; });
    std::vector<double> score(n_c);
    for (std::size_t r = 0; r < n_c; ++r) {
      const double rank = n_c > 1 ? static_cast<double>(r) / static_cast<double>(n_c - 1) : 0.0;
      score[order[r]] = heterogeneity * rank + (1.0 - heterogeneity) * key[order[r]];
    }
    std::vector<std::size_t> sorted(n_c);
    std::iota(sorted.begin(), sorted.end(), 0);
    std::stable_sort(sorted.begin(), sorted.end(),
                     [&](std::size_t a, std::size_t b) { return score[a] < score[b]; });
    std::size_t pos = 0;
    for (std::size_t p = 0; p < p_count; ++p) {
      for (std::size_t t = 0; t < take[c][p]; ++t) owned[p].push_back(idx[sorted[pos++]]);
    }
  }

  std::vector<Dataset> out;
  out.reserve(p_count);
  for (auto& rows : owned) {
    std::sort(rows.begin(), rows.end());
    out.push_back(d.Subset(rows));
  }
  return out;
}

double InterPartyInClassDistance(const Dataset& a, const Dataset& b) {
  if (a.m() != b.m() || a.k() != b.k()) {
    throw ArgumentError("datasets must share m and k");
  }
  auto centroids = [](const Dataset& d) {
    std::vector<FeatureVector> c(static_cast<std::size_t>(d.k()),
                                 FeatureVector(d.m(), 0.0));
    const auto counts = d.ClassCounts();
    for (std::size_t i = 0; i < d.size(); ++i) {
      auto& ci = c[static_cast<std::size_t>(d.label(i))];
      for (std::size_t j = 0; j < d.m(); ++j) ci[j] += d.row(i)[j];
    }
    for (std::size_t y = 0; y < c.size(); ++y) {
      if (counts[y] == 0) continue;
      for (double& v : c[y]) v /= static_cast<double>(counts[y]);
    }
    return std::make_pair(c, counts);
  };
  const auto [ca, na] = centroids(a);
  const auto [cb, nb] = centroids(b);
  double total = 0.0;
  int shared = 0;
  for (std::size_t y = 0; y < ca.size(); ++y) {
    if (na[y] == 0 || nb[y] == 0) continue;
    total += std::sqrt(SquaredDistance(ca[y], cb[y]));
    ++shared;
  }
  if (shared == 0) throw ArgumentError("datasets share no classes");
  return total / shared;
}

}  // namespace membrinf
