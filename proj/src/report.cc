#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "membrinf/experiment.h"

namespace membrinf {
namespace {

using ojson = nlohmann::ordered_json;

// Shortest round-trip form, so output bytes depend only on the values.
std::string Num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string CsvCell(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

template <typename Pairs>
void CollectKeys(const Pairs& pairs, std::vector<std::string>& keys) {
  for (const auto& [key, value] : pairs) {
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
  }
}

std::string Provenance(const Report& r) {
  std::ostringstream out;
  out << "# experiment=" << r.experiment << '\n'
      << "# config_hash=" << r.config_hash << '\n'
      << "# version=" << r.version << '\n'
      << "# seed=" << r.seed << '\n';
  for (const auto& note : r.notes) out << "# note: " << note << '\n';
  return out.str();
}

std::string RenderCsv(const Report& r) {
  std::vector<std::string> coords, metrics;
  for (const auto& c : r.cells) {
    CollectKeys(c.coords, coords);
    CollectKeys(c.metrics, metrics);
  }
  std::ostringstream out;
  out << Provenance(r);
  for (const auto& k : coords) out << CsvCell(k) << ',';
  for (const auto& k : metrics) out << CsvCell(k) << ',';
  out << "error\n";
  for (const auto& c : r.cells) {
    for (const auto& k : coords) out << CsvCell(c.coord(k).value_or("")) << ',';
    for (const auto& k : metrics) {
      const auto v = c.metric(k);
      if (v) out << Num(*v);
      out << ',';
    }
    out << CsvCell(c.error) << '\n';
  }
  return out.str();
}

ojson NumJson(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

std::string RenderJsonl(const Report& r) {
  std::ostringstream out;
  for (const auto& c : r.cells) {
    ojson coords = ojson::object(), metrics = ojson::object();
    for (const auto& [k, v] : c.coords) coords[k] = v;
    for (const auto& [k, v] : c.metrics) metrics[k] = NumJson(v);
    ojson line = {{"experiment", r.experiment},
                  {"config_hash", r.config_hash},
                  {"version", r.version},
                  {"seed", r.seed},
                  {"coords", coords},
                  {"metrics", metrics}};
    line["error"] = c.error.empty() ? ojson(nullptr) : ojson(c.error);
    out << line.dump() << '\n';
  }
  return out.str();
}

std::string RenderPlot(const Report& r) {
  std::ostringstream out;
  out << "# experiment=" << r.experiment << '\n'
      << "# config_hash=" << r.config_hash << '\n'
      << "# version=" << r.version << '\n'
      << "x,y,series\n";
  for (const auto& c : r.cells) {
    if (!c.error.empty()) continue;
    const auto x = c.coord(r.plot.x);
    const auto y = c.metric(r.plot.y);
    if (!x || !y) continue;
    std::string series;
    for (const auto& key : r.plot.series) {
      if (!series.empty()) series += '/';
      series += key + '=' + c.coord(key).value_or("");
    }
    out << CsvCell(*x) << ',' << Num(*y) << ',' << CsvCell(series) << '\n';
  }
  return out.str();
}

std::string RenderSummary(const Report& r) {
  ojson summary = ojson::object();
  for (const auto& [k, v] : r.summary) summary[k] = NumJson(v);
  ojson doc = {{"experiment", r.experiment},
               {"config_hash", r.config_hash},
               {"version", r.version},
               {"seed", r.seed},
               {"notes", r.notes},
               {"cells", r.cells.size()},
               {"failed_cells", r.FailedCells()},
               {"summary", summary}};
  return doc.dump(2) + '\n';
}

bool EndsWith(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

std::optional<double> ReportCell::metric(std::string_view key) const {
  for (const auto& [k, v] : metrics) {
    if (k == key) return v;
  }
  return std::nullopt;
}

std::optional<std::string> ReportCell::coord(std::string_view key) const {
  for (const auto& [k, v] : coords) {
    if (k == key) return v;
  }
  return std::nullopt;
}

std::size_t Report::FailedCells() const {
  return static_cast<std::size_t>(std::count_if(
      cells.begin(), cells.end(), [](const ReportCell& c) { return !c.error.empty(); }));
}

std::string RenderReport(const Report& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::kCsv: return RenderCsv(report);
    case ReportFormat::kJsonl: return RenderJsonl(report);
    case ReportFormat::kPlotData: return RenderPlot(report);
    case ReportFormat::kSummary: return RenderSummary(report);
  }
  return {};
}

std::vector<std::filesystem::path> EmitReport(const Report& report,
                                              const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
  const std::string stem = report.experiment + "-" + report.config_hash;
  const std::pair<ReportFormat, const char*> outputs[] = {
      {ReportFormat::kCsv, ".csv"},
      {ReportFormat::kJsonl, ".jsonl"},
      {ReportFormat::kPlotData, ".plot.csv"},
      {ReportFormat::kSummary, ".summary.json"},
  };
  std::vector<std::filesystem::path> written;
  for (const auto& [format, ext] : outputs) {
    const auto path = dir / (stem + ext);
    std::ofstream out(path, std::ios::binary);
    out << RenderReport(report, format);
    out.close();
    if (!out) throw Error("cannot write " + path.string());
    written.push_back(path);
  }
  return written;
}

std::vector<std::string> ValidateReportFile(const std::filesystem::path& path) {
  std::vector<std::string> problems;
  std::ifstream in(path, std::ios::binary);
  if (!in) return {"cannot read " + path.string()};
  const std::string name = path.filename().string();

  auto check_json = [&](const nlohmann::json& doc, const std::string& where) {
    for (const char* key : {"config_hash", "version"}) {
      if (!doc.is_object() || !doc.contains(key) || !doc[key].is_string() ||
          doc[key].get<std::string>().empty()) {
        problems.push_back(where + ": missing " + key);
      }
    }
  };

  if (EndsWith(name, ".jsonl")) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      const auto doc = nlohmann::json::parse(line, nullptr, false);
      if (doc.is_discarded()) {
        problems.push_back("line " + std::to_string(lineno) + ": not JSON");
        continue;
      }
      check_json(doc, "line " + std::to_string(lineno));
      if (!doc.contains("coords") || !doc.contains("metrics")) {
        problems.push_back("line " + std::to_string(lineno) + ": missing coords or metrics");
      }
    }
  } else if (EndsWith(name, ".json")) {
    const auto doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded()) return {"not JSON"};
    check_json(doc, name);
  } else if (EndsWith(name, ".csv")) {
    bool hash = false, version = false, header = false;
    std::string line;
    while (std::getline(in, line)) {
      if (line.rfind('#', 0) != 0) {
        header = !line.empty();
        break;
      }
      hash = hash || (line.rfind("# config_hash=", 0) == 0 && line.size() > 14);
      version = version || (line.rfind("# version=", 0) == 0 && line.size() > 10);
    }
    if (!hash) problems.push_back("missing config_hash comment");
    if (!version) problems.push_back("missing version comment");
    if (!header) problems.push_back("missing column header");
  } else {
    problems.push_back("unknown report extension: " + name);
  }
  return problems;
}

}  // namespace membrinf
