#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "membrinf/experiment.h"

namespace membrinf {
namespace {

using nlohmann::json;

constexpr ExperimentKind kAllKinds[] = {
    ExperimentKind::kMatrixSweep,        ExperimentKind::kDataDriven,
    ExperimentKind::kTargetNoiseSweep,   ExperimentKind::kShadowNoiseSweep,
    ExperimentKind::kShadowSizeSweep,    ExperimentKind::kInsider,
    ExperimentKind::kHeterogeneitySweep, ExperimentKind::kMitigation,
    ExperimentKind::kMaxCombo,
};

std::string KebabCase(std::string_view camel) {
  std::string out;
  for (char c : camel) {
    if (std::isupper(static_cast<unsigned char>(c))) {
      if (!out.empty()) out += '-';
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else {
      out += c;
    }
  }
  return out;
}

// One JSON object plus the keys read from it, so leftovers can be reported.
class Section {
 public:
  Section(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(Where("") + "expected an object");
  }

  bool Has(const std::string& key) const { return obj_.contains(key); }

  template <typename T>
  void Get(const std::string& key, T& out) {
    if (!obj_.contains(key)) return;
    used_.insert(key);
    try {
      out = obj_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(Where(key) + "has the wrong type");
    }
  }

  void GetCount(const std::string& key, std::size_t& out) {
    if (!obj_.contains(key)) return;
    used_.insert(key);
    const json& v = obj_.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) {
      throw ConfigError(Where(key) + "must be a non-negative integer");
    }
    out = v.get<std::size_t>();
  }

  void GetKinds(const std::string& key, std::vector<ModelKind>& out) {
    if (!obj_.contains(key)) return;
    used_.insert(key);
    const json& v = obj_.at(key);
    std::vector<std::string> names;
    if (v.is_string()) {
      names.push_back(v.get<std::string>());
    } else if (v.is_array()) {
      for (const auto& e : v) {
        if (!e.is_string()) throw ConfigError(Where(key) + "expects model names");
        names.push_back(e.get<std::string>());
      }
    } else {
      throw ConfigError(Where(key) + "expects a model name or a list of them");
    }
    out.clear();
    for (const auto& n : names) {
      try {
        out.push_back(ParseModelKind(n));
      } catch (const ArgumentError& e) {
        throw ConfigError(Where(key) + e.what());
      }
    }
  }

  Section Child(const std::string& key) {
    used_.insert(key);
    return Section(obj_.at(key), path_.empty() ? key : path_ + "." + key);
  }

  void Finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!used_.count(key)) throw ConfigError("unknown key '" + Qualified(key) + "'");
    }
  }

  std::string Where(const std::string& key) const {
    return "config key '" + Qualified(key) + "' ";
  }

 private:
  std::string Qualified(const std::string& key) const {
    if (path_.empty()) return key;
    return key.empty() ? path_ : path_ + "." + key;
  }

  const json& obj_;
  std::string path_;
  std::set<std::string> used_;
};

void ReadTrain(Section s, TrainConfig& cfg) {
  if (s.Has("tree")) {
    Section t = s.Child("tree");
    t.Get("max_depth", cfg.tree.max_depth);
    t.Get("min_samples_split", cfg.tree.min_samples_split);
    t.Get("ccp_alpha", cfg.tree.ccp_alpha);
    t.Finish();
  }
  if (s.Has("knn")) {
    Section t = s.Child("knn");
    t.Get("neighbors", cfg.knn.neighbors);
    t.Finish();
  }
  if (s.Has("logistic")) {
    Section t = s.Child("logistic");
    t.Get("learning_rate", cfg.logistic.learning_rate);
    t.Get("epochs", cfg.logistic.epochs);
    t.Get("l2", cfg.logistic.l2);
    t.Finish();
  }
  if (s.Has("bayes")) {
    Section t = s.Child("bayes");
    t.Get("var_smoothing", cfg.bayes.var_smoothing);
    t.Finish();
  }
  s.Finish();
}

json TrainJson(const TrainConfig& cfg) {
  return {
      {"tree",
       {{"max_depth", cfg.tree.max_depth},
        {"min_samples_split", cfg.tree.min_samples_split},
        {"ccp_alpha", cfg.tree.ccp_alpha}}},
      {"knn", {{"neighbors", cfg.knn.neighbors}}},
      {"logistic",
       {{"learning_rate", cfg.logistic.learning_rate},
        {"epochs", cfg.logistic.epochs},
        {"l2", cfg.logistic.l2}}},
      {"bayes", {{"var_smoothing", cfg.bayes.var_smoothing}}},
  };
}

json KindsJson(const std::vector<ModelKind>& kinds) {
  json out = json::array();
  for (auto k : kinds) out.push_back(std::string(ModelKindName(k)));
  return out;
}

std::string_view SourceName(DataSourceKind k) {
  switch (k) {
    case DataSourceKind::kBlobs: return "blobs";
    case DataSourceKind::kPurchases: return "purchases";
    case DataSourceKind::kCsv: return "csv";
  }
  return "?";
}

void Require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

std::string_view ExperimentKindName(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kMatrixSweep: return "MatrixSweep";
    case ExperimentKind::kDataDriven: return "DataDriven";
    case ExperimentKind::kTargetNoiseSweep: return "TargetNoiseSweep";
    case ExperimentKind::kShadowNoiseSweep: return "ShadowNoiseSweep";
    case ExperimentKind::kShadowSizeSweep: return "ShadowSizeSweep";
    case ExperimentKind::kInsider: return "Insider";
    case ExperimentKind::kHeterogeneitySweep: return "HeterogeneitySweep";
    case ExperimentKind::kMitigation: return "Mitigation";
    case ExperimentKind::kMaxCombo: return "MaxCombo";
  }
  return "?";
}

ExperimentKind ParseExperimentKind(std::string_view name) {
  for (auto k : kAllKinds) {
    if (ExperimentKindName(k) == name || KebabCase(ExperimentKindName(k)) == name) return k;
  }
  throw ArgumentError("unknown experiment kind '" + std::string(name) + "'");
}

ExperimentConfig::ExperimentConfig() : attack_train(DefaultAttackConfig()) {}

ExperimentConfig ParseConfig(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  Section root(doc, "");

  Require(root.Has("experiment"), "config needs an 'experiment' kind");
  std::string kind;
  root.Get("experiment", kind);
  try {
    cfg.kind = ParseExperimentKind(kind);
  } catch (const ArgumentError& e) {
    throw ConfigError(e.what());
  }
  root.Get("name", cfg.name);
  root.Get("seed", cfg.seed);
  root.Get("workers", cfg.workers);
  std::string out_dir = cfg.output_dir.string();
  root.Get("output_dir", out_dir);
  cfg.output_dir = out_dir;

  if (root.Has("protocol")) {
    Section p = root.Child("protocol");
    p.Get("folds", cfg.protocol.folds);
    p.Get("runs", cfg.protocol.runs);
    p.Finish();
  }

  if (root.Has("data")) {
    Section d = root.Child("data");
    std::string source = "purchases";
    d.Get("source", source);
    if (source == "blobs") {
      cfg.data.kind = DataSourceKind::kBlobs;
    } else if (source == "purchases") {
      cfg.data.kind = DataSourceKind::kPurchases;
    } else if (source == "csv") {
      cfg.data.kind = DataSourceKind::kCsv;
    } else {
      throw ConfigError(d.Where("source") + "must be blobs, purchases or csv");
    }
    d.GetCount("n", cfg.data.n);
    d.GetCount("n_shadow", cfg.data.n_shadow);
    d.GetCount("m", cfg.data.m);
    d.Get("k", cfg.data.k);
    d.Get("sigma", cfg.data.sigma);
    std::string path;
    d.Get("path", path);
    cfg.data.csv_path = path;
    d.Get("label_column", cfg.data.csv_schema.label_column);
    std::vector<std::string> cats;
    d.Get("categorical", cats);
    cfg.data.csv_schema.categorical_columns = {cats.begin(), cats.end()};
    if (d.Has("purchases")) {
      Section p = d.Child("purchases");
      auto& pp = cfg.data.purchases;
      p.Get("base_rate_low", pp.base_rate_low);
      p.Get("base_rate_high", pp.base_rate_high);
      p.Get("favourite_fraction", pp.favourite_fraction);
      p.Get("boost_low", pp.boost_low);
      p.Get("boost_high", pp.boost_high);
      p.Finish();
    }
    d.Finish();
  }

  if (root.Has("models")) {
    Section m = root.Child("models");
    m.GetKinds("target", cfg.targets);
    m.GetKinds("generator", cfg.generators);
    m.GetKinds("attack", cfg.attacks);
    m.Finish();
  }
  if (root.Has("train")) ReadTrain(root.Child("train"), cfg.train);
  if (root.Has("attack_train")) ReadTrain(root.Child("attack_train"), cfg.attack_train);

  if (root.Has("attack")) {
    Section a = root.Child("attack");
    a.Get("partitions", cfg.partitions);
    std::string mode(AttackModeName(cfg.mode));
    a.Get("mode", mode);
    try {
      cfg.mode = ParseAttackMode(mode);
    } catch (const ArgumentError& e) {
      throw ConfigError(e.what());
    }
    a.Finish();
  }

  if (root.Has("shadow")) {
    Section s = root.Child("shadow");
    std::string source = "disjoint";
    s.Get("source", source);
    if (source == "disjoint") {
      cfg.shadow_source = ShadowSource::kDisjoint;
    } else if (source == "generated") {
      cfg.shadow_source = ShadowSource::kGenerated;
    } else {
      throw ConfigError(s.Where("source") + "must be disjoint or generated");
    }
    s.GetCount("size", cfg.shadow_size);
    std::string technique(ShadowTechniqueName(cfg.shadowgen.technique));
    s.Get("technique", technique);
    try {
      cfg.shadowgen.technique = ParseShadowTechnique(technique);
    } catch (const ArgumentError& e) {
      throw ConfigError(e.what());
    }
    s.Get("tau", cfg.shadowgen.confidence_threshold);
    s.Get("r", cfg.shadowgen.max_updates);
    s.Get("delta", cfg.shadowgen.region_radius);
    s.Get("s", cfg.shadowgen.samples_per_region);
    s.Get("budget", cfg.shadowgen.query_budget);
    s.Finish();
  }

  root.Get("sweep", cfg.sweep);
  root.Get("k_values", cfg.k_values);
  root.Get("sigma_values", cfg.sigma_values);

  if (root.Has("federation")) {
    Section f = root.Child("federation");
    f.Get("parties", cfg.parties);
    f.GetCount("insider", cfg.insider);
    f.GetCount("probes_per_party", cfg.probes_per_party);
    f.Get("knob", cfg.knob);
    f.Finish();
  }

  if (root.Has("mitigation")) {
    Section m = root.Child("mitigation");
    if (m.Has("policies")) {
      std::vector<json> list;
      m.Get("policies", list);
      cfg.policies.clear();
      for (std::size_t i = 0; i < list.size(); ++i) {
        Section p(list[i], "mitigation.policies[" + std::to_string(i) + "]");
        MitigationPolicySpec spec;
        Require(p.Has("name"), p.Where("name") + "is required");
        p.Get("name", spec.name);
        p.Get("parameter", spec.parameter);
        p.Finish();
        cfg.policies.push_back(spec);
      }
    }
    m.Get("l2", cfg.l2_grid);
    m.Finish();
  }
  root.Finish();

  if (cfg.name.empty()) cfg.name = KebabCase(ExperimentKindName(cfg.kind));
  return cfg;
}

ExperimentConfig LoadConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  ExperimentConfig cfg = ParseConfig(buf.str());
  // Data paths are relative to the config file.
  if (!cfg.data.csv_path.empty() && cfg.data.csv_path.is_relative()) {
    cfg.data.csv_path = path.parent_path() / cfg.data.csv_path;
  }
  return cfg;
}

void ValidateConfig(const ExperimentConfig& cfg) {
  Require(cfg.workers >= 1, "workers must be >= 1");
  Require(cfg.protocol.folds >= 2, "protocol.folds must be >= 2");
  Require(cfg.protocol.runs >= 1, "protocol.runs must be >= 1");
  Require(cfg.data.n > 0 && cfg.data.n_shadow > 0, "data.n and data.n_shadow must be > 0");
  if (cfg.data.kind != DataSourceKind::kCsv) {
    Require(cfg.data.m >= 1, "data.m must be >= 1");
    Require(cfg.data.k >= 2, "data.k must be >= 2");
    Require(cfg.data.sigma >= 0.0, "data.sigma must be >= 0");
  } else {
    Require(!cfg.data.csv_path.empty(), "data.path is required for csv data");
    Require(std::filesystem::exists(cfg.data.csv_path),
            "data file not found: " + cfg.data.csv_path.string());
    Require(!cfg.data.csv_schema.label_column.empty(), "data.label_column is required");
  }
  Require(!cfg.targets.empty() && !cfg.generators.empty() && !cfg.attacks.empty(),
          "every model list needs at least one kind");
  try {
    cfg.train.Validate();
    cfg.attack_train.Validate();
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("train: ") + e.what());
  }
  Require(cfg.partitions >= 1, "attack.partitions must be >= 1");
  const int k = cfg.data.kind == DataSourceKind::kCsv ? 0 : cfg.data.k;
  if (cfg.shadow_source == ShadowSource::kGenerated && k > 0) {
    try {
      cfg.shadowgen.Validate(k);
    } catch (const ArgumentError& e) {
      throw ConfigError(std::string("shadow: ") + e.what());
    }
  }

  for (double v : cfg.sweep) Require(v >= 0.0, "sweep values must be >= 0");
  switch (cfg.kind) {
    case ExperimentKind::kShadowSizeSweep:
      for (double v : cfg.sweep) {
        Require(v >= 4 && v == std::floor(v), "shadow sizes must be integers >= 4");
      }
      break;
    case ExperimentKind::kHeterogeneitySweep:
      for (double v : cfg.sweep) Require(v <= 1.0, "heterogeneity knobs must lie in [0,1]");
      break;
    default:
      break;
  }
  for (int kv : cfg.k_values) Require(kv >= 2, "k_values must be >= 2");
  for (double s : cfg.sigma_values) Require(s >= 0.0, "sigma_values must be >= 0");
  Require(cfg.parties >= 2, "federation.parties must be >= 2");
  Require(cfg.insider < static_cast<std::size_t>(cfg.parties),
          "federation.insider must name a party");
  Require(cfg.probes_per_party >= 1, "federation.probes_per_party must be >= 1");
  Require(cfg.knob >= 0.0 && cfg.knob <= 1.0, "federation.knob must lie in [0,1]");

  for (const auto& p : cfg.policies) {
    try {
      const HardeningPolicy policy = ParseHardeningPolicy(p.name, p.parameter, 0);
      if (k > 0) policy.Validate(k);
    } catch (const ArgumentError& e) {
      throw ConfigError(std::string("mitigation: ") + e.what());
    }
  }
  for (double l : cfg.l2_grid) Require(l >= 0.0, "mitigation.l2 values must be >= 0");
  if (cfg.kind == ExperimentKind::kMitigation && !cfg.l2_grid.empty()) {
    Require(cfg.targets.front() == ModelKind::kLogisticRegression,
            "mitigation.l2 needs an LR target");
  }
}

std::string CanonicalConfig(const ExperimentConfig& cfg) {
  // Workers and the output directory do not change results, so they stay out.
  json policies = json::array();
  for (const auto& p : cfg.policies) {
    policies.push_back({{"name", p.name}, {"parameter", p.parameter}});
  }
  json categorical = json::array();
  for (const auto& c : cfg.data.csv_schema.categorical_columns) categorical.push_back(c);
  const auto& pp = cfg.data.purchases;
  const json doc = {
      {"experiment", std::string(ExperimentKindName(cfg.kind))},
      {"name", cfg.name},
      {"seed", cfg.seed},
      {"protocol", {{"folds", cfg.protocol.folds}, {"runs", cfg.protocol.runs}}},
      {"data",
       {{"source", std::string(SourceName(cfg.data.kind))},
        {"n", cfg.data.n},
        {"n_shadow", cfg.data.n_shadow},
        {"m", cfg.data.m},
        {"k", cfg.data.k},
        {"sigma", cfg.data.sigma},
        {"path", cfg.data.csv_path.generic_string()},
        {"label_column", cfg.data.csv_schema.label_column},
        {"categorical", categorical},
        {"purchases",
         {{"base_rate_low", pp.base_rate_low},
          {"base_rate_high", pp.base_rate_high},
          {"favourite_fraction", pp.favourite_fraction},
          {"boost_low", pp.boost_low},
          {"boost_high", pp.boost_high}}}}},
      {"models",
       {{"target", KindsJson(cfg.targets)},
        {"generator", KindsJson(cfg.generators)},
        {"attack", KindsJson(cfg.attacks)}}},
      {"train", TrainJson(cfg.train)},
      {"attack_train", TrainJson(cfg.attack_train)},
      {"attack",
       {{"partitions", cfg.partitions}, {"mode", std::string(AttackModeName(cfg.mode))}}},
      {"shadow",
       {{"source", cfg.shadow_source == ShadowSource::kDisjoint ? "disjoint" : "generated"},
        {"size", cfg.shadow_size},
        {"technique", std::string(ShadowTechniqueName(cfg.shadowgen.technique))},
        {"tau", cfg.shadowgen.confidence_threshold},
        {"r", cfg.shadowgen.max_updates},
        {"delta", cfg.shadowgen.region_radius},
        {"s", cfg.shadowgen.samples_per_region},
        {"budget", cfg.shadowgen.query_budget}}},
      {"sweep", cfg.sweep},
      {"k_values", cfg.k_values},
      {"sigma_values", cfg.sigma_values},
      {"federation",
       {{"parties", cfg.parties},
        {"insider", cfg.insider},
        {"probes_per_party", cfg.probes_per_party},
        {"knob", cfg.knob}}},
      {"mitigation", {{"policies", policies}, {"l2", cfg.l2_grid}}},
  };
  return doc.dump();
}

std::string ConfigHash(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << std::hex;
  out.width(16);
  out.fill('0');
  out << Fnv1a(CanonicalConfig(cfg));
  return out.str();
}

PipelineConfig MakePipelineConfig(const ExperimentConfig& cfg, ModelKind target,
                                  ModelKind generator, ModelKind attack) {
  PipelineConfig p;
  p.target_kind = target;
  p.gen_kind = generator;
  p.attack_kind = attack;
  p.target_cfg = cfg.train;
  p.gen_cfg = cfg.train;
  p.attack_cfg = cfg.attack_train;
  p.partitions = cfg.partitions;
  p.mode = cfg.mode;
  p.shadow_source = cfg.shadow_source;
  p.shadowgen = cfg.shadowgen;
  p.shadow_size = cfg.shadow_size;
  return p;
}

}  // namespace membrinf
