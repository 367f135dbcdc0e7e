#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <string_view>

#include "ulab/error.hpp"
#include "ulab/experiment.hpp"
#include "ulab/rng.hpp"

namespace ulab::experiment {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

void check_keys(const json& obj, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw ConfigError(std::string(where) + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) throw ConfigError("unknown key '" + key + "' in " + std::string(where));
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    out = it->template get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

std::size_t read_count(const json& obj, const char* key, std::size_t fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_number_integer() || it->get<long long>() < 0) {
    throw ConfigError(std::string("'") + key + "' must be a non-negative integer");
  }
  return it->get<std::size_t>();
}

std::uint64_t read_seed(const json& v) {
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)) {
    throw ConfigError("seeds must be non-negative integers");
  }
  return v.get<std::uint64_t>();
}

nn::OptimizerSpec read_optimizer(const json& obj, nn::OptimizerSpec spec) {
  check_keys(obj, "optimizer", {"kind", "lr", "beta1", "beta2", "eps"});
  if (auto it = obj.find("kind"); it != obj.end()) {
    if (!it->is_string()) throw ConfigError("optimizer kind must be a string");
    spec.kind = nn::parse_optimizer(it->get<std::string>());
  }
  read(obj, "lr", spec.learning_rate);
  read(obj, "beta1", spec.beta1);
  read(obj, "beta2", spec.beta2);
  read(obj, "eps", spec.epsilon);
  return spec;
}

ordered_json optimizer_json(const nn::OptimizerSpec& s) {
  return {{"kind", nn::optimizer_name(s.kind)}, {"lr", s.learning_rate}, {"beta1", s.beta1},
          {"beta2", s.beta2}, {"eps", s.epsilon}};
}

std::string kind_name(DatasetKind k) {
  switch (k) {
    case DatasetKind::blobs: return "blobs";
    case DatasetKind::idx: return "idx";
    case DatasetKind::csv: return "csv";
  }
  return "blobs";
}

DatasetSpec read_dataset(const json& obj) {
  DatasetSpec spec;
  std::string kind = "blobs";
  if (obj.contains("kind")) read(obj, "kind", kind);
  if (kind == "blobs") {
    check_keys(obj, "dataset", {"kind", "classes", "per_class", "dims", "spread", "seed", "limit"});
    spec.kind = DatasetKind::blobs;
    spec.blobs.class_count = read_count(obj, "classes", spec.blobs.class_count);
    spec.blobs.per_class = read_count(obj, "per_class", spec.blobs.per_class);
    spec.blobs.dims = read_count(obj, "dims", spec.blobs.dims);
    read(obj, "spread", spec.blobs.spread);
    if (obj.contains("seed")) spec.blobs.seed = read_seed(obj["seed"]);
  } else if (kind == "idx") {
    check_keys(obj, "dataset", {"kind", "images", "labels", "limit"});
    spec.kind = DatasetKind::idx;
    read(obj, "images", spec.images);
    read(obj, "labels", spec.labels);
  } else if (kind == "csv") {
    check_keys(obj, "dataset", {"kind", "path", "limit"});
    spec.kind = DatasetKind::csv;
    read(obj, "path", spec.csv);
  } else {
    throw ConfigError("unknown dataset kind '" + kind + "'");
  }
  spec.limit = read_count(obj, "limit", 0);
  return spec;
}

StrategySpec read_strategy(const json& v) {
  StrategySpec s;
  if (v.is_string()) {
    s.kind = unlearn::parse_strategy(v.get<std::string>());
    return s;
  }
  check_keys(v, "strategy", {"name", "top_k", "random_k", "layers"});
  if (!v.contains("name") || !v["name"].is_string()) throw ConfigError("strategy entries need a name");
  s.kind = unlearn::parse_strategy(v["name"].get<std::string>());
  if (v.contains("top_k")) s.top_k = read_count(v, "top_k", 0);
  if (v.contains("random_k")) {
    double k = 0.0;
    read(v, "random_k", k);
    s.random_k = k;
  }
  if (v.contains("layers")) s.layers = read_count(v, "layers", 0);
  return s;
}

}  // namespace

ExperimentConfig default_config() {
  ExperimentConfig c;
  c.dataset.blobs = {10, 500, 32, 0.5, 1};
  c.model.hidden = {64, 64};
  c.train.epochs = 30;
  c.strategies = {{unlearn::Strategy::top_k, {}, {}, {}},
                  {unlearn::Strategy::random_k, {}, {}, {}},
                  {unlearn::Strategy::eu_k, {}, {}, {}},
                  {unlearn::Strategy::cf_k, {}, {}, {}},
                  {unlearn::Strategy::retrain, {}, {}, {}}};
  return c;
}

void ExperimentConfig::validate() const {
  if (strategies.empty()) throw ConfigError("at least one strategy is required");
  if (ratios.empty()) throw ConfigError("at least one unlearn ratio is required");
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  for (double r : ratios) {
    if (!(r > 0.0 && r < 1.0)) throw ConfigError("unlearn ratios must lie in (0,1)");
  }
  if (model.hidden.empty()) throw ConfigError("model needs at least one hidden layer");
  for (std::size_t h : model.hidden) {
    if (h == 0) throw ConfigError("hidden layer sizes must be positive");
  }
  if (train.epochs == 0 || train.batch_size == 0) throw ConfigError("train epochs and batch size must be >= 1");
  if (out_dir.empty()) throw ConfigError("output directory is empty");
  if (jobs == 0) throw ConfigError("jobs must be >= 1");
  switch (dataset.kind) {
    case DatasetKind::blobs:
      if (dataset.blobs.class_count < 2 || dataset.blobs.per_class == 0 || dataset.blobs.dims == 0) {
        throw ConfigError("blob dataset needs >= 2 classes, >= 1 sample per class and >= 1 dim");
      }
      if (!(dataset.blobs.spread > 0.0) || !std::isfinite(dataset.blobs.spread)) {
        throw ConfigError("blob spread must be positive");
      }
      break;
    case DatasetKind::idx:
      if (dataset.images.empty() || dataset.labels.empty()) throw ConfigError("idx dataset needs images and labels");
      break;
    case DatasetKind::csv:
      if (dataset.csv.empty()) throw ConfigError("csv dataset needs a path");
      break;
  }
  unlearn.validate();
  for (const auto& s : strategies) strategy_config(*this, s, 0).validate();
  if (degree) degree_config.validate();
}

ExperimentConfig config_from_json(const json& doc) {
  check_keys(doc, "config",
             {"dataset", "model", "train", "unlearn", "ratios", "strategies", "seeds", "out_dir", "degree", "jobs"});
  ExperimentConfig c = default_config();
  if (doc.contains("dataset")) c.dataset = read_dataset(doc["dataset"]);
  if (doc.contains("model")) {
    const json& m = doc["model"];
    check_keys(m, "model", {"hidden", "activation"});
    read(m, "hidden", c.model.hidden);
    if (m.contains("activation")) {
      std::string a;
      read(m, "activation", a);
      try {
        c.model.activation = nn::parse_activation(a);
      } catch (const FormatError& e) {
        throw ConfigError(e.what());
      }
    }
  }
  if (doc.contains("train")) {
    const json& t = doc["train"];
    check_keys(t, "train", {"epochs", "batch_size", "optimizer"});
    c.train.epochs = read_count(t, "epochs", c.train.epochs);
    c.train.batch_size = read_count(t, "batch_size", c.train.batch_size);
    if (t.contains("optimizer")) c.train.optimizer = read_optimizer(t["optimizer"], c.train.optimizer);
  }
  if (doc.contains("unlearn")) {
    const json& u = doc["unlearn"];
    check_keys(u, "unlearn",
               {"lambda", "epsilon", "max_epochs", "batch_size", "optimizer", "baseline_optimizer",
                "retrain_optimizer", "patience", "min_delta", "top_k", "random_k", "layers_k", "sample_policy",
                "sensitivity_batch", "guidance"});
    auto& cfg = c.unlearn;
    read(u, "lambda", cfg.lambda);
    read(u, "epsilon", cfg.epsilon);
    cfg.max_epochs = read_count(u, "max_epochs", cfg.max_epochs);
    cfg.batch_size = read_count(u, "batch_size", cfg.batch_size);
    if (u.contains("optimizer")) cfg.optimizer = read_optimizer(u["optimizer"], cfg.optimizer);
    if (u.contains("baseline_optimizer")) {
      cfg.baseline_optimizer = read_optimizer(u["baseline_optimizer"], cfg.baseline_optimizer);
    }
    if (u.contains("retrain_optimizer")) {
      cfg.retrain_optimizer = read_optimizer(u["retrain_optimizer"], cfg.retrain_optimizer);
    }
    cfg.convergence.patience = read_count(u, "patience", cfg.convergence.patience);
    read(u, "min_delta", cfg.convergence.min_delta);
    cfg.top_k = read_count(u, "top_k", cfg.top_k);
    read(u, "random_k", cfg.random_k);
    cfg.layers_k = read_count(u, "layers_k", cfg.layers_k);
    if (u.contains("sample_policy")) {
      std::string p;
      read(u, "sample_policy", p);
      cfg.sample_policy = unlearn::parse_policy(p);
    }
    cfg.sensitivity_batch = read_count(u, "sensitivity_batch", cfg.sensitivity_batch);
    if (u.contains("guidance")) {
      std::string g;
      read(u, "guidance", g);
      cfg.guidance = unlearn::parse_guidance(g);
    }
  }
  if (doc.contains("ratios")) read(doc, "ratios", c.ratios);
  if (doc.contains("strategies")) {
    if (!doc["strategies"].is_array()) throw ConfigError("strategies must be an array");
    c.strategies.clear();
    for (const auto& s : doc["strategies"]) c.strategies.push_back(read_strategy(s));
  }
  if (doc.contains("seeds")) {
    if (!doc["seeds"].is_array()) throw ConfigError("seeds must be an array");
    c.seeds.clear();
    for (const auto& s : doc["seeds"]) c.seeds.push_back(read_seed(s));
  }
  read(doc, "out_dir", c.out_dir);
  c.jobs = read_count(doc, "jobs", c.jobs);
  if (doc.contains("degree")) {
    const json& d = doc["degree"];
    check_keys(d, "degree",
               {"enabled", "eta", "epochs", "batch_size", "max_noise", "tolerance", "optimizer", "hidden",
                "bottleneck"});
    read(d, "enabled", c.degree);
    auto& dc = c.degree_config;
    read(d, "eta", dc.eta);
    dc.epochs = read_count(d, "epochs", dc.epochs);
    dc.batch_size = read_count(d, "batch_size", dc.batch_size);
    read(d, "max_noise", dc.max_noise);
    read(d, "tolerance", dc.tolerance);
    if (d.contains("optimizer")) dc.optimizer = read_optimizer(d["optimizer"], dc.optimizer);
    dc.arch.hidden = read_count(d, "hidden", dc.arch.hidden);
    dc.arch.bottleneck = read_count(d, "bottleneck", dc.arch.bottleneck);
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(doc);
}

ordered_json config_to_json(const ExperimentConfig& c, bool semantic_only) {
  ordered_json doc;
  ordered_json ds{{"kind", kind_name(c.dataset.kind)}};
  switch (c.dataset.kind) {
    case DatasetKind::blobs:
      ds["classes"] = c.dataset.blobs.class_count;
      ds["per_class"] = c.dataset.blobs.per_class;
      ds["dims"] = c.dataset.blobs.dims;
      ds["spread"] = c.dataset.blobs.spread;
      ds["seed"] = c.dataset.blobs.seed;
      break;
    case DatasetKind::idx:
      ds["images"] = c.dataset.images;
      ds["labels"] = c.dataset.labels;
      break;
    case DatasetKind::csv:
      ds["path"] = c.dataset.csv;
      break;
  }
  ds["limit"] = c.dataset.limit;
  doc["dataset"] = ds;
  doc["model"] = {{"hidden", c.model.hidden}, {"activation", nn::activation_name(c.model.activation)}};
  doc["train"] = {{"epochs", c.train.epochs},
                  {"batch_size", c.train.batch_size},
                  {"optimizer", optimizer_json(c.train.optimizer)}};
  const auto& u = c.unlearn;
  doc["unlearn"] = {{"lambda", u.lambda},
                    {"epsilon", u.epsilon},
                    {"max_epochs", u.max_epochs},
                    {"batch_size", u.batch_size},
                    {"optimizer", optimizer_json(u.optimizer)},
                    {"baseline_optimizer", optimizer_json(u.baseline_optimizer)},
                    {"retrain_optimizer", optimizer_json(u.retrain_optimizer)},
                    {"patience", u.convergence.patience},
                    {"min_delta", u.convergence.min_delta},
                    {"top_k", u.top_k},
                    {"random_k", u.random_k},
                    {"layers_k", u.layers_k},
                    {"sample_policy", unlearn::policy_name(u.sample_policy)},
                    {"sensitivity_batch", u.sensitivity_batch},
                    {"guidance", unlearn::guidance_name(u.guidance)}};
  doc["ratios"] = c.ratios;
  ordered_json strategies = ordered_json::array();
  for (const auto& s : c.strategies) {
    ordered_json e{{"name", unlearn::strategy_name(s.kind)}};
    if (s.top_k) e["top_k"] = *s.top_k;
    if (s.random_k) e["random_k"] = *s.random_k;
    if (s.layers) e["layers"] = *s.layers;
    strategies.push_back(std::move(e));
  }
  doc["strategies"] = std::move(strategies);
  doc["seeds"] = c.seeds;
  const auto& d = c.degree_config;
  doc["degree"] = {{"enabled", c.degree},
                   {"eta", d.eta},
                   {"epochs", d.epochs},
                   {"batch_size", d.batch_size},
                   {"max_noise", d.max_noise},
                   {"tolerance", d.tolerance},
                   {"optimizer", optimizer_json(d.optimizer)},
                   {"hidden", d.arch.hidden},
                   {"bottleneck", d.arch.bottleneck}};
  if (!semantic_only) {
    doc["out_dir"] = c.out_dir;
    doc["jobs"] = c.jobs;
  }
  return doc;
}

std::string config_hash(const ExperimentConfig& config) {
  const std::string text = config_to_json(config, true).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

unlearn::UnlearnConfig strategy_config(const ExperimentConfig& config, const StrategySpec& spec, std::uint64_t seed) {
  unlearn::UnlearnConfig u = config.unlearn;
  if (spec.top_k) u.top_k = *spec.top_k;
  if (spec.random_k) u.random_k = *spec.random_k;
  if (spec.layers) u.layers_k = *spec.layers;
  u.seed = seed;
  return u;
}

std::optional<double> strategy_parameter(const ExperimentConfig& config, const StrategySpec& spec) {
  const auto u = strategy_config(config, spec, 0);
  switch (spec.kind) {
    case unlearn::Strategy::top_k:
    case unlearn::Strategy::mixed: return static_cast<double>(u.top_k);
    case unlearn::Strategy::random_k: return u.random_k;
    case unlearn::Strategy::eu_k:
    case unlearn::Strategy::cf_k: return static_cast<double>(u.layers_k);
    case unlearn::Strategy::retrain: return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace ulab::experiment
