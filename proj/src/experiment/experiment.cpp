#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <exception>
#include <functional>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include "ulab/checkpoint.hpp"
#include "ulab/error.hpp"
#include "ulab/experiment.hpp"
#include "ulab/metrics.hpp"
#include "ulab/rng.hpp"

namespace ulab::experiment {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// Seed streams used by the harness, disjoint from the unlearning streams.
constexpr std::uint64_t kStreamSplit = 11;
constexpr std::uint64_t kStreamSourceInit = 12;
constexpr std::uint64_t kStreamSourceTrain = 13;
constexpr std::uint64_t kStreamDegree = 14;

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

// Labels for the configured strategies; repeated names get their list position.
std::vector<std::string> strategy_labels(const std::vector<StrategySpec>& specs) {
  std::map<std::string, int> counts;
  for (const auto& s : specs) ++counts[std::string(unlearn::strategy_name(s.kind))];
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    std::string name(unlearn::strategy_name(specs[i].kind));
    if (counts[name] > 1) name += "-" + std::to_string(i);
    labels.push_back(name);
  }
  return labels;
}

struct StageError {
  std::string stage;
  std::exception_ptr error;
};

// Runs tasks on up to `jobs` threads. Returns the first failure in task order.
std::optional<StageError> run_parallel(std::size_t jobs, std::vector<std::pair<std::string, std::function<void()>>>& tasks) {
  std::vector<std::exception_ptr> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        tasks[i].second();
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n = std::min(jobs, tasks.size());
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (errors[i]) return StageError{tasks[i].first, errors[i]};
  }
  return std::nullopt;
}

struct RunSlot {
  std::size_t spec_index = 0;
  std::string label;
  std::optional<unlearn::UnlearnOutcome> outcome;
  std::optional<degree::DegreeReport> degree;
};

}  // namespace

data::Dataset load_dataset(const DatasetSpec& spec) {
  data::Dataset ds;
  switch (spec.kind) {
    case DatasetKind::blobs: ds = data::generate_blobs(spec.blobs); break;
    case DatasetKind::idx: ds = data::load_idx(spec.images, spec.labels); break;
    case DatasetKind::csv: ds = data::read_csv(spec.csv); break;
  }
  if (spec.limit > 0 && spec.limit < ds.size()) {
    std::vector<std::size_t> head(spec.limit);
    for (std::size_t i = 0; i < head.size(); ++i) head[i] = i;
    const std::size_t classes = ds.class_count;
    ds = data::subset(ds, head);
    ds.class_count = classes;
  }
  ds.validate();
  return ds;
}

nn::NetworkShape model_shape(const ModelSpec& spec, const data::Dataset& ds) {
  nn::NetworkShape shape = nn::NetworkShape::mlp(ds.dims(), spec.hidden, ds.class_count);
  for (std::size_t l = 0; l + 1 < shape.layers.size(); ++l) shape.layers[l].activation = spec.activation;
  return shape;
}

nn::Network train_source(const ExperimentConfig& config, const data::Dataset& ds, std::uint64_t seed) {
  nn::Network net = nn::init_random(model_shape(config.model, ds), derive_seed(seed, kStreamSourceInit));
  unlearn::TrainConfig tc = config.train;
  tc.seed = derive_seed(seed, kStreamSourceTrain);
  unlearn::train(net, ds, tc);
  return net;
}

data::DatasetSplit split_for(const data::Dataset& ds, double ratio, std::uint64_t seed) {
  return data::split(ds, ratio, derive_seed(seed, kStreamSplit));
}

ordered_json manifest_to_json(const ExperimentManifest& m) {
  ordered_json doc;
  doc["config_hash"] = m.config_hash;
  doc["out_dir"] = m.out_dir;
  doc["started"] = m.started;
  doc["finished"] = m.finished;
  doc["status"] = m.status;
  doc["failed_stage"] = m.failed_stage;
  doc["error"] = m.error;
  doc["metrics_csv"] = m.metrics_csv;
  doc["source_checkpoints"] = m.source_checkpoints;
  ordered_json runs = ordered_json::array();
  for (const auto& r : m.runs) {
    runs.push_back({{"ratio", r.ratio},
                    {"seed", r.seed},
                    {"seed_index", r.seed_index},
                    {"strategy", r.strategy},
                    {"epochs_run", r.epochs_run},
                    {"wall_time_s", r.wall_time_s},
                    {"outcome", r.outcome},
                    {"checkpoint", r.checkpoint},
                    {"degree", r.degree},
                    {"perturbed", r.perturbed}});
  }
  doc["runs"] = std::move(runs);
  return doc;
}

ExperimentManifest manifest_from_json(const json& doc) {
  ExperimentManifest m;
  try {
    m.config_hash = doc.at("config_hash").get<std::string>();
    m.out_dir = doc.at("out_dir").get<std::string>();
    m.started = doc.value("started", "");
    m.finished = doc.value("finished", "");
    m.status = doc.at("status").get<std::string>();
    m.failed_stage = doc.value("failed_stage", "");
    m.error = doc.value("error", "");
    m.metrics_csv = doc.value("metrics_csv", "");
    m.source_checkpoints = doc.value("source_checkpoints", std::vector<std::string>{});
    for (const auto& r : doc.at("runs")) {
      RunRecord rec;
      rec.ratio = r.at("ratio").get<double>();
      rec.seed = r.at("seed").get<std::uint64_t>();
      rec.seed_index = r.at("seed_index").get<std::size_t>();
      rec.strategy = r.at("strategy").get<std::string>();
      rec.epochs_run = r.at("epochs_run").get<std::size_t>();
      rec.wall_time_s = r.at("wall_time_s").get<double>();
      rec.outcome = r.value("outcome", "");
      rec.checkpoint = r.value("checkpoint", "");
      rec.degree = r.value("degree", "");
      rec.perturbed = r.value("perturbed", "");
      m.runs.push_back(std::move(rec));
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

ExperimentManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    return manifest_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw FormatError("manifest " + path.string() + " is not valid JSON: " + e.what());
  }
}

ExperimentManifest run_experiment(const ExperimentConfig& config) {
  config.validate();
  const fs::path out = config.out_dir;
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) throw ConfigError("output directory " + out.string() + " is not writable");

  ExperimentManifest manifest;
  manifest.config_hash = config_hash(config);
  manifest.out_dir = out.string();
  manifest.started = utc_now();
  manifest.metrics_csv = "metrics.csv";
  write_text(out / "config.json", config_to_json(config).dump(2) + "\n");

  std::string stage = "load-dataset";
  auto fail = [&](const std::string& what) {
    manifest.status = "failed";
    manifest.failed_stage = stage;
    manifest.error = what;
    manifest.finished = utc_now();
    write_text(out / "manifest.json", manifest_to_json(manifest).dump(2) + "\n");
  };

  try {
    const data::Dataset ds = load_dataset(config.dataset);
    std::ofstream csv(out / manifest.metrics_csv, std::ios::binary | std::ios::trunc);
    if (!csv) throw IoError("cannot write metrics.csv");
    csv << metrics::kMetricsCsvHeader << '\n';

    const std::vector<std::string> labels = strategy_labels(config.strategies);
    std::map<std::uint64_t, nn::Network> sources;
    fs::create_directories(out / "sources");
    for (std::size_t si = 0; si < config.seeds.size(); ++si) {
      const std::uint64_t seed = config.seeds[si];
      stage = "train-source seed=" + std::to_string(seed);
      if (!sources.contains(seed)) sources.emplace(seed, train_source(config, ds, seed));
      const std::string rel = "sources/seed" + std::to_string(si) + ".ckpt.json";
      nn::save_checkpoint(sources.at(seed), out / rel);
      manifest.source_checkpoints.push_back(rel);
    }

    for (double ratio : config.ratios) {
      for (std::size_t si = 0; si < config.seeds.size(); ++si) {
        const std::uint64_t seed = config.seeds[si];
        const nn::Network& source = sources.at(seed);
        const std::string cell = "ratio-" + metrics::format_metric(ratio) + "/seed" + std::to_string(si);
        const std::string where = " ratio=" + metrics::format_metric(ratio) + " seed=" + std::to_string(seed);
        stage = "split" + where;
        const data::DatasetSplit split = split_for(ds, ratio, seed);
        const data::Dataset d_ul = data::subset(ds, split.unlearn_indices);
        const data::Dataset d_re = data::subset(ds, split.remain_indices);
        fs::create_directories(out / cell);

        std::vector<RunSlot> slots(config.strategies.size());
        std::optional<std::size_t> retrain_slot;
        for (std::size_t i = 0; i < slots.size(); ++i) {
          slots[i].spec_index = i;
          slots[i].label = labels[i];
          if (config.strategies[i].kind == unlearn::Strategy::retrain && !retrain_slot) retrain_slot = i;
        }

        auto unlearn_task = [&](RunSlot& slot, const nn::Network* guide) {
          const StrategySpec& spec = config.strategies[slot.spec_index];
          slot.outcome = unlearn::run_strategy(spec.kind, source, ds, split, strategy_config(config, spec, seed), guide);
        };

        // Retrained guidance needs the retrain model before the perturbation runs.
        std::optional<unlearn::UnlearnOutcome> guide_run;
        const nn::Network* guide = nullptr;
        std::vector<std::pair<std::string, std::function<void()>>> tasks;
        if (config.unlearn.guidance == unlearn::Guidance::retrained_model) {
          stage = "unlearn retrain-guide" + where;
          if (retrain_slot) {
            unlearn_task(slots[*retrain_slot], nullptr);
            guide = &slots[*retrain_slot].outcome->model;
          } else {
            guide_run = unlearn::run_baseline(unlearn::Strategy::retrain, source, ds, split,
                                              strategy_config(config, {unlearn::Strategy::retrain, {}, {}, {}}, seed));
            guide = &guide_run->model;
          }
        }
        for (auto& slot : slots) {
          if (slot.outcome) continue;
          tasks.emplace_back("unlearn " + slot.label + where, [&, s = &slot] { unlearn_task(*s, guide); });
        }
        if (auto err = run_parallel(config.jobs, tasks)) {
          stage = err->stage;
          std::rethrow_exception(err->error);
        }

        if (config.degree) {
          tasks.clear();
          for (auto& slot : slots) {
            tasks.emplace_back("degree " + slot.label + where, [&, s = &slot] {
              degree::DegreeConfig dc = config.degree_config;
              dc.seed = derive_seed(seed, kStreamDegree);
              auto trained = degree::train_generator(source, s->outcome->model, d_ul, dc);
              s->degree = degree::evaluate_degree(source, s->outcome->model, trained.generator, d_ul, d_re,
                                                  dc.tolerance);
              s->degree->loss_trace = std::move(trained.loss_trace);
              const std::string base = cell + "/" + s->label;
              write_text(out / (base + ".degree.json"), degree::degree_report_to_json(*s->degree));
              degree::write_perturbed_dump(out / (base + ".dp.csv"), d_ul.features,
                                           degree::perturb_data(trained.generator, d_ul.features, d_ul.scaling),
                                           d_ul.labels);
            });
          }
          if (auto err = run_parallel(config.jobs, tasks)) {
            stage = err->stage;
            std::rethrow_exception(err->error);
          }
        }

        stage = "metrics" + where;
        const double ul_before = metrics::accuracy(source, d_ul);
        const double re_before = metrics::accuracy(source, d_re);
        const nn::Network* reference = retrain_slot ? &slots[*retrain_slot].outcome->model : nullptr;
        const std::optional<double> retrain_time =
            retrain_slot ? std::optional<double>(slots[*retrain_slot].outcome->wall_time_s) : std::nullopt;
        for (const auto& slot : slots) {
          const auto& o = *slot.outcome;
          const std::string base = cell + "/" + slot.label;
          write_text(out / (base + ".outcome.json"), unlearn::outcome_to_json(o, false));
          nn::save_checkpoint(o.model, out / (base + ".ckpt.json"));

          metrics::MetricReport row;
          row.strategy = slot.label;
          row.unlearn_ratio = ratio;
          row.acc_ul_before = ul_before;
          row.acc_ul_after = o.acc_ul;
          row.acc_re_before = re_before;
          row.acc_re_after = o.acc_re;
          row.forgetting_rate = metrics::forgetting_rate(ul_before, o.acc_ul);
          row.memory_retention_rate = metrics::memory_retention_rate(re_before, o.acc_re);
          row.reference = reference ? metrics::SimilarityReference::retrained : metrics::SimilarityReference::source;
          row.similarity = metrics::similarity(reference ? *reference : source, o.model, d_ul.features);
          row.unlearn_time_s = o.wall_time_s;
          row.retrain_time_s = retrain_time;
          if (retrain_time && o.wall_time_s > 0.0) {
            row.acceleration_ratio = metrics::acceleration_ratio(*retrain_time, o.wall_time_s);
          }
          csv << metrics::metrics_csv_row(row) << '\n';

          RunRecord rec;
          rec.ratio = ratio;
          rec.seed = seed;
          rec.seed_index = si;
          rec.strategy = slot.label;
          rec.epochs_run = o.epochs_run;
          rec.wall_time_s = o.wall_time_s;
          rec.outcome = base + ".outcome.json";
          rec.checkpoint = base + ".ckpt.json";
          if (slot.degree) {
            rec.degree = base + ".degree.json";
            rec.perturbed = base + ".dp.csv";
          }
          manifest.runs.push_back(std::move(rec));
        }
        csv.flush();
        if (!csv) throw IoError("write failed for metrics.csv");
      }
    }
  } catch (const std::exception& e) {
    fail(e.what());
    throw;
  }

  manifest.status = "complete";
  manifest.finished = utc_now();
  write_text(out / "manifest.json", manifest_to_json(manifest).dump(2) + "\n");
  return manifest;
}

}  // namespace ulab::experiment
