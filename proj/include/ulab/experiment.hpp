#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ulab/data.hpp"
#include "ulab/degree.hpp"
#include "ulab/network.hpp"
#include "ulab/unlearn.hpp"

namespace ulab::experiment {

enum class DatasetKind { blobs, idx, csv };

struct DatasetSpec {
  DatasetKind kind = DatasetKind::blobs;
  data::BlobSpec blobs;
  std::string images;  // idx
  std::string labels;  // idx
  std::string csv;
  std::size_t limit = 0;  // keep the first `limit` rows; 0 keeps all
};

struct ModelSpec {
  std::vector<std::size_t> hidden{64, 64};
  nn::Activation activation = nn::Activation::relu;
};

// Per-strategy overrides of the shared unlearning parameters.
struct StrategySpec {
  unlearn::Strategy kind = unlearn::Strategy::top_k;
  std::optional<std::size_t> top_k{};
  std::optional<double> random_k{};
  std::optional<std::size_t> layers{};
};

struct ExperimentConfig {
  DatasetSpec dataset;
  ModelSpec model;
  unlearn::TrainConfig train;
  unlearn::UnlearnConfig unlearn;
  std::vector<double> ratios{0.05, 0.10, 0.15, 0.20};
  std::vector<StrategySpec> strategies;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::string out_dir = "ulab-out";
  bool degree = false;
  degree::DegreeConfig degree_config;
  std::size_t jobs = 1;

  // Throws ConfigError.
  void validate() const;
};

// Pinned blob fixture: C=10, 5000 samples, 32 dims, two hidden layers.
ExperimentConfig default_config();

// Missing keys keep their defaults; unknown keys are a ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);
// Full config. With semantic_only, out_dir and jobs are dropped.
nlohmann::ordered_json config_to_json(const ExperimentConfig& config, bool semantic_only = false);
// 16 hex digits, FNV-1a over the canonical semantic JSON.
std::string config_hash(const ExperimentConfig& config);

// Options applied to unlearn::UnlearnConfig for one strategy.
unlearn::UnlearnConfig strategy_config(const ExperimentConfig& config, const StrategySpec& spec, std::uint64_t seed);
std::optional<double> strategy_parameter(const ExperimentConfig& config, const StrategySpec& spec);

data::Dataset load_dataset(const DatasetSpec& spec);
nn::NetworkShape model_shape(const ModelSpec& spec, const data::Dataset& ds);

// Source model for one experiment seed: random init then `train` on all of D.
nn::Network train_source(const ExperimentConfig& config, const data::Dataset& ds, std::uint64_t seed);
data::DatasetSplit split_for(const data::Dataset& ds, double ratio, std::uint64_t seed);

struct RunRecord {
  double ratio = 0.0;
  std::uint64_t seed = 0;
  std::size_t seed_index = 0;
  std::string strategy;
  std::size_t epochs_run = 0;
  double wall_time_s = 0.0;  // measurement, not part of any hashed artifact
  std::string outcome;       // paths relative to the output directory
  std::string checkpoint;
  std::string degree;
  std::string perturbed;
};

struct ExperimentManifest {
  std::string config_hash;
  std::string out_dir;
  std::string started;
  std::string finished;
  std::string status = "running";  // complete | failed
  std::string failed_stage;
  std::string error;
  std::string metrics_csv;
  std::vector<std::string> source_checkpoints;
  std::vector<RunRecord> runs;

  bool complete() const { return status == "complete"; }
};

nlohmann::ordered_json manifest_to_json(const ExperimentManifest& manifest);
ExperimentManifest manifest_from_json(const nlohmann::json& doc);
ExperimentManifest load_manifest(const std::filesystem::path& path);

// Writes <out>/manifest.json even when a stage fails; the failure is then
// rethrown.
ExperimentManifest run_experiment(const ExperimentConfig& config);

// Plot data under <out>/plots:
//   curves/<ratio>_<seed index>_<strategy>.csv  epoch,acc_re,acc_ul,ce,js
//   acceleration.csv  ratio,seed,strategy,unlearn_time_s,retrain_time_s,acceleration
//   random_topk.csv   ratio,seed,strategy,epoch,acc_re,acc_ul
//   degree.csv        ratio,seed,strategy,degree,acc_m_on_dp,acc_mul_on_dp,constraint_satisfied
//   gaps.txt          one line per missing input (always written)
// Returns the written paths.
std::vector<std::filesystem::path> emit_plot_data(const ExperimentManifest& manifest);

inline constexpr const char* kCurveHeader = "epoch,acc_re,acc_ul,ce,js";
inline constexpr const char* kAccelerationHeader = "ratio,seed,strategy,unlearn_time_s,retrain_time_s,acceleration";
inline constexpr const char* kRandomTopkHeader = "ratio,seed,strategy,epoch,acc_re,acc_ul";
inline constexpr const char* kDegreeHeader =
    "ratio,seed,strategy,degree,acc_m_on_dp,acc_mul_on_dp,constraint_satisfied";

}  // namespace ulab::experiment
