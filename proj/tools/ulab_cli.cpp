#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "ulab/checkpoint.hpp"
#include "ulab/degree.hpp"
#include "ulab/error.hpp"
#include "ulab/experiment.hpp"
#include "ulab/metrics.hpp"
#include "ulab/unlearn.hpp"

namespace fs = std::filesystem;
using namespace ulab;

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> ratio;
  std::optional<std::string> strategy;
  std::optional<std::string> out;
  std::optional<std::size_t> jobs;
  std::string source;
  std::string unlearned;
  std::string reference;
  std::string outcome;
  std::string retrain_outcome;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON config file");
  cmd->add_option("--seed", f.seed, "experiment seed");
  cmd->add_option("--ratio", f.ratio, "unlearn ratio in (0,1)");
  cmd->add_option("--strategy", f.strategy, "top-k | random-k | mixed | eu-k | cf-k | retrain");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--jobs", f.jobs, "parallel strategy runs");
}

// flags > config file > defaults
experiment::ExperimentConfig resolve(const Flags& f) {
  experiment::ExperimentConfig c = f.config.empty() ? experiment::default_config() : experiment::load_config(f.config);
  if (f.seed) c.seeds = {*f.seed};
  if (f.ratio) c.ratios = {*f.ratio};
  if (f.strategy) c.strategies = {{unlearn::parse_strategy(*f.strategy), {}, {}, {}}};
  if (f.out) c.out_dir = *f.out;
  if (f.jobs) c.jobs = *f.jobs;
  c.validate();
  return c;
}

fs::path out_dir(const experiment::ExperimentConfig& c) {
  fs::path p = c.out_dir;
  fs::create_directories(p);
  return p;
}

nn::Network source_model(const Flags& f, const experiment::ExperimentConfig& c, const data::Dataset& ds) {
  if (!f.source.empty()) return nn::load_checkpoint(f.source);
  return experiment::train_source(c, ds, c.seeds.front());
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

double outcome_time(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  const auto doc = nlohmann::json::parse(in);
  if (!doc.contains("wall_time_s")) throw FormatError(path + " has no wall_time_s");
  return doc["wall_time_s"].get<double>();
}

int cmd_train(const Flags& f) {
  const auto c = resolve(f);
  const data::Dataset ds = experiment::load_dataset(c.dataset);
  const nn::Network net = experiment::train_source(c, ds, c.seeds.front());
  const fs::path path = out_dir(c) / "source.ckpt.json";
  nn::save_checkpoint(net, path);
  std::cout << "train_accuracy " << metrics::format_metric(metrics::accuracy(net, ds)) << "\n"
            << "checkpoint " << path.string() << "\n";
  return 0;
}

int cmd_unlearn(const Flags& f) {
  const auto c = resolve(f);
  const data::Dataset ds = experiment::load_dataset(c.dataset);
  const nn::Network source = source_model(f, c, ds);
  const std::uint64_t seed = c.seeds.front();
  const data::DatasetSplit split = experiment::split_for(ds, c.ratios.front(), seed);
  const auto& spec = c.strategies.front();
  const auto outcome =
      unlearn::run_strategy(spec.kind, source, ds, split, experiment::strategy_config(c, spec, seed));
  const fs::path dir = out_dir(c);
  const std::string name(unlearn::strategy_name(spec.kind));
  write_file(dir / (name + ".outcome.json"), unlearn::outcome_to_json(outcome, true));
  nn::save_checkpoint(outcome.model, dir / (name + ".ckpt.json"));
  if (f.source.empty()) nn::save_checkpoint(source, dir / "source.ckpt.json");
  std::cout << "strategy " << name << "\nepochs_run " << outcome.epochs_run << "\nacc_ul "
            << metrics::format_metric(outcome.acc_ul) << "\nacc_re " << metrics::format_metric(outcome.acc_re)
            << "\nwall_time_s " << metrics::format_metric(outcome.wall_time_s) << "\n";
  return 0;
}

int cmd_metrics(const Flags& f) {
  if (f.source.empty() || f.unlearned.empty()) throw ConfigError("metrics needs --source and --unlearned");
  const auto c = resolve(f);
  const data::Dataset ds = experiment::load_dataset(c.dataset);
  const nn::Network source = nn::load_checkpoint(f.source);
  const nn::Network unlearned = nn::load_checkpoint(f.unlearned);
  const data::DatasetSplit split = experiment::split_for(ds, c.ratios.front(), c.seeds.front());
  const data::Dataset d_ul = data::subset(ds, split.unlearn_indices);
  const data::Dataset d_re = data::subset(ds, split.remain_indices);

  metrics::MetricReport row;
  row.strategy = f.strategy ? *f.strategy : "unlearned";
  row.unlearn_ratio = c.ratios.front();
  row.acc_ul_before = metrics::accuracy(source, d_ul);
  row.acc_re_before = metrics::accuracy(source, d_re);
  row.acc_ul_after = metrics::accuracy(unlearned, d_ul);
  row.acc_re_after = metrics::accuracy(unlearned, d_re);
  row.forgetting_rate = metrics::forgetting_rate(row.acc_ul_before, row.acc_ul_after);
  row.memory_retention_rate = metrics::memory_retention_rate(row.acc_re_before, row.acc_re_after);
  const std::optional<nn::Network> reference =
      f.reference.empty() ? std::nullopt : std::optional<nn::Network>(nn::load_checkpoint(f.reference));
  row.reference = reference ? metrics::SimilarityReference::retrained : metrics::SimilarityReference::source;
  row.similarity = metrics::similarity(reference ? *reference : source, unlearned, d_ul.features);
  if (!f.outcome.empty()) row.unlearn_time_s = outcome_time(f.outcome);
  if (!f.retrain_outcome.empty()) {
    row.retrain_time_s = outcome_time(f.retrain_outcome);
    row.acceleration_ratio = metrics::acceleration_ratio(*row.retrain_time_s, row.unlearn_time_s);
  }
  std::cout << metrics::kMetricsCsvHeader << "\n" << metrics::metrics_csv_row(row) << "\n";
  std::cerr << "similarity reference: " << metrics::reference_name(row.reference) << "\n";
  return 0;
}

int cmd_degree(const Flags& f) {
  if (f.source.empty() || f.unlearned.empty()) throw ConfigError("degree needs --source and --unlearned");
  const auto c = resolve(f);
  const data::Dataset ds = experiment::load_dataset(c.dataset);
  const nn::Network source = nn::load_checkpoint(f.source);
  const nn::Network unlearned = nn::load_checkpoint(f.unlearned);
  const data::DatasetSplit split = experiment::split_for(ds, c.ratios.front(), c.seeds.front());
  const data::Dataset d_ul = data::subset(ds, split.unlearn_indices);
  const data::Dataset d_re = data::subset(ds, split.remain_indices);
  degree::DegreeConfig dc = c.degree_config;
  dc.seed = c.seeds.front();
  auto trained = degree::train_generator(source, unlearned, d_ul, dc);
  auto report = degree::evaluate_degree(source, unlearned, trained.generator, d_ul, d_re, dc.tolerance);
  report.loss_trace = std::move(trained.loss_trace);
  const fs::path dir = out_dir(c);
  write_file(dir / "degree.json", degree::degree_report_to_json(report));
  degree::write_perturbed_dump(dir / "perturbed.csv", d_ul.features,
                               degree::perturb_data(trained.generator, d_ul.features, d_ul.scaling), d_ul.labels);
  if (!report.in_expected_range) {
    std::cerr << "warning: degree " << report.degree << " outside [0, 1-1/C]\n";
  }
  if (!report.constraint_satisfied) {
    std::cerr << "warning: |acc_M(D_p) - acc_M(D_UL)| exceeds tolerance " << dc.tolerance << "\n";
  }
  std::cout << "degree " << metrics::format_metric(report.degree) << "\nconstraint_satisfied "
            << (report.constraint_satisfied ? "true" : "false") << "\n";
  return 0;
}

int cmd_experiment(const Flags& f) {
  const auto c = resolve(f);
  const auto manifest = experiment::run_experiment(c);
  std::cout << "config_hash " << manifest.config_hash << "\nruns " << manifest.runs.size() << "\nmanifest "
            << (fs::path(manifest.out_dir) / "manifest.json").string() << "\n";
  return 0;
}

int cmd_emit_plots(const Flags& f) {
  const fs::path dir = f.out ? fs::path(*f.out) : (f.config.empty() ? fs::path() : fs::path(resolve(f).out_dir));
  if (dir.empty()) throw ConfigError("emit-plots needs --out DIR or --config");
  auto manifest = experiment::load_manifest(dir / "manifest.json");
  manifest.out_dir = dir.string();
  for (const auto& p : experiment::emit_plot_data(manifest)) std::cout << p.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"machine unlearning lab"};
  app.require_subcommand(1);
  Flags f;
  auto* train = app.add_subcommand("train", "train a source model on the configured dataset");
  auto* unl = app.add_subcommand("unlearn", "run one unlearning strategy");
  auto* met = app.add_subcommand("metrics", "metric row for a source/unlearned checkpoint pair");
  auto* deg = app.add_subcommand("degree", "train the perturbation generator and report the unlearning degree");
  auto* exp = app.add_subcommand("experiment", "full ratio x seed x strategy sweep");
  auto* plots = app.add_subcommand("emit-plots", "plot-ready CSVs from an experiment directory");
  for (auto* cmd : {train, unl, met, deg, exp, plots}) add_common(cmd, f);
  unl->add_option("--source", f.source, "source checkpoint (trained when absent)");
  for (auto* cmd : {met, deg}) {
    cmd->add_option("--source", f.source, "source checkpoint")->required();
    cmd->add_option("--unlearned", f.unlearned, "unlearned checkpoint")->required();
  }
  met->add_option("--reference", f.reference, "retrained checkpoint for similarity");
  met->add_option("--outcome", f.outcome, "outcome JSON with wall_time_s");
  met->add_option("--retrain-outcome", f.retrain_outcome, "retrain outcome JSON with wall_time_s");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*train) return cmd_train(f);
    if (*unl) return cmd_unlearn(f);
    if (*met) return cmd_metrics(f);
    if (*deg) return cmd_degree(f);
    if (*exp) return cmd_experiment(f);
    if (*plots) return cmd_emit_plots(f);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
