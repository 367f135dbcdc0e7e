#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ulab/data.hpp"
#include "ulab/network.hpp"
#include "ulab/optimizer.hpp"

namespace ulab::unlearn {

// ---------------------------------------------------------------------------
// Sensitivity and parameter selection

enum class SamplePolicy { single_sample, batch_mean };

std::string_view policy_name(SamplePolicy policy);
SamplePolicy parse_policy(std::string_view text);

struct SensitivityMap {
  std::vector<double> scores;  // |dL_CE/dw_i|, aligned with the ParameterStore
  SamplePolicy policy = SamplePolicy::single_sample;
};

// single_sample: batch must have exactly one row. batch_mean: gradients are
// averaged over the rows first, then the absolute value is taken.
SensitivityMap sensitivity(const nn::Network& net, const Matrix& batch, std::span<const int> labels,
                           SamplePolicy policy);

enum class Strategy { top_k, random_k, mixed, eu_k, cf_k, retrain };

std::string_view strategy_name(Strategy s);
Strategy parse_strategy(std::string_view text);
bool is_perturbation_strategy(Strategy s);

struct PerturbationPlan {
  std::vector<std::size_t> selected;  // ascending flat indices
  double epsilon = 0.05;
  Strategy strategy = Strategy::top_k;
  std::size_t parameter_count = 0;
};

// round(k * N)
std::size_t random_count(std::size_t parameter_count, double ratio);

// The K highest scores; ties go to the lower index. Throws DomainError unless
// 1 <= K <= N.
PerturbationPlan select_top_k(const SensitivityMap& sens, std::size_t top_k);
// round(k*N) distinct indices drawn uniformly. Throws DomainError when k is
// outside (0,1) or round(k*N) == 0.
PerturbationPlan select_random_k(std::size_t parameter_count, double ratio, std::uint64_t seed);
// All Top-K indices plus random others, round(k*N) in total. With K = 0 this
// equals select_random_k for the same seed. Throws DomainError if K > round(k*N).
PerturbationPlan select_mixed(const SensitivityMap& sens, std::size_t top_k, double ratio, std::uint64_t seed);

// w_i <- w_i + eps * w_i on the selected entries; others untouched.
nn::ParameterStore perturb(const nn::ParameterStore& params, const PerturbationPlan& plan);

// ---------------------------------------------------------------------------
// Jensen-Shannon divergence (base 2, so the result lies in [0, 1])

double js_divergence(std::span<const double> p, std::span<const double> q);
// Adds scale * dJS(softmax(z) || q)/dz to `out`, where `p` = softmax(z).
void add_js_logit_grad(std::span<const double> p, std::span<const double> q, double scale,
                       std::span<double> out);
// Mean JS divergence between matching rows.
double mean_js(const Matrix& p, const Matrix& q);

// ---------------------------------------------------------------------------
// Fine-tuning and baselines

// Which model's output distribution on D_UL the JS term is measured against.
enum class Guidance { source_model, retrained_model };

std::string_view guidance_name(Guidance g);
Guidance parse_guidance(std::string_view text);

// Stop when training accuracy on D_RE has not improved by at least
// `min_delta` (fraction, 0.001 = 0.1 points) for `patience` epochs in a row.
struct ConvergenceSpec {
  std::size_t patience = 5;
  double min_delta = 0.001;
};

struct UnlearnConfig {
  double lambda = 0.1;
  double epsilon = 0.05;
  std::size_t max_epochs = 100;
  std::size_t batch_size = 64;
  nn::OptimizerSpec optimizer{nn::OptimizerKind::adam, 1e-3};
  nn::OptimizerSpec baseline_optimizer{nn::OptimizerKind::adam, 1e-4};
  nn::OptimizerSpec retrain_optimizer{nn::OptimizerKind::adam, 1e-3};
  ConvergenceSpec convergence;
  std::size_t top_k = 45;
  double random_k = 0.05;
  std::size_t layers_k = 1;
  SamplePolicy sample_policy = SamplePolicy::single_sample;
  std::size_t sensitivity_batch = 64;
  Guidance guidance = Guidance::source_model;
  std::uint64_t seed = 0;

  // Throws ConfigError.
  void validate() const;
};

struct EpochRecord {
  double ce = 0.0;      // cross-entropy on D_RE
  double js = 0.0;      // mean JS to the guide model on D_UL, unweighted
  double acc_re = 0.0;
  double acc_ul = 0.0;
};

struct UnlearnOutcome {
  nn::Network model;
  Strategy strategy = Strategy::top_k;
  std::optional<double> k_or_K;  // K, k, or layer count; empty for retrain
  double epsilon = 0.0;
  double lambda = 0.0;
  std::size_t epochs_run = 0;
  double wall_time_s = 0.0;
  std::size_t perturbed_count = 0;
  EpochRecord initial;              // state before the first update (w' for perturbation runs)
  std::vector<EpochRecord> trace;   // one entry per epoch run
  double acc_ul = 0.0;
  double acc_re = 0.0;
  std::vector<std::size_t> selected;  // plan indices for perturbation strategies
  std::optional<double> grad_norm_gap;

  double mean_epoch_time() const { return epochs_run == 0 ? 0.0 : wall_time_s / epochs_run; }
};

// Applies the plan to a copy of `source` and fine-tunes only the selected
// parameters on D_RE, minimising CE(D_RE) + lambda * mean JS(P(theta,x)||P(guide,x))
// over D_UL. `guide` defaults to `source`. Throws NumericError (with the
// epoch index) if the loss becomes non-finite.
UnlearnOutcome unlearn_finetune(const nn::Network& source, const data::Dataset& ds,
                                const data::DatasetSplit& split, const UnlearnConfig& config,
                                const PerturbationPlan& plan, const nn::Network* guide = nullptr);

// eu-k, cf-k or retrain, pure cross-entropy on D_RE. Throws DomainError when
// the layer count exceeds the network depth (or is 0).
UnlearnOutcome run_baseline(Strategy kind, const nn::Network& source, const data::Dataset& ds,
                            const data::DatasetSplit& split, const UnlearnConfig& config);

// Full pipeline for any strategy: sensitivity/selection where needed, then
// fine-tuning or the baseline procedure.
UnlearnOutcome run_strategy(Strategy kind, const nn::Network& source, const data::Dataset& ds,
                            const data::DatasetSplit& split, const UnlearnConfig& config,
                            const nn::Network* guide = nullptr);

// Index into D of the sample used for single-sample sensitivity.
std::size_t sensitivity_sample(std::size_t n, std::uint64_t seed);
SensitivityMap source_sensitivity(const nn::Network& source, const data::Dataset& ds, const UnlearnConfig& config);

// mean over D_UL of |grad l|^2 minus mean over D_RE of |grad l|^2.
double gradient_norm_gap(const nn::Network& net, const data::Dataset& ds, const data::DatasetSplit& split);

// Fixed-length training of a fresh model on the whole dataset (the source model M).
struct TrainConfig {
  std::size_t epochs = 40;
  std::size_t batch_size = 64;
  nn::OptimizerSpec optimizer{nn::OptimizerKind::adam, 1e-3};
  std::uint64_t seed = 0;
};
// Trains `net` in place; returns the per-epoch mean training loss.
std::vector<double> train(nn::Network& net, const data::Dataset& ds, const TrainConfig& config);

// {strategy, K_or_k, epsilon, lambda, epochs_run, wall_time_s, perturbed_count,
//  loss_trace, acc_ul, acc_re, ...}. `include_timing = false` drops wall_time_s.
std::string outcome_to_json(const UnlearnOutcome& outcome, bool include_timing = true);

}  // namespace ulab::unlearn
