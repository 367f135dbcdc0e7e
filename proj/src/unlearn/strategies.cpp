#include <algorithm>
#include <optional>
#include <cmath>
#include <string>

#include "fit.hpp"
#include "ulab/error.hpp"
#include "ulab/metrics.hpp"
#include "ulab/propagate.hpp"
#include "ulab/rng.hpp"
#include "ulab/simd.hpp"
#include "ulab/unlearn.hpp"

namespace ulab::unlearn {

std::string_view guidance_name(Guidance g) {
  return g == Guidance::source_model ? "source" : "retrained";
}

Guidance parse_guidance(std::string_view text) {
  if (text == "source") return Guidance::source_model;
  if (text == "retrained") return Guidance::retrained_model;
  throw ConfigError("unknown guidance '" + std::string(text) + "'");
}

void UnlearnConfig::validate() const {
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
  if (!std::isfinite(epsilon)) throw ConfigError("epsilon must be finite");
  if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (convergence.patience < 1) throw ConfigError("patience must be >= 1");
  if (!(convergence.min_delta >= 0.0)) throw ConfigError("min accuracy delta must be >= 0");
  if (sensitivity_batch < 1) throw ConfigError("sensitivity_batch must be >= 1");
  for (const auto* opt : {&optimizer, &baseline_optimizer, &retrain_optimizer}) {
    if (!(opt->learning_rate >= 0.0)) throw ConfigError("learning rates must be >= 0");
  }
}

namespace {

struct SplitData {
  data::Dataset remain;
  data::Dataset unlearn;
};

SplitData materialize(const data::Dataset& ds, const data::DatasetSplit& split) {
  if (split.unlearn_indices.empty() || split.remain_indices.empty()) {
    throw DomainError("split must have non-empty D_UL and D_RE");
  }
  return {data::subset(ds, split.remain_indices), data::subset(ds, split.unlearn_indices)};
}

detail::FitSpec base_spec(const SplitData& parts, const UnlearnConfig& config) {
  detail::FitSpec spec;
  spec.remain_x = &parts.remain.features;
  spec.remain_y = parts.remain.labels;
  spec.unlearn_x = &parts.unlearn.features;
  spec.unlearn_y = parts.unlearn.labels;
  spec.max_epochs = config.max_epochs;
  spec.batch_size = config.batch_size;
  spec.convergence = config.convergence;
  spec.seed = config.seed;
  return spec;
}

void finish(UnlearnOutcome& out, detail::FitResult&& fit) {
  out.epochs_run = fit.epochs_run;
  out.initial = fit.initial;
  out.trace = std::move(fit.trace);
  const EpochRecord& last = out.trace.empty() ? out.initial : out.trace.back();
  out.acc_re = last.acc_re;
  out.acc_ul = last.acc_ul;
}

}  // namespace

UnlearnOutcome unlearn_finetune(const nn::Network& source, const data::Dataset& ds,
                                const data::DatasetSplit& split, const UnlearnConfig& config,
                                const PerturbationPlan& plan, const nn::Network* guide) {
  config.validate();
  const SplitData parts = materialize(ds, split);

  UnlearnOutcome out;
  out.strategy = plan.strategy;
  out.epsilon = plan.epsilon;
  out.lambda = config.lambda;
  out.selected = plan.selected;
  out.perturbed_count = plan.selected.size();

  Stopwatch clock;
  clock.start();
  out.model = source;
  out.model.params() = perturb(source.params(), plan);
  const nn::ParameterMask mask = nn::ParameterMask::from_indices(out.model.params(), plan.selected);
  const Matrix guide_probs = nn::forward(guide != nullptr ? *guide : source, parts.unlearn.features);

  detail::FitSpec spec = base_spec(parts, config);
  spec.guide_probs = &guide_probs;
  spec.lambda = config.lambda;
  spec.mask = &mask;
  spec.optimizer = config.optimizer;
  detail::FitResult fit = detail::fit(out.model, spec, clock);
  clock.pause();
  out.wall_time_s = clock.seconds();
  finish(out, std::move(fit));
  return out;
}

UnlearnOutcome run_baseline(Strategy kind, const nn::Network& source, const data::Dataset& ds,
                            const data::DatasetSplit& split, const UnlearnConfig& config) {
  config.validate();
  if (is_perturbation_strategy(kind)) throw DomainError("run_baseline takes eu-k, cf-k or retrain");
  const std::size_t depth = source.depth();
  if (kind != Strategy::retrain && (config.layers_k < 1 || config.layers_k > depth)) {
    throw DomainError("layer count K=" + std::to_string(config.layers_k) + " must lie in [1, " +
                      std::to_string(depth) + "]");
  }
  const SplitData parts = materialize(ds, split);
  // Reported only; baselines train on pure cross-entropy.
  const Matrix guide_probs = nn::forward(source, parts.unlearn.features);

  UnlearnOutcome out;
  out.strategy = kind;
  out.lambda = 0.0;
  detail::FitSpec spec = base_spec(parts, config);
  spec.guide_probs = &guide_probs;
  spec.lambda = 0.0;

  Stopwatch clock;
  clock.start();
  std::optional<nn::ParameterMask> mask;
  if (kind == Strategy::retrain) {
    out.model = nn::init_random(source.shape(), derive_seed(config.seed, detail::kStreamInit));
    out.perturbed_count = out.model.parameter_count();
    spec.optimizer = config.retrain_optimizer;
  } else {
    out.model = source;
    out.k_or_K = static_cast<double>(config.layers_k);
    const std::size_t first = depth - config.layers_k;
    if (kind == Strategy::eu_k) {
      Rng rng(derive_seed(config.seed, detail::kStreamInit));
      nn::reinit_layers(out.model, first, rng);
    }
    mask = nn::ParameterMask::trailing_layers(out.model.params(), first);
    out.perturbed_count = mask->count();
    spec.mask = &*mask;
    spec.optimizer = config.baseline_optimizer;
  }
  detail::FitResult fit = detail::fit(out.model, spec, clock);
  clock.pause();
  out.wall_time_s = clock.seconds();
  finish(out, std::move(fit));
  return out;
}

std::size_t sensitivity_sample(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw DomainError("no samples to pick from");
  Rng rng(seed);
  return rng.permutation(n).front();
}

SensitivityMap source_sensitivity(const nn::Network& source, const data::Dataset& ds, const UnlearnConfig& config) {
  Rng rng(derive_seed(config.seed, detail::kStreamSample));
  const std::vector<std::size_t> order = rng.permutation(ds.size());
  const std::size_t count =
      config.sample_policy == SamplePolicy::single_sample ? 1 : std::min(config.sensitivity_batch, ds.size());
  const std::span<const std::size_t> head(order.data(), count);
  const data::Dataset picked = data::subset(ds, head);
  return sensitivity(source, picked.features, picked.labels, config.sample_policy);
}

UnlearnOutcome run_strategy(Strategy kind, const nn::Network& source, const data::Dataset& ds,
                            const data::DatasetSplit& split, const UnlearnConfig& config,
                            const nn::Network* guide) {
  if (!is_perturbation_strategy(kind)) return run_baseline(kind, source, ds, split, config);
  config.validate();
  const std::uint64_t select_seed = derive_seed(config.seed, detail::kStreamSelect);
  PerturbationPlan plan;
  std::optional<double> k_or_K;
  switch (kind) {
    case Strategy::top_k:
      plan = select_top_k(source_sensitivity(source, ds, config), config.top_k);
      k_or_K = static_cast<double>(config.top_k);
      break;
    case Strategy::random_k:
      plan = select_random_k(source.parameter_count(), config.random_k, select_seed);
      k_or_K = config.random_k;
      break;
    default:
      plan = select_mixed(source_sensitivity(source, ds, config), config.top_k, config.random_k, select_seed);
      k_or_K = config.random_k;
      break;
  }
  plan.epsilon = config.epsilon;
  UnlearnOutcome out = unlearn_finetune(source, ds, split, config, plan, guide);
  out.k_or_K = k_or_K;
  return out;
}

double gradient_norm_gap(const nn::Network& net, const data::Dataset& ds, const data::DatasetSplit& split) {
  auto mean_sq_norm = [&](const std::vector<std::size_t>& rows) {
    if (rows.empty()) throw DomainError("gradient_norm_gap needs non-empty D_UL and D_RE");
    Matrix x(1, ds.dims());
    double total = 0.0;
    for (std::size_t r : rows) {
      std::copy_n(ds.features.row(r).begin(), ds.dims(), x.data.begin());
      const int y = ds.labels[r];
      const nn::GradientRecord g = nn::backward(net, x, std::span<const int>(&y, 1));
      total += simd::sum_squares(g.grads);
    }
    return total / static_cast<double>(rows.size());
  };
  return mean_sq_norm(split.unlearn_indices) - mean_sq_norm(split.remain_indices);
}

std::vector<double> train(nn::Network& net, const data::Dataset& ds, const TrainConfig& config) {
  if (ds.size() == 0) throw DomainError("cannot train on an empty dataset");
  if (config.batch_size == 0) throw ConfigError("batch_size must be positive");
  nn::Optimizer optimizer(config.optimizer, net.parameter_count());
  nn::GradientRecord grads;
  grads.grads.assign(net.parameter_count(), 0.0);
  std::vector<int> labels;
  std::vector<double> losses;
  const std::uint64_t base = derive_seed(config.seed, detail::kStreamTrain);
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    Rng rng(derive_seed(base, epoch));
    const std::vector<std::size_t> order = rng.permutation(ds.size());
    double loss = 0.0;
    for (std::size_t begin = 0; begin < ds.size(); begin += config.batch_size) {
      const std::size_t count = std::min(config.batch_size, ds.size() - begin);
      Matrix batch(count, ds.dims());
      labels.resize(count);
      for (std::size_t i = 0; i < count; ++i) {
        std::copy_n(ds.features.row(order[begin + i]).begin(), ds.dims(), batch.row(i).begin());
        labels[i] = ds.labels[order[begin + i]];
      }
      std::fill(grads.grads.begin(), grads.grads.end(), 0.0);
      const nn::ForwardTrace trace = nn::forward_trace(net, batch);
      Matrix probs = trace.outputs.back();
      nn::softmax_rows(probs);
      loss += nn::cross_entropy(probs, labels) * static_cast<double>(count);
      nn::backpropagate(net, trace, nn::cross_entropy_logit_grad(probs, labels), nullptr, grads.grads);
      optimizer.step(net.params(), grads);
    }
    losses.push_back(loss / static_cast<double>(ds.size()));
  }
  return losses;
}

}  // namespace ulab::unlearn
