#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ulab/error.hpp"
#include "ulab/propagate.hpp"
#include "ulab/rng.hpp"
#include "ulab/unlearn.hpp"

namespace ulab::unlearn {

std::string_view policy_name(SamplePolicy policy) {
  return policy == SamplePolicy::single_sample ? "single-sample" : "batch-mean";
}

SamplePolicy parse_policy(std::string_view text) {
  if (text == "single-sample") return SamplePolicy::single_sample;
  if (text == "batch-mean") return SamplePolicy::batch_mean;
  throw ConfigError("unknown sample policy '" + std::string(text) + "'");
}

std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::top_k:
      return "top-k";
    case Strategy::random_k:
      return "random-k";
    case Strategy::mixed:
      return "mixed";
    case Strategy::eu_k:
      return "eu-k";
    case Strategy::cf_k:
      return "cf-k";
    case Strategy::retrain:
      return "retrain";
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view text) {
  for (Strategy s : {Strategy::top_k, Strategy::random_k, Strategy::mixed, Strategy::eu_k, Strategy::cf_k,
                     Strategy::retrain}) {
    if (strategy_name(s) == text) return s;
  }
  throw ConfigError("unknown strategy '" + std::string(text) + "'");
}

bool is_perturbation_strategy(Strategy s) {
  return s == Strategy::top_k || s == Strategy::random_k || s == Strategy::mixed;
}

SensitivityMap sensitivity(const nn::Network& net, const Matrix& batch, std::span<const int> labels,
                           SamplePolicy policy) {
  if (batch.rows == 0) throw ShapeError("sensitivity needs at least one sample");
  if (policy == SamplePolicy::single_sample && batch.rows != 1) {
    throw ShapeError("single-sample sensitivity takes exactly one row");
  }
  nn::GradientRecord g = nn::backward(net, batch, labels);
  SensitivityMap out;
  out.policy = policy;
  out.scores = std::move(g.grads);
  for (double& s : out.scores) s = std::fabs(s);
  return out;
}

std::size_t random_count(std::size_t parameter_count, double ratio) {
  return static_cast<std::size_t>(std::llround(ratio * static_cast<double>(parameter_count)));
}

namespace {

// Indices ordered by descending score, lower index first on ties.
std::vector<std::size_t> ranked_head(const std::vector<double>& scores, std::size_t count) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto better = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count), order.end(), better);
  order.resize(count);
  return order;
}

}  // namespace

PerturbationPlan select_top_k(const SensitivityMap& sens, std::size_t top_k) {
  const std::size_t n = sens.scores.size();
  if (top_k < 1 || top_k > n) {
    throw DomainError("Top-K needs 1 <= K <= N (K=" + std::to_string(top_k) + ", N=" + std::to_string(n) + ")");
  }
  PerturbationPlan plan;
  plan.strategy = Strategy::top_k;
  plan.parameter_count = n;
  plan.selected = ranked_head(sens.scores, top_k);
  std::sort(plan.selected.begin(), plan.selected.end());
  return plan;
}

PerturbationPlan select_random_k(std::size_t parameter_count, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw DomainError("Random-k ratio must lie in (0, 1)");
  const std::size_t count = random_count(parameter_count, ratio);
  if (count == 0) throw DomainError("Random-k selects no parameters: round(k*N) = 0");
  Rng rng(seed);
  std::vector<std::size_t> order = rng.permutation(parameter_count);
  PerturbationPlan plan;
  plan.strategy = Strategy::random_k;
  plan.parameter_count = parameter_count;
  plan.selected.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count));
  std::sort(plan.selected.begin(), plan.selected.end());
  return plan;
}

PerturbationPlan select_mixed(const SensitivityMap& sens, std::size_t top_k, double ratio, std::uint64_t seed) {
  const std::size_t n = sens.scores.size();
  if (!(ratio > 0.0 && ratio < 1.0)) throw DomainError("mixed ratio must lie in (0, 1)");
  const std::size_t total = random_count(n, ratio);
  if (total == 0) throw DomainError("mixed selection is empty: round(k*N) = 0");
  if (top_k > total) {
    throw DomainError("mixed needs K <= round(k*N) (K=" + std::to_string(top_k) + ", round(k*N)=" +
                      std::to_string(total) + ")");
  }
  std::vector<std::uint8_t> taken(n, 0);
  PerturbationPlan plan;
  plan.strategy = Strategy::mixed;
  plan.parameter_count = n;
  if (top_k > 0) {
    for (std::size_t i : ranked_head(sens.scores, top_k)) {
      taken[i] = 1;
      plan.selected.push_back(i);
    }
  }
  // Same permutation stream as select_random_k, skipping Top-K members.
  Rng rng(seed);
  const std::vector<std::size_t> order = rng.permutation(n);
  for (std::size_t i : order) {
    if (plan.selected.size() == total) break;
    if (taken[i] == 0) plan.selected.push_back(i);
  }
  std::sort(plan.selected.begin(), plan.selected.end());
  return plan;
}

nn::ParameterStore perturb(const nn::ParameterStore& params, const PerturbationPlan& plan) {
  if (plan.parameter_count != 0 && plan.parameter_count != params.size()) {
    throw ShapeError("perturbation plan was built for a different parameter count");
  }
  nn::ParameterStore out = params;
  for (std::size_t i : plan.selected) {
    if (i >= out.size()) throw DomainError("perturbation index out of range");
    out[i] = out[i] + plan.epsilon * out[i];
  }
  return out;
}

}  // namespace ulab::unlearn
