#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ulab/mask.hpp"
#include "ulab/optimizer.hpp"
#include "ulab/stopwatch.hpp"
#include "ulab/unlearn.hpp"

namespace ulab::unlearn::detail {

// Seed streams derived from UnlearnConfig::seed.
enum Stream : std::uint64_t {
  kStreamSample = 1,
  kStreamSelect = 2,
  kStreamFit = 3,
  kStreamInit = 4,
  kStreamTrain = 5,
};

struct FitSpec {
  const Matrix* remain_x = nullptr;
  std::span<const int> remain_y;
  const Matrix* unlearn_x = nullptr;
  std::span<const int> unlearn_y;
  const Matrix* guide_probs = nullptr;  // guide model's distribution on D_UL
  double lambda = 0.0;                  // 0 disables the JS gradient (it is still reported)
  const nn::ParameterMask* mask = nullptr;
  nn::OptimizerSpec optimizer;
  std::size_t max_epochs = 1;
  std::size_t batch_size = 64;
  ConvergenceSpec convergence;
  std::uint64_t seed = 0;
};

struct FitResult {
  std::size_t epochs_run = 0;
  EpochRecord initial;
  std::vector<EpochRecord> trace;
};

// Evaluation passes run with `clock` paused; only the training steps count.
FitResult fit(nn::Network& net, const FitSpec& spec, Stopwatch& clock);

EpochRecord evaluate(const nn::Network& net, const FitSpec& spec);

}  // namespace ulab::unlearn::detail
