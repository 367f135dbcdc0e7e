#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ulab/data.hpp"
#include "ulab/network.hpp"
#include "ulab/optimizer.hpp"

namespace ulab::degree {

// Dense autoencoder: input -> hidden -> bottleneck -> hidden -> input with
// leaky-ReLU encoder, ReLU decoder and a tanh output scaled by max_noise.
struct GeneratorArch {
  std::size_t hidden = 64;
  std::size_t bottleneck = 16;
};

nn::NetworkShape generator_shape(std::size_t input_dim, const GeneratorArch& arch);

class Generator {
 public:
  Generator(std::size_t input_dim, double max_noise, const GeneratorArch& arch, std::uint64_t seed);
  // Wraps an existing autoencoder; its output dim must equal its input dim.
  Generator(nn::Network net, double max_noise);

  // Every entry lies in [-max_noise, max_noise]. max_noise may be 0.
  Matrix noise(const Matrix& batch) const;

  nn::Network& network() { return net_; }
  const nn::Network& network() const { return net_; }
  double max_noise() const { return max_noise_; }
  std::size_t input_dim() const { return net_.input_dim(); }

 private:
  nn::Network net_;
  double max_noise_;
};

struct DegreeConfig {
  double eta = 0.03;
  std::size_t epochs = 30;
  std::size_t batch_size = 64;
  double max_noise = 0.1;
  double tolerance = 0.05;
  nn::OptimizerSpec optimizer{nn::OptimizerKind::adam, 1e-3};
  GeneratorArch arch;
  std::uint64_t seed = 0;

  // Throws ConfigError.
  void validate() const;
};

// D_p = D_UL + G(D_UL), clamped to [0,1] for unit-range data. Throws
// ShapeError on a dimension mismatch.
Matrix perturb_data(const Generator& gen, const Matrix& batch, data::Scaling scaling);

struct GeneratorTraining {
  Generator generator;
  std::vector<double> loss_trace;  // per-epoch mean of CE(M) - eta * CE(M_UL)
};

// Trains a fresh generator against the frozen pair (source, unlearned),
// minimising CE(M(D_p), Y) - eta * CE(M_UL(D_p), Y). Throws NumericError when
// an epoch loss drops below -50 (runaway).
GeneratorTraining train_generator(const nn::Network& source, const nn::Network& unlearned,
                                  const data::Dataset& unlearn_set, const DegreeConfig& config);
// Same loop on a caller-supplied generator (updated in place).
std::vector<double> train_generator(Generator& gen, const nn::Network& source, const nn::Network& unlearned,
                                    const data::Dataset& unlearn_set, const DegreeConfig& config);

inline constexpr double kDivergenceFloor = -50.0;

struct DegreeReport {
  double degree = 0.0;  // acc_m_on_dp - acc_mul_on_dp
  double acc_m_on_dp = 0.0;
  double acc_m_on_dul = 0.0;
  double acc_mul_on_dp = 0.0;
  double acc_mul_on_dre = 0.0;
  bool constraint_satisfied = false;  // |acc_m_on_dp - acc_m_on_dul| <= tolerance
  bool in_expected_range = true;      // degree within [0, 1 - 1/C]; never clamped
  double tolerance = 0.0;
  std::size_t class_count = 0;
  std::size_t perturbed_samples = 0;
  double noise_max_abs = 0.0;  // before clamping
  double noise_mean_abs = 0.0;
  std::vector<double> loss_trace;
};

DegreeReport evaluate_degree(const nn::Network& source, const nn::Network& unlearned, const Generator& gen,
                             const data::Dataset& unlearn_set, const data::Dataset& remain_set, double tolerance);

std::string degree_report_to_json(const DegreeReport& report);

// First `limit` samples before and after perturbation:
// sample,label,stage,f0..f{d-1} with stage in {before, after}.
void write_perturbed_dump(const std::filesystem::path& path, const Matrix& before, const Matrix& after,
                          const std::vector<int>& labels, std::size_t limit = 16);

}  // namespace ulab::degree
