#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "ulab/degree.hpp"
#include "ulab/error.hpp"
#include "ulab/metrics.hpp"
#include "ulab/optimizer.hpp"
#include "ulab/propagate.hpp"
#include "ulab/rng.hpp"

namespace ulab::degree {

void DegreeConfig::validate() const {
  if (!std::isfinite(eta) || eta < 0.0) throw ConfigError("eta must be non-negative");
  if (epochs == 0) throw ConfigError("degree epochs must be >= 1");
  if (batch_size == 0) throw ConfigError("degree batch size must be >= 1");
  if (!std::isfinite(max_noise) || max_noise <= 0.0) throw ConfigError("max_noise must be positive");
  if (!(tolerance > 0.0 && tolerance < 1.0)) throw ConfigError("tolerance must lie in (0,1)");
  if (!(optimizer.learning_rate >= 0.0)) throw ConfigError("learning rate must be non-negative");
  if (arch.hidden == 0 || arch.bottleneck == 0) throw ConfigError("generator dimensions must be positive");
}

namespace {

void check_pair(const nn::Network& source, const nn::Network& unlearned, const data::Dataset& ds) {
  if (source.shape() != unlearned.shape()) throw ShapeError("source and unlearned models differ in shape");
  if (ds.dims() != source.input_dim()) throw ShapeError("dataset dims do not match the model input");
  if (ds.size() == 0) throw DomainError("unlearn set is empty");
}

// CE of `net` on `x` and its gradient with respect to `x`.
double input_gradient(const nn::Network& net, const Matrix& x, std::span<const int> y,
                      const nn::ParameterMask& frozen, std::vector<double>& scratch, Matrix& dx) {
  nn::ForwardTrace trace = nn::forward_trace(net, x);
  Matrix probs = trace.outputs.back();
  nn::softmax_rows(probs);
  const double ce = nn::cross_entropy(probs, y);
  nn::backpropagate(net, trace, nn::cross_entropy_logit_grad(probs, y), &frozen, scratch, &dx);
  return ce;
}

}  // namespace

std::vector<double> train_generator(Generator& gen, const nn::Network& source, const nn::Network& unlearned,
                                    const data::Dataset& unlearn_set, const DegreeConfig& config) {
  config.validate();
  check_pair(source, unlearned, unlearn_set);
  if (gen.input_dim() != unlearn_set.dims()) throw ShapeError("generator input dim mismatch");
  nn::check_labels(unlearn_set.labels, source.class_count());

  const nn::ParameterMask frozen = nn::ParameterMask::none(source.params());
  std::vector<double> scratch(source.parameter_count(), 0.0);
  nn::Network& g = gen.network();
  nn::Optimizer opt(config.optimizer, g.parameter_count());
  nn::GradientRecord grads;
  grads.grads.assign(g.parameter_count(), 0.0);
  Rng rng(config.seed);
  const double delta = gen.max_noise();
  const bool unit = unlearn_set.scaling == data::Scaling::unit_range;
  const std::size_t n = unlearn_set.size();

  std::vector<double> trace;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const std::vector<std::size_t> order = rng.permutation(n);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t end = std::min(n, start + config.batch_size);
      std::span<const std::size_t> idx(order.data() + start, end - start);
      const Matrix x = gather_rows(unlearn_set.features, idx);
      std::vector<int> y(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) y[i] = unlearn_set.labels[idx[i]];

      nn::ForwardTrace gtrace = nn::forward_trace(g, x);
      const Matrix& out = gtrace.outputs.back();
      Matrix dp(x.rows, x.cols);
      std::vector<std::uint8_t> clamped(x.data.size(), 0);
      for (std::size_t i = 0; i < x.data.size(); ++i) {
        double v = x.data[i] + delta * out.data[i];
        if (unit && (v < 0.0 || v > 1.0)) {
          v = std::clamp(v, 0.0, 1.0);
          clamped[i] = 1;
        }
        dp.data[i] = v;
      }

      Matrix dx_m;
      Matrix dx_u;
      const double ce_m = input_gradient(source, dp, y, frozen, scratch, dx_m);
      const double ce_u = input_gradient(unlearned, dp, y, frozen, scratch, dx_u);
      const double loss = ce_m - config.eta * ce_u;
      if (!std::isfinite(loss)) {
        throw NumericError("generator epoch " + std::to_string(epoch + 1) + ": non-finite loss");
      }
      loss_sum += loss * static_cast<double>(idx.size());

      Matrix dout(x.rows, x.cols);
      for (std::size_t i = 0; i < dout.data.size(); ++i) {
        dout.data[i] = clamped[i] ? 0.0 : delta * (dx_m.data[i] - config.eta * dx_u.data[i]);
      }
      std::fill(grads.grads.begin(), grads.grads.end(), 0.0);
      nn::backpropagate(g, gtrace, std::move(dout), nullptr, grads.grads);
      opt.step(g.params(), grads);
    }
    const double epoch_loss = loss_sum / static_cast<double>(n);
    trace.push_back(epoch_loss);
    if (epoch_loss < kDivergenceFloor) {
      throw NumericError("generator epoch " + std::to_string(epoch + 1) + ": loss " +
                         std::to_string(epoch_loss) + " fell below the divergence floor");
    }
  }
  return trace;
}

GeneratorTraining train_generator(const nn::Network& source, const nn::Network& unlearned,
                                  const data::Dataset& unlearn_set, const DegreeConfig& config) {
  config.validate();
  Generator gen(unlearn_set.dims(), config.max_noise, config.arch, derive_seed(config.seed, 4));
  std::vector<double> trace = train_generator(gen, source, unlearned, unlearn_set, config);
  return {std::move(gen), std::move(trace)};
}

DegreeReport evaluate_degree(const nn::Network& source, const nn::Network& unlearned, const Generator& gen,
                             const data::Dataset& unlearn_set, const data::Dataset& remain_set, double tolerance) {
  check_pair(source, unlearned, unlearn_set);
  if (remain_set.dims() != source.input_dim()) throw ShapeError("remain set dims do not match the model input");
  const Matrix noise = gen.noise(unlearn_set.features);
  Matrix dp(noise.rows, noise.cols);
  DegreeReport r;
  for (std::size_t i = 0; i < noise.data.size(); ++i) {
    const double a = std::abs(noise.data[i]);
    r.noise_max_abs = std::max(r.noise_max_abs, a);
    r.noise_mean_abs += a;
    double v = unlearn_set.features.data[i] + noise.data[i];
    if (unlearn_set.scaling == data::Scaling::unit_range) v = std::clamp(v, 0.0, 1.0);
    dp.data[i] = v;
  }
  if (!noise.data.empty()) r.noise_mean_abs /= static_cast<double>(noise.data.size());

  r.acc_m_on_dp = metrics::accuracy(source, dp, unlearn_set.labels);
  r.acc_m_on_dul = metrics::accuracy(source, unlearn_set.features, unlearn_set.labels);
  r.acc_mul_on_dp = metrics::accuracy(unlearned, dp, unlearn_set.labels);
  r.acc_mul_on_dre = remain_set.size() == 0 ? 0.0 : metrics::accuracy(unlearned, remain_set);
  r.degree = r.acc_m_on_dp - r.acc_mul_on_dp;
  r.tolerance = tolerance;
  r.constraint_satisfied = std::abs(r.acc_m_on_dp - r.acc_m_on_dul) <= tolerance;
  r.class_count = source.class_count();
  const double upper = 1.0 - 1.0 / static_cast<double>(r.class_count);
  r.in_expected_range = r.degree >= 0.0 && r.degree <= upper;
  r.perturbed_samples = unlearn_set.size();
  return r;
}

std::string degree_report_to_json(const DegreeReport& r) {
  nlohmann::ordered_json doc;
  doc["degree"] = r.degree;
  doc["acc_m_on_dp"] = r.acc_m_on_dp;
  doc["acc_m_on_dul"] = r.acc_m_on_dul;
  doc["acc_mul_on_dp"] = r.acc_mul_on_dp;
  doc["acc_mul_on_dre"] = r.acc_mul_on_dre;
  doc["constraint_satisfied"] = r.constraint_satisfied;
  doc["tolerance"] = r.tolerance;
  doc["in_expected_range"] = r.in_expected_range;
  doc["class_count"] = r.class_count;
  doc["dp_stats"] = {{"samples", r.perturbed_samples},
                     {"noise_max_abs", r.noise_max_abs},
                     {"noise_mean_abs", r.noise_mean_abs}};
  doc["generator_loss_trace"] = r.loss_trace;
  return doc.dump(2) + "\n";
}

void write_perturbed_dump(const std::filesystem::path& path, const Matrix& before, const Matrix& after,
                          const std::vector<int>& labels, std::size_t limit) {
  if (before.rows != after.rows || before.cols != after.cols || labels.size() != before.rows) {
    throw ShapeError("perturbed dump shape mismatch");
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "sample,label,stage";
  for (std::size_t c = 0; c < before.cols; ++c) out << ",f" << c;
  out << '\n';
  out.precision(17);
  const std::size_t rows = std::min(limit, before.rows);
  for (std::size_t s = 0; s < rows; ++s) {
    for (int stage = 0; stage < 2; ++stage) {
      const Matrix& m = stage == 0 ? before : after;
      out << s << ',' << labels[s] << ',' << (stage == 0 ? "before" : "after");
      for (double v : m.row(s)) out << ',' << v;
      out << '\n';
    }
  }
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace ulab::degree
