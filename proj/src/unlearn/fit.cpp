#include "fit.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ulab/error.hpp"
#include "ulab/metrics.hpp"
#include "ulab/propagate.hpp"
#include "ulab/rng.hpp"

namespace ulab::unlearn::detail {
namespace {

double label_accuracy(const Matrix& probs, std::span<const int> labels) {
  std::size_t correct = 0;
  for (std::size_t r = 0; r < probs.rows; ++r) {
    if (static_cast<int>(metrics::argmax(probs.row(r))) == labels[r]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(probs.rows);
}

Matrix gather(const Matrix& x, std::span<const std::size_t> order, std::size_t begin, std::size_t count,
              std::vector<int>& labels_out, std::span<const int> labels) {
  Matrix batch(count, x.cols);
  labels_out.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t src = order[(begin + i) % order.size()];
    std::copy_n(x.row(src).begin(), x.cols, batch.row(i).begin());
    labels_out[i] = labels[src];
  }
  return batch;
}

}  // namespace

EpochRecord evaluate(const nn::Network& net, const FitSpec& spec) {
  EpochRecord rec;
  const Matrix re = nn::forward(net, *spec.remain_x);
  rec.ce = nn::cross_entropy(re, spec.remain_y);
  rec.acc_re = label_accuracy(re, spec.remain_y);
  const Matrix ul = nn::forward(net, *spec.unlearn_x);
  rec.acc_ul = label_accuracy(ul, spec.unlearn_y);
  rec.js = spec.guide_probs != nullptr ? mean_js(ul, *spec.guide_probs) : 0.0;
  return rec;
}

FitResult fit(nn::Network& net, const FitSpec& spec, Stopwatch& clock) {
  const std::size_t n_re = spec.remain_x->rows;
  const std::size_t n_ul = spec.unlearn_x->rows;
  if (n_re == 0 || n_ul == 0) throw DomainError("fine-tuning needs non-empty D_RE and D_UL");
  if (spec.batch_size == 0) throw ConfigError("batch_size must be positive");
  const bool use_js = spec.lambda > 0.0;
  if (use_js && spec.guide_probs == nullptr) throw ConfigError("JS term requested without guide distributions");

  // One pass over D_UL per epoch alongside one pass over D_RE.
  const std::size_t ul_batch = std::clamp<std::size_t>(
      (spec.batch_size * n_ul + n_re - 1) / n_re, std::size_t{1}, n_ul);

  FitResult result;
  clock.pause();
  result.initial = evaluate(net, spec);
  clock.resume();

  nn::Optimizer optimizer(spec.optimizer, net.parameter_count());
  nn::GradientRecord grads;
  grads.source = nn::GradientSource::batch_mean;
  grads.grads.assign(net.parameter_count(), 0.0);
  std::vector<int> batch_labels;
  std::vector<int> ul_labels;

  double best = result.initial.acc_re;
  std::size_t stale = 0;
  const std::uint64_t fit_seed = derive_seed(spec.seed, kStreamFit);

  for (std::size_t epoch = 1; epoch <= spec.max_epochs; ++epoch) {
    try {
      Rng rng(derive_seed(fit_seed, epoch));
      const std::vector<std::size_t> order = rng.permutation(n_re);
      const std::vector<std::size_t> ul_order = use_js ? rng.permutation(n_ul) : std::vector<std::size_t>{};
      std::size_t ul_cursor = 0;

      for (std::size_t begin = 0; begin < n_re; begin += spec.batch_size) {
        const std::size_t count = std::min(spec.batch_size, n_re - begin);
        if (spec.mask == nullptr) {
          std::fill(grads.grads.begin(), grads.grads.end(), 0.0);
        } else {
          for (std::size_t i : spec.mask->indices()) grads.grads[i] = 0.0;
        }

        const Matrix batch = gather(*spec.remain_x, order, begin, count, batch_labels, spec.remain_y);
        const nn::ForwardTrace trace = nn::forward_trace(net, batch);
        Matrix probs = trace.outputs.back();
        nn::softmax_rows(probs);
        nn::backpropagate(net, trace, nn::cross_entropy_logit_grad(probs, batch_labels), spec.mask, grads.grads);

        if (use_js) {
          const Matrix ul = gather(*spec.unlearn_x, ul_order, ul_cursor, ul_batch, ul_labels, spec.unlearn_y);
          const nn::ForwardTrace ul_trace = nn::forward_trace(net, ul);
          Matrix p = ul_trace.outputs.back();
          nn::softmax_rows(p);
          Matrix dlogits(ul_batch, p.cols);
          const double scale = spec.lambda / static_cast<double>(ul_batch);
          for (std::size_t r = 0; r < ul_batch; ++r) {
            const std::size_t src = ul_order[(ul_cursor + r) % n_ul];
            add_js_logit_grad(p.row(r), spec.guide_probs->row(src), scale, dlogits.row(r));
          }
          ul_cursor = (ul_cursor + ul_batch) % n_ul;
          nn::backpropagate(net, ul_trace, std::move(dlogits), spec.mask, grads.grads);
        }
        optimizer.step(net.params(), grads, spec.mask);
      }

      clock.pause();
      const EpochRecord rec = evaluate(net, spec);
      clock.resume();
      if (!std::isfinite(rec.ce) || !std::isfinite(rec.js)) throw NumericError("non-finite loss");
      result.trace.push_back(rec);
      result.epochs_run = epoch;

      if (rec.acc_re - best >= spec.convergence.min_delta - 1e-12) {
        best = rec.acc_re;
        stale = 0;
      } else if (++stale >= spec.convergence.patience) {
        break;
      }
    } catch (const NumericError& e) {
      throw NumericError("epoch " + std::to_string(epoch) + ": " + e.what());
    }
  }
  return result;
}

}  // namespace ulab::unlearn::detail
