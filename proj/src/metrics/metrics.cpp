#include "ulab/metrics.hpp"

#include <cstdio>

#include "ulab/error.hpp"
#include "ulab/propagate.hpp"
#include "ulab/unlearn.hpp"

namespace ulab::metrics {

std::size_t argmax(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < row.size(); ++i) {
    if (row[i] > row[best]) best = i;
  }
  return best;
}

double accuracy(const nn::Network& net, const Matrix& features, std::span<const int> labels) {
  if (features.rows == 0) throw DomainError("accuracy of an empty set");
  if (labels.size() != features.rows) throw ShapeError("accuracy: label count mismatch");
  // Softmax is monotone, so the logits give the same argmax.
  const Matrix out = nn::logits(net, features);
  std::size_t correct = 0;
  for (std::size_t r = 0; r < out.rows; ++r) {
    if (static_cast<int>(argmax(out.row(r))) == labels[r]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(out.rows);
}

double accuracy(const nn::Network& net, const data::Dataset& ds) { return accuracy(net, ds.features, ds.labels); }

double forgetting_rate(double acc_before, double acc_after) {
  if (!(acc_before > 0.0)) throw UndefinedMetricError("forgetting rate undefined: accuracy before is 0");
  return (acc_before - acc_after) / acc_before;
}

double memory_retention_rate(double acc_re_before, double acc_re_after) {
  if (!(acc_re_before > 0.0)) throw UndefinedMetricError("memory retention rate undefined: accuracy before is 0");
  return acc_re_after / acc_re_before;
}

std::string_view reference_name(SimilarityReference ref) {
  return ref == SimilarityReference::retrained ? "retrained" : "source";
}

double similarity(const nn::Network& reference, const nn::Network& unlearned, const Matrix& unlearn_features) {
  if (unlearn_features.rows == 0) throw DomainError("similarity needs a non-empty D_UL");
  if (reference.class_count() != unlearned.class_count()) throw ShapeError("similarity: class counts differ");
  const Matrix p = nn::forward(reference, unlearn_features);
  const Matrix q = nn::forward(unlearned, unlearn_features);
  return 1.0 - unlearn::mean_js(p, q);
}

double acceleration_ratio(double retrain_time_s, double unlearn_time_s) {
  if (!(unlearn_time_s > 0.0)) throw UndefinedMetricError("acceleration undefined: unlearn time is 0");
  return retrain_time_s / unlearn_time_s;
}

std::vector<StrategyRatio> acceleration(std::span<const StrategyTime> runs, double retrain_time_s) {
  std::vector<StrategyRatio> out;
  out.reserve(runs.size());
  for (const auto& run : runs) out.push_back({run.strategy, acceleration_ratio(retrain_time_s, run.unlearn_time_s)});
  return out;
}

std::string format_metric(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string metrics_csv_row(const MetricReport& r) {
  std::string line = r.strategy;
  for (double v : {r.unlearn_ratio, r.acc_ul_after, r.acc_re_after, r.forgetting_rate, r.memory_retention_rate,
                   r.similarity, r.unlearn_time_s}) {
    line += ',';
    line += format_metric(v);
  }
  line += ',';
  if (r.acceleration_ratio) line += format_metric(*r.acceleration_ratio);
  return line;
}

}  // namespace ulab::metrics
