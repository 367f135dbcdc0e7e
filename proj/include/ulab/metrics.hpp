#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ulab/data.hpp"
#include "ulab/matrix.hpp"
#include "ulab/network.hpp"

namespace ulab::metrics {

// Index of the largest entry; the lowest index wins ties.
std::size_t argmax(std::span<const double> row);

// Fraction of rows whose argmax prediction equals the label. Throws
// DomainError on an empty set.
double accuracy(const nn::Network& net, const Matrix& features, std::span<const int> labels);
double accuracy(const nn::Network& net, const data::Dataset& ds);

// (before - after) / before. Throws UndefinedMetricError when before <= 0.
double forgetting_rate(double acc_before, double acc_after);
// after / before. Throws UndefinedMetricError when before <= 0.
double memory_retention_rate(double acc_re_before, double acc_re_after);

enum class SimilarityReference { retrained, source };
std::string_view reference_name(SimilarityReference ref);

// 1 - mean over rows of JS(reference(x) || unlearned(x)).
double similarity(const nn::Network& reference, const nn::Network& unlearned, const Matrix& unlearn_features);

// retrain / unlearn. Throws UndefinedMetricError when unlearn_time_s <= 0.
double acceleration_ratio(double retrain_time_s, double unlearn_time_s);

struct StrategyTime {
  std::string strategy;
  double unlearn_time_s = 0.0;
};

struct StrategyRatio {
  std::string strategy;
  double ratio = 0.0;
};

std::vector<StrategyRatio> acceleration(std::span<const StrategyTime> runs, double retrain_time_s);

struct MetricReport {
  std::string strategy;
  double unlearn_ratio = 0.0;
  double acc_ul_before = 0.0;
  double acc_ul_after = 0.0;
  double acc_re_before = 0.0;
  double acc_re_after = 0.0;
  double forgetting_rate = 0.0;
  double memory_retention_rate = 0.0;
  double similarity = 0.0;
  SimilarityReference reference = SimilarityReference::source;
  double unlearn_time_s = 0.0;
  std::optional<double> retrain_time_s;
  std::optional<double> acceleration_ratio;
};

inline constexpr std::string_view kMetricsCsvHeader =
    "strategy,ratio,acc_ul,acc_re,fr,mrr,similarity,unlearn_time_s,acceleration";

// 6 significant digits, '.' separator.
std::string format_metric(double v);
// One CSV line (no trailing newline). A missing acceleration is written empty.
std::string metrics_csv_row(const MetricReport& report);

}  // namespace ulab::metrics
