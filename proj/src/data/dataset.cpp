#include <cmath>
#include <string>

#include "ulab/data.hpp"
#include "ulab/error.hpp"
#include "ulab/rng.hpp"

namespace ulab::data {

void Dataset::validate() const {
  if (features.rows != labels.size()) {
    throw ConsistencyError("feature rows (" + std::to_string(features.rows) + ") and labels (" +
                           std::to_string(labels.size()) + ") differ");
  }
  if (class_count < 2) throw DomainError("class_count must be at least 2");
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= class_count) {
      throw DomainError("label " + std::to_string(y) + " outside [0, " + std::to_string(class_count) + ")");
    }
  }
  for (double v : features.data) {
    if (!std::isfinite(v)) throw NumericError("dataset contains a non-finite feature");
  }
}

Dataset subset(const Dataset& ds, std::span<const std::size_t> indices) {
  Dataset out;
  out.features = gather_rows(ds.features, indices);
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) out.labels.push_back(ds.labels[i]);
  out.class_count = ds.class_count;
  out.scaling = ds.scaling;
  return out;
}

Dataset generate_blobs(const BlobSpec& spec) {
  if (spec.class_count < 2) throw DomainError("generate_blobs: class_count must be >= 2");
  if (spec.per_class < 1) throw DomainError("generate_blobs: per_class must be >= 1");
  if (spec.dims < 1) throw DomainError("generate_blobs: dims must be >= 1");
  if (!(spec.spread > 0.0)) throw DomainError("generate_blobs: spread must be > 0");

  Rng rng(spec.seed);
  const double radius = 4.0 * spec.spread;
  Matrix centers(spec.class_count, spec.dims);
  for (std::size_t c = 0; c < spec.class_count; ++c) {
    double norm = 0.0;
    while (norm == 0.0) {
      norm = 0.0;
      for (double& v : centers.row(c)) {
        v = rng.normal();
        norm += v * v;
      }
      norm = std::sqrt(norm);
    }
    for (double& v : centers.row(c)) v *= radius / norm;
  }

  Dataset ds;
  ds.class_count = spec.class_count;
  ds.scaling = Scaling::raw;
  ds.features = Matrix(spec.class_count * spec.per_class, spec.dims);
  ds.labels.reserve(spec.class_count * spec.per_class);
  std::size_t r = 0;
  for (std::size_t c = 0; c < spec.class_count; ++c) {
    for (std::size_t i = 0; i < spec.per_class; ++i, ++r) {
      auto row = ds.features.row(r);
      for (std::size_t d = 0; d < spec.dims; ++d) row[d] = centers(c, d) + spec.spread * rng.normal();
      ds.labels.push_back(static_cast<int>(c));
    }
  }
  return ds;
}

DatasetSplit split(const Dataset& ds, double unlearn_ratio, std::uint64_t seed) {
  if (!(unlearn_ratio > 0.0 && unlearn_ratio < 1.0)) throw DomainError("unlearn ratio must lie in (0, 1)");
  const std::size_t n = ds.size();
  const auto count = static_cast<std::size_t>(std::llround(unlearn_ratio * static_cast<double>(n)));
  if (count == 0 || count >= n) {
    throw DomainError("unlearn ratio " + std::to_string(unlearn_ratio) + " leaves an empty split for n=" +
                      std::to_string(n));
  }
  Rng rng(seed);
  std::vector<std::size_t> order = rng.permutation(n);
  std::vector<std::uint8_t> chosen(n, 0);
  for (std::size_t i = 0; i < count; ++i) chosen[order[i]] = 1;

  DatasetSplit out;
  out.unlearn_ratio = unlearn_ratio;
  out.seed = seed;
  out.unlearn_indices.reserve(count);
  out.remain_indices.reserve(n - count);
  for (std::size_t i = 0; i < n; ++i) {
    (chosen[i] != 0 ? out.unlearn_indices : out.remain_indices).push_back(i);
  }
  return out;
}

}  // namespace ulab::data
