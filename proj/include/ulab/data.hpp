#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "ulab/matrix.hpp"

namespace ulab::data {

// unit_range: features in [0,1] (IDX pixels). raw: unbounded synthetic values.
enum class Scaling { unit_range, raw };

struct Dataset {
  Matrix features;
  std::vector<int> labels;
  std::size_t class_count = 0;
  Scaling scaling = Scaling::raw;

  std::size_t size() const { return labels.size(); }
  std::size_t dims() const { return features.cols; }
  // Throws ConsistencyError / DomainError / NumericError when an invariant fails.
  void validate() const;
};

Dataset subset(const Dataset& ds, std::span<const std::size_t> indices);

struct BlobSpec {
  std::size_t class_count = 10;
  std::size_t per_class = 500;
  std::size_t dims = 32;
  double spread = 0.5;
  std::uint64_t seed = 1;
};

// Balanced Gaussian clusters. Centers are seeded random directions on the unit
// hypersphere scaled to radius 4*spread; samples are center + spread * N(0, I).
// Rows are ordered class-major.
Dataset generate_blobs(const BlobSpec& spec);

struct DatasetSplit {
  std::vector<std::size_t> unlearn_indices;  // D_UL, ascending
  std::vector<std::size_t> remain_indices;   // D_RE, ascending
  double unlearn_ratio = 0.0;
  std::uint64_t seed = 0;
};

// Uniform sample of round(ratio * n) rows without replacement for D_UL; the
// rest is D_RE. Throws DomainError when ratio is outside (0,1) or either side
// would be empty.
DatasetSplit split(const Dataset& ds, double unlearn_ratio, std::uint64_t seed);

// MNIST-style IDX pair. Pixels are divided by 255.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);
void write_idx_images(const std::filesystem::path& path, std::span<const std::uint8_t> pixels,
                      std::uint32_t count, std::uint32_t rows, std::uint32_t cols);
void write_idx_labels(const std::filesystem::path& path, std::span<const std::uint8_t> labels);

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

// CSV with header f0..f{d-1},label and full-precision values.
void write_csv(const Dataset& ds, const std::filesystem::path& path);
// class_count 0 means max(label)+1 (at least 2).
Dataset read_csv(const std::filesystem::path& path, std::size_t class_count = 0,
                 Scaling scaling = Scaling::raw);

}  // namespace ulab::data
