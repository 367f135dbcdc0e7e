#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ulab/network.hpp"

namespace ulab::nn {

// Which parameters may receive gradient. Everything outside the mask gets an
// exact zero gradient and is never touched by the optimizer.
class ParameterMask {
 public:
  static ParameterMask all(const ParameterStore& store);
  static ParameterMask none(const ParameterStore& store);
  // Indices may be unsorted and contain duplicates; throws DomainError when
  // an index is >= store.size().
  static ParameterMask from_indices(const ParameterStore& store, std::span<const std::size_t> indices);
  // Every parameter of layers [first_layer, depth).
  static ParameterMask trailing_layers(const ParameterStore& store, std::size_t first_layer);

  std::size_t size() const { return bits_.size(); }
  std::size_t count() const { return indices_.size(); }
  bool test(std::size_t i) const { return bits_[i] != 0; }
  bool full() const { return count() == size(); }

  // Sorted selected indices.
  const std::vector<std::size_t>& indices() const { return indices_; }
  std::span<const std::size_t> layer_indices(std::size_t layer) const;
  bool layer_full(std::size_t layer) const { return layer_full_[layer] != 0; }
  bool layer_any(std::size_t layer) const { return !layer_indices(layer).empty(); }
  // Smallest layer holding a selected parameter; depth when the mask is empty.
  std::size_t lowest_layer() const;

 private:
  ParameterMask(const ParameterStore& store, std::vector<std::uint8_t> bits);

  std::vector<std::uint8_t> bits_;
  std::vector<std::size_t> indices_;
  std::vector<std::size_t> layer_starts_;
  std::vector<std::uint8_t> layer_full_;
};

}  // namespace ulab::nn
