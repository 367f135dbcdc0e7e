#include "ulab/mask.hpp"

#include <string>

#include "ulab/error.hpp"

namespace ulab::nn {

ParameterMask::ParameterMask(const ParameterStore& store, std::vector<std::uint8_t> bits)
    : bits_(std::move(bits)) {
  const auto& blocks = store.blocks();
  layer_starts_.reserve(blocks.size() + 1);
  layer_full_.reserve(blocks.size());
  for (const LayerBlock& b : blocks) {
    layer_starts_.push_back(indices_.size());
    for (std::size_t i = b.offset; i < b.end(); ++i) {
      if (bits_[i] != 0) indices_.push_back(i);
    }
    layer_full_.push_back(indices_.size() - layer_starts_.back() == b.end() - b.offset ? 1 : 0);
  }
  layer_starts_.push_back(indices_.size());
}

ParameterMask ParameterMask::all(const ParameterStore& store) {
  return ParameterMask(store, std::vector<std::uint8_t>(store.size(), 1));
}

ParameterMask ParameterMask::none(const ParameterStore& store) {
  return ParameterMask(store, std::vector<std::uint8_t>(store.size(), 0));
}

ParameterMask ParameterMask::from_indices(const ParameterStore& store,
                                          std::span<const std::size_t> indices) {
  std::vector<std::uint8_t> bits(store.size(), 0);
  for (std::size_t i : indices) {
    if (i >= store.size()) {
      throw DomainError("mask index " + std::to_string(i) + " out of range [0, " +
                        std::to_string(store.size()) + ")");
    }
    bits[i] = 1;
  }
  return ParameterMask(store, std::move(bits));
}

ParameterMask ParameterMask::trailing_layers(const ParameterStore& store, std::size_t first_layer) {
  std::vector<std::uint8_t> bits(store.size(), 0);
  const auto& blocks = store.blocks();
  for (std::size_t l = first_layer; l < blocks.size(); ++l) {
    for (std::size_t i = blocks[l].offset; i < blocks[l].end(); ++i) bits[i] = 1;
  }
  return ParameterMask(store, std::move(bits));
}

std::span<const std::size_t> ParameterMask::layer_indices(std::size_t layer) const {
  const std::size_t begin = layer_starts_.at(layer);
  const std::size_t end = layer_starts_.at(layer + 1);
  return {indices_.data() + begin, end - begin};
}

std::size_t ParameterMask::lowest_layer() const {
  for (std::size_t l = 0; l + 1 < layer_starts_.size(); ++l) {
    if (layer_any(l)) return l;
  }
  return layer_starts_.size() - 1;
}

}  // namespace ulab::nn
