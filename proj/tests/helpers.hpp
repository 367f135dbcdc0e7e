#pragma once

#include <vector>

#include "oracles.hpp"
#include "ulab/data.hpp"
#include "ulab/network.hpp"

namespace testing {

inline std::vector<oracle::Layer> oracle_layers(const ulab::nn::NetworkShape& shape) {
  std::vector<oracle::Layer> out;
  for (std::size_t l = 0; l < shape.layers.size(); ++l) {
    oracle::Act a = oracle::Act::identity;
    switch (shape.layers[l].activation) {
      case ulab::nn::Activation::identity: a = oracle::Act::identity; break;
      case ulab::nn::Activation::relu: a = oracle::Act::relu; break;
      case ulab::nn::Activation::leaky_relu: a = oracle::Act::leaky; break;
      case ulab::nn::Activation::tanh: a = oracle::Act::tanh; break;
    }
    out.push_back({shape.layer_input(l), shape.layers[l].out, a});
  }
  return out;
}

inline std::vector<std::vector<double>> rows(const ulab::Matrix& m) {
  std::vector<std::vector<double>> out;
  for (std::size_t r = 0; r < m.rows; ++r) out.emplace_back(m.row(r).begin(), m.row(r).end());
  return out;
}

inline ulab::Matrix matrix(const std::vector<std::vector<double>>& rows) {
  ulab::Matrix m(rows.size(), rows.empty() ? 0 : rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  }
  return m;
}

// Small blob set shared by the module tests.
inline ulab::data::Dataset small_blobs(std::size_t classes = 3, std::size_t per_class = 40, std::size_t dims = 4,
                                       std::uint64_t seed = 5) {
  return ulab::data::generate_blobs({classes, per_class, dims, 0.5, seed});
}

}  // namespace testing
