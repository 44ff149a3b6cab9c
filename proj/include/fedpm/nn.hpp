#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fedpm/errors.hpp"

namespace fedpm {

// Row-major dense matrix, the only tensor shape this project needs.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

enum class Activation : std::uint8_t { kRelu = 0, kIdentity = 1 };

struct LayerSpec {
  std::size_t fan_in = 0;
  std::size_t fan_out = 0;
  Activation activation = Activation::kRelu;
};

// Dense feed-forward architecture, weights only (no bias terms), so the
// parameter count d is exactly the sum of the layer matrix sizes. Layer l's
// weights live at [offset(l), offset(l) + fan_in*fan_out) in any flat
// parameter vector, indexed input-major: w[i*fan_out + j] connects input i
// to output j.
struct NetworkArch {
  std::vector<LayerSpec> layers;

  // dims = {in, hidden..., out}; relu on hidden layers, identity logits.
  static NetworkArch mlp(const std::vector<std::size_t>& dims);

  std::size_t param_count() const;
  std::size_t layer_offset(std::size_t layer) const;
  std::size_t input_dim() const { return layers.front().fan_in; }
  std::size_t output_dim() const { return layers.back().fan_out; }

  // Throws ArchError unless dimensions chain, every fan is >= 1, and the
  // last activation is identity.
  void validate() const;

  std::string to_string() const;  // e.g. "784-200-200-10"

  bool operator==(const NetworkArch&) const = default;
};

// sqrt(2 / fan_in): Kaiming scale, fan-in mode, relu gain.
double kaiming_sigma(std::size_t fan_in);

// Sign-random weights: every entry of layer l is +/- kaiming_sigma(fan_in_l),
// sign drawn from the stream (seed, kTagWeights, l). Reproducible bit-exactly
// from (seed, arch); never mutated after construction.
struct FrozenWeights {
  std::uint64_t seed = 0;
  std::vector<double> values;
};

FrozenWeights init_frozen_weights(const NetworkArch& arch, std::uint64_t seed);

// FNV-1a over the raw value bytes; used to assert the weights stay frozen.
std::uint64_t hash_weights(const FrozenWeights& w);

// Per-layer buffers captured by forward() for the backward pass.
struct ForwardCache {
  Matrix input;
  std::vector<Matrix> pre_acts;   // z_l, one per layer
  std::vector<Matrix> post_acts;  // a_l = act(z_l)
};

// Dense forward pass with the given flat weight vector. Returns logits
// (batch x output_dim). Pass a cache to enable backward().
Matrix forward(const NetworkArch& arch, std::span<const double> weights,
               const Matrix& input, ForwardCache* cache = nullptr);

// Mean softmax cross-entropy over the batch, log-sum-exp stabilized.
// grad_logits = (softmax - onehot) / batch_size.
std::pair<double, Matrix> loss_and_grad(const Matrix& logits,
                                        std::span<const std::int32_t> labels);

// Exact reverse-mode gradient of the loss w.r.t. the flat weight vector,
// given the cache produced by the matching forward() call.
std::vector<double> backward(const NetworkArch& arch, const ForwardCache& cache,
                             std::span<const double> weights,
                             const Matrix& grad_logits);

}  // namespace fedpm
