#include "fedpm/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "fedpm/rng.hpp"

namespace fedpm {

NetworkArch NetworkArch::mlp(const std::vector<std::size_t>& dims) {
  if (dims.size() < 2) throw ArchError("mlp needs at least input and output dims");
  NetworkArch arch;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const bool last = (l + 2 == dims.size());
    arch.layers.push_back(
        {dims[l], dims[l + 1], last ? Activation::kIdentity : Activation::kRelu});
  }
  arch.validate();
  return arch;
}

std::size_t NetworkArch::param_count() const {
  std::size_t d = 0;
  for (const auto& l : layers) d += l.fan_in * l.fan_out;
  return d;
}

std::size_t NetworkArch::layer_offset(std::size_t layer) const {
  std::size_t off = 0;
  for (std::size_t l = 0; l < layer; ++l) off += layers[l].fan_in * layers[l].fan_out;
  return off;
}

void NetworkArch::validate() const {
  if (layers.empty()) throw ArchError("architecture has no layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (layers[l].fan_in == 0 || layers[l].fan_out == 0) {
      throw ArchError("layer " + std::to_string(l) + " has zero fan");
    }
    if (l > 0 && layers[l].fan_in != layers[l - 1].fan_out) {
      throw ArchError("layer " + std::to_string(l) + " fan_in does not match previous fan_out");
    }
  }
  if (layers.back().activation != Activation::kIdentity) {
    throw ArchError("last layer must produce identity logits");
  }
}

std::string NetworkArch::to_string() const {
  std::string s = std::to_string(layers.front().fan_in);
  for (const auto& l : layers) s += "-" + std::to_string(l.fan_out);
  return s;
}

double kaiming_sigma(std::size_t fan_in) {
  if (fan_in == 0) throw ArchError("kaiming_sigma: fan_in must be >= 1");
  return std::sqrt(2.0 / static_cast<double>(fan_in));
}

FrozenWeights init_frozen_weights(const NetworkArch& arch, std::uint64_t seed) {
  arch.validate();
  FrozenWeights w;
  w.seed = seed;
  w.values.resize(arch.param_count());
  std::size_t off = 0;
  for (std::size_t l = 0; l < arch.layers.size(); ++l) {
    const auto& spec = arch.layers[l];
    const double sigma = kaiming_sigma(spec.fan_in);
    Rng rng = Rng::stream(seed, {kTagWeights, l});
    const std::size_t count = spec.fan_in * spec.fan_out;
    for (std::size_t i = 0; i < count; ++i) {
      // Sign from the top bit: no float path, so the values are
      // platform-exact.
      w.values[off + i] = (rng.next_u64() >> 63) ? sigma : -sigma;
    }
    off += count;
  }
  return w;
}

std::uint64_t hash_weights(const FrozenWeights& w) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (double v : w.values) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xff;
      h *= 0x100000001b3ull;
    }
  }
  return h ^ w.seed;
}

Matrix forward(const NetworkArch& arch, std::span<const double> weights,
               const Matrix& input, ForwardCache* cache) {
  arch.validate();
  if (weights.size() != arch.param_count()) {
    throw ShapeError("forward: weight vector has length " +
                     std::to_string(weights.size()) + ", expected " +
                     std::to_string(arch.param_count()));
  }
  if (input.cols != arch.input_dim()) {
    throw ShapeError("forward: input has " + std::to_string(input.cols) +
                     " features, expected " + std::to_string(arch.input_dim()));
  }
  if (cache) {
    cache->input = input;
    cache->pre_acts.clear();
    cache->post_acts.clear();
  }

  Matrix a = input;
  std::size_t off = 0;
  for (const auto& spec : arch.layers) {
    Matrix z(a.rows, spec.fan_out);
    const double* w = weights.data() + off;
    for (std::size_t b = 0; b < a.rows; ++b) {
      const double* x = &a.data[b * a.cols];
      double* out = &z.data[b * z.cols];
      for (std::size_t i = 0; i < spec.fan_in; ++i) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        const double* wrow = w + i * spec.fan_out;
        for (std::size_t j = 0; j < spec.fan_out; ++j) out[j] += xi * wrow[j];
      }
    }
    Matrix act = z;
    if (spec.activation == Activation::kRelu) {
      for (double& v : act.data) v = v > 0.0 ? v : 0.0;
    }
    if (cache) {
      cache->pre_acts.push_back(std::move(z));
      cache->post_acts.push_back(act);
    }
    a = std::move(act);
    off += spec.fan_in * spec.fan_out;
  }
  return a;
}

std::pair<double, Matrix> loss_and_grad(const Matrix& logits,
                                        std::span<const std::int32_t> labels) {
  if (labels.size() != logits.rows) {
    throw ShapeError("loss_and_grad: batch size mismatch");
  }
  const std::size_t batch = logits.rows;
  const std::size_t classes = logits.cols;
  Matrix grad(batch, classes);
  double loss = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    const std::int32_t y = labels[b];
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      throw DataError("loss_and_grad: label " + std::to_string(y) +
                      " outside [0, " + std::to_string(classes) + ")");
    }
    const double* row = &logits.data[b * classes];
    double m = row[0];
    for (std::size_t c = 1; c < classes; ++c) m = std::max(m, row[c]);
    double sum = 0.0;
    for (std::size_t c = 0; c < classes; ++c) sum += std::exp(row[c] - m);
    const double lse = m + std::log(sum);
    loss += lse - row[y];
    double* g = &grad.data[b * classes];
    for (std::size_t c = 0; c < classes; ++c) {
      g[c] = std::exp(row[c] - m) / sum / static_cast<double>(batch);
    }
    g[y] -= 1.0 / static_cast<double>(batch);
  }
  return {loss / static_cast<double>(batch), std::move(grad)};
}

std::vector<double> backward(const NetworkArch& arch, const ForwardCache& cache,
                             std::span<const double> weights,
                             const Matrix& grad_logits) {
  arch.validate();
  const std::size_t n_layers = arch.layers.size();
  if (cache.pre_acts.size() != n_layers || cache.post_acts.size() != n_layers) {
    throw CacheError("backward: cache does not match architecture");
  }
  if (grad_logits.rows != cache.input.rows ||
      grad_logits.cols != arch.output_dim()) {
    throw CacheError("backward: grad_logits shape does not match cache");
  }
  if (weights.size() != arch.param_count()) {
    throw ShapeError("backward: weight vector length mismatch");
  }

  std::vector<double> grad_w(arch.param_count(), 0.0);
  Matrix grad_a = grad_logits;  // gradient w.r.t. layer output activations
  for (std::size_t l = n_layers; l-- > 0;) {
    const auto& spec = arch.layers[l];
    // through the activation
    Matrix grad_z = std::move(grad_a);
    if (spec.activation == Activation::kRelu) {
      const Matrix& z = cache.pre_acts[l];
      for (std::size_t i = 0; i < grad_z.data.size(); ++i) {
        if (z.data[i] <= 0.0) grad_z.data[i] = 0.0;
      }
    }
    const Matrix& a_prev = (l == 0) ? cache.input : cache.post_acts[l - 1];
    if (a_prev.cols != spec.fan_in) {
      throw CacheError("backward: cached activation shape mismatch");
    }
    const std::size_t off = arch.layer_offset(l);
    double* gw = grad_w.data() + off;
    for (std::size_t b = 0; b < a_prev.rows; ++b) {
      const double* x = &a_prev.data[b * a_prev.cols];
      const double* gz = &grad_z.data[b * grad_z.cols];
      for (std::size_t i = 0; i < spec.fan_in; ++i) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        double* grow = gw + i * spec.fan_out;
        for (std::size_t j = 0; j < spec.fan_out; ++j) grow[j] += xi * gz[j];
      }
    }
    if (l > 0) {
      const double* w = weights.data() + off;
      Matrix next(a_prev.rows, spec.fan_in);
      for (std::size_t b = 0; b < a_prev.rows; ++b) {
        const double* gz = &grad_z.data[b * grad_z.cols];
        double* gx = &next.data[b * next.cols];
        for (std::size_t i = 0; i < spec.fan_in; ++i) {
          const double* wrow = w + i * spec.fan_out;
          double acc = 0.0;
          for (std::size_t j = 0; j < spec.fan_out; ++j) acc += wrow[j] * gz[j];
          gx[i] = acc;
        }
      }
      grad_a = std::move(next);
    }
  }
  return grad_w;
}

}  // namespace fedpm
