#include "fedpm/mask.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fedpm/errors.hpp"

namespace fedpm {

std::size_t BinaryMask::ones() const {
  std::size_t c = 0;
  for (std::uint8_t b : m) c += b;
  return c;
}

void ClientConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("client learning_rate must be finite and >= 0");
  }
  if (local_epochs == 0) throw ConfigError("client local_epochs must be >= 1");
  if (batch_size == 0) throw ConfigError("client batch_size must be >= 1");
}

ProbMask mask_sigmoid(const ScoreMask& s) {
  ProbMask out;
  out.theta.resize(s.s.size());
  for (std::size_t i = 0; i < s.s.size(); ++i) {
    out.theta[i] = clamp_theta(1.0 / (1.0 + std::exp(-s.s[i])));
  }
  return out;
}

ScoreMask inv_sigmoid(const ProbMask& theta) {
  ScoreMask out;
  out.s.resize(theta.theta.size());
  for (std::size_t i = 0; i < theta.theta.size(); ++i) {
    const double t = clamp_theta(theta.theta[i]);
    out.s[i] = std::log(t / (1.0 - t));
  }
  return out;
}

BinaryMask sample_mask(const ProbMask& theta, Rng& rng) {
  BinaryMask mask;
  mask.m.resize(theta.theta.size());
  for (std::size_t i = 0; i < theta.theta.size(); ++i) {
    mask.m[i] = rng.next_bernoulli(theta.theta[i]) ? 1 : 0;
  }
  return mask;
}

std::vector<double> masked_weights(const BinaryMask& m, const FrozenWeights& w) {
  if (m.m.size() != w.values.size()) {
    throw ShapeError("masked_weights: mask and weights differ in length");
  }
  std::vector<double> out(w.values.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = m.m[i] ? w.values[i] : 0.0;
  }
  return out;
}

std::vector<double> ste_score_grad(std::span<const double> grad_w_dot,
                                   const FrozenWeights& w, const ProbMask& theta) {
  if (grad_w_dot.size() != w.values.size() ||
      theta.theta.size() != w.values.size()) {
    throw ShapeError("ste_score_grad: length mismatch");
  }
  std::vector<double> grad_s(w.values.size());
  for (std::size_t i = 0; i < grad_s.size(); ++i) {
    const double t = theta.theta[i];
    grad_s[i] = grad_w_dot[i] * w.values[i] * t * (1.0 - t);
  }
  return grad_s;
}

BinaryMask local_train(const NetworkArch& arch, const FrozenWeights& w,
                       const ProbMask& theta_global, const Dataset& data,
                       const ClientConfig& cfg, Rng& rng,
                       const ThetaHook& pre_sample_hook) {
  cfg.validate();
  if (data.size() == 0) throw DataError("local_train: empty client dataset");
  if (theta_global.theta.size() != w.values.size()) {
    throw ShapeError("local_train: theta length does not match weights");
  }

  ScoreMask scores = inv_sigmoid(theta_global);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  ForwardCache cache;
  for (std::size_t epoch = 0; epoch < cfg.local_epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t count = std::min(cfg.batch_size, order.size() - start);
      Matrix batch(count, data.feature_dim());
      std::vector<std::int32_t> labels(count);
      for (std::size_t r = 0; r < count; ++r) {
        const std::size_t src = order[start + r];
        std::copy_n(&data.samples.data[src * data.feature_dim()],
                    data.feature_dim(), &batch.data[r * data.feature_dim()]);
        labels[r] = data.labels[src];
      }

      const ProbMask theta = mask_sigmoid(scores);
      const BinaryMask m = sample_mask(theta, rng);
      const std::vector<double> w_dot = masked_weights(m, w);
      const Matrix logits = forward(arch, w_dot, batch, &cache);
      const auto [loss, grad_logits] = loss_and_grad(logits, labels);
      if (!std::isfinite(loss)) {
        throw DivergedError("local_train: non-finite loss at epoch " +
                            std::to_string(epoch));
      }
      const std::vector<double> grad_w = backward(arch, cache, w_dot, grad_logits);
      const std::vector<double> grad_s = ste_score_grad(grad_w, w, theta);
      for (std::size_t i = 0; i < scores.s.size(); ++i) {
        scores.s[i] -= cfg.learning_rate * grad_s[i];
      }
    }
  }

  ProbMask theta_final = mask_sigmoid(scores);
  if (pre_sample_hook) theta_final = pre_sample_hook(theta_final);
  return sample_mask(theta_final, rng);
}

}  // namespace fedpm
