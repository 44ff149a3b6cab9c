#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "fedpm/data.hpp"
#include "fedpm/nn.hpp"
#include "fedpm/rng.hpp"

namespace fedpm {

// Probabilities are kept strictly inside (0, 1) by this clamp so the logit
// transform stays finite on every broadcast.
inline constexpr double kThetaClamp = 1e-6;

inline double clamp_theta(double t) {
  if (t < kThetaClamp) return kThetaClamp;
  if (t > 1.0 - kThetaClamp) return 1.0 - kThetaClamp;
  return t;
}

// Unbounded per-parameter scores; the quantity SGD actually updates.
struct ScoreMask {
  std::vector<double> s;
};

// Per-parameter keep probabilities in [kThetaClamp, 1 - kThetaClamp].
struct ProbMask {
  std::vector<double> theta;
};

// A Bernoulli sample of a ProbMask; the 1-bit-per-parameter payload.
struct BinaryMask {
  std::vector<std::uint8_t> m;

  std::size_t ones() const;
};

struct ClientConfig {
  double learning_rate = 0.1;
  std::size_t local_epochs = 3;
  std::size_t batch_size = 128;

  void validate() const;
};

// Elementwise logistic, then clamped.
ProbMask mask_sigmoid(const ScoreMask& s);

// Elementwise logit; clamps first, so raw {0, 1} inputs stay finite.
// Round-trips mask_sigmoid to within 1e-12 on the clamped domain.
ScoreMask inv_sigmoid(const ProbMask& theta);

// Independent per-coordinate Bernoulli draws from the caller's stream.
BinaryMask sample_mask(const ProbMask& theta, Rng& rng);

// m .* w: entries land in {-sigma_l, 0, +sigma_l}.
std::vector<double> masked_weights(const BinaryMask& m, const FrozenWeights& w);

// Score gradient via the straight-through estimator: the Bernoulli draw is
// treated as identity, so grad_theta = grad_w_dot .* w and
// grad_s = grad_theta .* theta .* (1 - theta).
std::vector<double> ste_score_grad(std::span<const double> grad_w_dot,
                                   const FrozenWeights& w, const ProbMask& theta);

// Optional transform applied to the final local probabilities before the
// uplink mask is sampled (the privacy hook plugs in here).
using ThetaHook = std::function<ProbMask(const ProbMask&)>;

// One client round: s = logit(theta_global), then local_epochs passes over
// shuffled minibatches of (sample mask -> mask weights -> forward/loss ->
// STE score step), then one fresh Bernoulli sample of the final
// probabilities as the uplink payload. The frozen weights are never touched.
BinaryMask local_train(const NetworkArch& arch, const FrozenWeights& w,
                       const ProbMask& theta_global, const Dataset& data,
                       const ClientConfig& cfg, Rng& rng,
                       const ThetaHook& pre_sample_hook = nullptr);

}  // namespace fedpm
