#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "fedpm/mask.hpp"

namespace fedpm {

// theta_hat = mean of the masks, clamped into the broadcastable range.
// An unbiased estimate of the mean of the senders' probability masks.
ProbMask simple_aggregate(const std::vector<BinaryMask>& masks);

// Upper bound d / (4K) on E || theta_hat - theta_bar ||^2.
double estimation_error_bound(std::size_t d, std::size_t k_clients);

// Coordinatewise vote totals sum_k m^k, the sufficient statistic for the
// posterior update.
std::vector<std::uint32_t> sum_masks(const std::vector<BinaryMask>& masks);

// Per-parameter Beta posterior, all coordinates sharing the scalar prior
// lambda0. Between resets alpha_i + beta_i - 2*lambda0 equals the number of
// votes folded in since the last reset.
struct BetaState {
  std::vector<double> alpha;
  std::vector<double> beta;
  double lambda0 = 1.0;
  std::uint64_t rounds_since_reset = 0;

  static BetaState init(std::size_t d, double lambda0);
};

struct ResetPolicy {
  static constexpr std::uint64_t kNever = std::numeric_limits<std::uint64_t>::max();

  std::uint64_t gamma = 1;  // rounds between resets; kNever disables

  static ResetPolicy every(std::uint64_t gamma);
  static ResetPolicy never() { return {kNever}; }
};

// Conjugate update: alpha += votes, beta += K - votes. Vote counts outside
// [0, K] are a protocol violation.
BetaState bayes_update(BetaState state, const std::vector<std::uint32_t>& m_agg,
                       std::size_t k_clients);

// Posterior mode (alpha-1)/(alpha+beta-2), 0.5 at the degenerate fresh
// uniform prior, clamped for broadcast.
ProbMask beta_mode(const BetaState& state);

// Restores the prior once gamma rounds have accumulated; otherwise a no-op.
BetaState maybe_reset(BetaState state, const ResetPolicy& policy);

// Rule of thumb round(1/rho) for the reset period, minimum 1.
std::uint64_t suggest_gamma(double rho);

}  // namespace fedpm
