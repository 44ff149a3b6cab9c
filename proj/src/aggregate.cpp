#include "fedpm/aggregate.hpp"

#include <cmath>

#include "fedpm/errors.hpp"

namespace fedpm {

ProbMask simple_aggregate(const std::vector<BinaryMask>& masks) {
  if (masks.empty()) throw ProtocolError("simple_aggregate: no masks");
  const std::size_t d = masks.front().m.size();
  for (const auto& m : masks) {
    if (m.m.size() != d) throw ShapeError("simple_aggregate: mask length mismatch");
  }
  ProbMask out;
  out.theta.resize(d);
  const double k = static_cast<double>(masks.size());
  for (std::size_t i = 0; i < d; ++i) {
    double sum = 0.0;
    for (const auto& m : masks) sum += m.m[i];
    out.theta[i] = clamp_theta(sum / k);
  }
  return out;
}

double estimation_error_bound(std::size_t d, std::size_t k_clients) {
  if (d == 0 || k_clients == 0) throw ConfigError("estimation_error_bound: d, K >= 1");
  return static_cast<double>(d) / (4.0 * static_cast<double>(k_clients));
}

std::vector<std::uint32_t> sum_masks(const std::vector<BinaryMask>& masks) {
  if (masks.empty()) throw ProtocolError("sum_masks: no masks");
  std::vector<std::uint32_t> agg(masks.front().m.size(), 0);
  for (const auto& m : masks) {
    if (m.m.size() != agg.size()) throw ShapeError("sum_masks: mask length mismatch");
    for (std::size_t i = 0; i < agg.size(); ++i) agg[i] += m.m[i];
  }
  return agg;
}

BetaState BetaState::init(std::size_t d, double lambda0) {
  if (!(lambda0 > 0.0)) throw ConfigError("BetaState: lambda0 must be > 0");
  BetaState s;
  s.lambda0 = lambda0;
  s.alpha.assign(d, lambda0);
  s.beta.assign(d, lambda0);
  return s;
}

ResetPolicy ResetPolicy::every(std::uint64_t gamma) {
  if (gamma == 0) throw ConfigError("ResetPolicy: gamma must be >= 1");
  return {gamma};
}

BetaState bayes_update(BetaState state, const std::vector<std::uint32_t>& m_agg,
                       std::size_t k_clients) {
  if (m_agg.size() != state.alpha.size()) {
    throw ShapeError("bayes_update: vote vector length mismatch");
  }
  for (std::uint32_t v : m_agg) {
    if (v > k_clients) {
      throw ProtocolError("bayes_update: vote count " + std::to_string(v) +
                          " exceeds K=" + std::to_string(k_clients));
    }
  }
  const double k = static_cast<double>(k_clients);
  for (std::size_t i = 0; i < m_agg.size(); ++i) {
    state.alpha[i] += m_agg[i];
    state.beta[i] += k - m_agg[i];
  }
  state.rounds_since_reset += 1;
  return state;
}

ProbMask beta_mode(const BetaState& state) {
  ProbMask out;
  out.theta.resize(state.alpha.size());
  for (std::size_t i = 0; i < out.theta.size(); ++i) {
    const double denom = state.alpha[i] + state.beta[i] - 2.0;
    // Fresh uniform prior with no data: the mode degenerates; take the
    // symmetric value.
    const double mode = denom == 0.0 ? 0.5 : (state.alpha[i] - 1.0) / denom;
    out.theta[i] = clamp_theta(mode);
  }
  return out;
}

BetaState maybe_reset(BetaState state, const ResetPolicy& policy) {
  if (policy.gamma != ResetPolicy::kNever &&
      state.rounds_since_reset >= policy.gamma) {
    std::fill(state.alpha.begin(), state.alpha.end(), state.lambda0);
    std::fill(state.beta.begin(), state.beta.end(), state.lambda0);
    state.rounds_since_reset = 0;
  }
  return state;
}

std::uint64_t suggest_gamma(double rho) {
  if (!(rho > 0.0) || rho > 1.0) {
    throw ConfigError("suggest_gamma: participation ratio must be in (0, 1]");
  }
  const auto g = static_cast<std::uint64_t>(std::llround(1.0 / rho));
  return g < 1 ? 1 : g;
}

}  // namespace fedpm
