#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "invaug/model.hpp"
#include "invaug/rng.hpp"
#include "invaug/transform.hpp"

namespace invaug {

struct SamplerConfig {
  int n_steps = 2;  // MH steps per chain
  int m = 1;        // samples kept per data point (one independent chain each)
  double zero_loss_epsilon = 1e-12;
};

void validate(const SamplerConfig& config);

struct ChainState {
  Transform g;
  double cached_loss = 0.0;
  int steps_taken = 0;
  int accepts = 0;
};

// accepts / steps_taken; errors when no steps were taken.
double acceptance_rate(const ChainState& state);

// Runs cfg.m independent chains targeting the loss-proportional distribution
// over the space. Chain j draws from the stream derived from
// (stream_seed, j), so results do not depend on execution order. Each chain:
// uniform initial state, then n_steps of uniform proposals accepted with
// probability min(1, loss_prop / loss_prev); losses are clamped below by
// zero_loss_epsilon before forming the ratio.
std::vector<ChainState> mh_chain_states(std::span<const double> theta,
                                        const MLPConfig& config,
                                        std::span<const double> x, int y,
                                        const TransformSpace& space,
                                        const SamplerConfig& cfg,
                                        std::uint64_t stream_seed);

// Final transform of each chain.
std::vector<Transform> mh_chain(std::span<const double> theta,
                                const MLPConfig& config,
                                std::span<const double> x, int y,
                                const TransformSpace& space,
                                const SamplerConfig& cfg,
                                std::uint64_t stream_seed);

struct ChainStep {
  int step = 0;  // 0 is the initial state
  Transform g;
  double loss = 0.0;
  bool accepted = false;
};

// Per-step trace of a single chain (diagnostic; step 0 records the initial
// state as accepted).
std::vector<ChainStep> mh_chain_trace(std::span<const double> theta,
                                      const MLPConfig& config,
                                      std::span<const double> x, int y,
                                      const TransformSpace& space, int n_steps,
                                      double zero_loss_epsilon,
                                      std::uint64_t stream_seed);

// Inverse-CDF categorical draw over the canonical enumeration order.
// `probs` must be non-negative and sum to 1 within 1e-9.
Transform exact_sample(const TransformSpace& space,
                       std::span<const double> probs, Rng& rng);

// Exact transition kernel of the independent MH chain for a fixed loss
// vector: row i holds the distribution of the next state given state i.
// Used as the ground truth for chain-marginal tests.
std::vector<std::vector<double>> mh_transition_matrix(
    std::span<const double> losses, double zero_loss_epsilon);

}  // namespace invaug
