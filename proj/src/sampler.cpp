#include "invaug/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "invaug/errors.hpp"

namespace invaug {

void validate(const SamplerConfig& config) {
  if (config.n_steps < 0)
    throw std::invalid_argument("sampler: n_steps must be >= 0");
  if (config.m < 1) throw std::invalid_argument("sampler: m must be >= 1");
  if (!(config.zero_loss_epsilon > 0.0))
    throw std::invalid_argument("sampler: zero_loss_epsilon must be > 0");
}

double acceptance_rate(const ChainState& state) {
  if (state.steps_taken < 1)
    throw std::invalid_argument("acceptance_rate: no steps taken");
  return static_cast<double>(state.accepts) /
         static_cast<double>(state.steps_taken);
}

namespace {

double clamped_loss(std::span<const double> theta, const MLPConfig& config,
                    std::span<const double> x, int y, const Transform& g,
                    double eps) {
  const std::vector<double> gx = invaug::apply(g, x);
  const double l = loss(forward(theta, config, gx), y);
  if (!std::isfinite(l)) throw NumericError("mh_chain: non-finite loss");
  return std::max(l, eps);
}

ChainState run_chain(std::span<const double> theta, const MLPConfig& config,
                     std::span<const double> x, int y,
                     const TransformSpace& space, int n_steps, double eps,
                     Rng& rng, std::vector<ChainStep>* trace) {
  ChainState state;
  state.g = uniform_sample(space, rng);
  state.cached_loss = clamped_loss(theta, config, x, y, state.g, eps);
  if (trace) trace->push_back({0, state.g, state.cached_loss, true});

  for (int t = 1; t <= n_steps; ++t) {
    const Transform proposal = uniform_sample(space, rng);
    const double prop_loss = clamped_loss(theta, config, x, y, proposal, eps);
    const double p = std::min(1.0, prop_loss / state.cached_loss);
    const double u = rng.next_double();
    const bool accepted = u < p;
    if (accepted) {
      state.g = proposal;
      state.cached_loss = prop_loss;
      ++state.accepts;
    }
    ++state.steps_taken;
    if (trace) trace->push_back({t, state.g, state.cached_loss, accepted});
  }
  return state;
}

}  // namespace

std::vector<ChainState> mh_chain_states(std::span<const double> theta,
                                        const MLPConfig& config,
                                        std::span<const double> x, int y,
                                        const TransformSpace& space,
                                        const SamplerConfig& cfg,
                                        std::uint64_t stream_seed) {
  validate(cfg);
  if (space.size() == 0)
    throw std::invalid_argument("mh_chain: empty transform space");
  std::vector<ChainState> states;
  states.reserve(cfg.m);
  for (int j = 0; j < cfg.m; ++j) {
    Rng rng(derive_seed(stream_seed, j));
    states.push_back(run_chain(theta, config, x, y, space, cfg.n_steps,
                               cfg.zero_loss_epsilon, rng, nullptr));
  }
  return states;
}

std::vector<Transform> mh_chain(std::span<const double> theta,
                                const MLPConfig& config,
                                std::span<const double> x, int y,
                                const TransformSpace& space,
                                const SamplerConfig& cfg,
                                std::uint64_t stream_seed) {
  std::vector<Transform> out;
  for (const ChainState& s :
       mh_chain_states(theta, config, x, y, space, cfg, stream_seed))
    out.push_back(s.g);
  return out;
}

std::vector<ChainStep> mh_chain_trace(std::span<const double> theta,
                                      const MLPConfig& config,
                                      std::span<const double> x, int y,
                                      const TransformSpace& space, int n_steps,
                                      double zero_loss_epsilon,
                                      std::uint64_t stream_seed) {
  if (n_steps < 0)
    throw std::invalid_argument("mh_chain_trace: n_steps must be >= 0");
  if (!(zero_loss_epsilon > 0.0))
    throw std::invalid_argument("mh_chain_trace: zero_loss_epsilon must be > 0");
  std::vector<ChainStep> trace;
  Rng rng(derive_seed(stream_seed, 0));
  run_chain(theta, config, x, y, space, n_steps, zero_loss_epsilon, rng,
            &trace);
  return trace;
}

Transform exact_sample(const TransformSpace& space,
                       std::span<const double> probs, Rng& rng) {
  if (probs.size() != space.size())
    throw std::invalid_argument("exact_sample: probability vector length mismatch");
  double total = 0.0;
  for (double p : probs) {
    if (p < 0.0 || !std::isfinite(p))
      throw std::invalid_argument("exact_sample: probabilities must be >= 0");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw std::invalid_argument("exact_sample: probabilities must sum to 1");

  const double u = rng.next_double();
  double cum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    cum += probs[i];
    if (u < cum) return space.element(i);
  }
  return space.element(space.size() - 1);  // u landed in the rounding gap
}

std::vector<std::vector<double>> mh_transition_matrix(
    std::span<const double> losses, double zero_loss_epsilon) {
  if (losses.empty())
    throw std::invalid_argument("mh_transition_matrix: empty loss vector");
  const std::size_t n = losses.size();
  std::vector<double> pi(n);
  for (std::size_t i = 0; i < n; ++i)
    pi[i] = std::max(losses[i], zero_loss_epsilon);

  const double q = 1.0 / static_cast<double>(n);
  std::vector<std::vector<double>> kernel(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    double stay = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double accept = std::min(1.0, pi[j] / pi[i]);
      kernel[i][j] = q * accept;
      stay += q * (1.0 - accept);
    }
    kernel[i][i] = q + stay;  // proposing i itself always "accepts"
  }
  return kernel;
}

}  // namespace invaug
