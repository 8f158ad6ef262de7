#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "invaug/data.hpp"
#include "invaug/model.hpp"
#include "invaug/rng.hpp"
#include "invaug/transform.hpp"

namespace invaug {

// Losses over the orbit {g x : g in the space}, aligned with the canonical
// enumeration order.
struct OrbitLosses {
  std::vector<double> losses;
};

// The loss-proportional distribution: probs[i] = losses[i] / (2 c*) with
// c* = (1/2) sum(losses) under counting measure.
struct SmoothedDistribution {
  std::vector<double> probs;
  double c_star = 0.0;
};

OrbitLosses orbit_losses(std::span<const double> theta, const MLPConfig& config,
                         std::span<const double> x, int y,
                         const TransformSpace& space);

// Maximum entry and the first index attaining it.
std::pair<double, std::size_t> adversarial_loss(const OrbitLosses& ol);

// Point mass at the adversarial argmax: the maximizer of the linear program
// over the simplex.
std::vector<double> lambda_star_pointmass(const OrbitLosses& ol);

// Errors if all losses are zero (the distribution is undefined there).
SmoothedDistribution smoothed_lambda(const OrbitLosses& ol);

double expected_smoothed_loss(const OrbitLosses& ol,
                              const SmoothedDistribution& sd);

struct CStarEstimate {
  double estimate = 0.0;
  double std_error = 0.0;  // CLT standard error of the estimate
  int n_draws = 0;
};

// Monte-Carlo estimate of c* = (1/2)|G| E_uniform[loss]; unbiased.
CStarEstimate c_star_mc_stats(std::span<const double> theta,
                              const MLPConfig& config, std::span<const double> x,
                              int y, const TransformSpace& space, int n_draws,
                              Rng& rng);

double c_star_mc(std::span<const double> theta, const MLPConfig& config,
                 std::span<const double> x, int y, const TransformSpace& space,
                 int n_draws, Rng& rng);

// Mean over the dataset of max over the space of |clean loss - orbit loss|.
double invariance_risk(std::span<const double> theta, const MLPConfig& config,
                       const Dataset& ds, const TransformSpace& space);

// Risk under the mixture (mass gamma at the identity, rest uniform over the
// non-identity elements) computed two ways: directly (lhs) and as the
// gamma-weighted combination of clean and non-identity risks (rhs).
std::pair<double, double> mixture_decomposition_check(
    std::span<const double> theta, const MLPConfig& config, const Dataset& ds,
    const TransformSpace& space, double gamma);

// (a) the uniform weight vector has squared 2-norm 1/|G| (up to round-off),
// (b) n_random simplex draws all satisfy sum(l_i^2) >= 1/|G|.
bool l2_feasibility_check(const TransformSpace& space, int n_random, Rng& rng);

// Shannon entropy (natural log) of normalized counts; 0 ln 0 = 0.
double empirical_entropy(std::span<const std::uint64_t> histogram);

}  // namespace invaug
