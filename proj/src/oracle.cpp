#include "invaug/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace invaug {

OrbitLosses orbit_losses(std::span<const double> theta, const MLPConfig& config,
                         std::span<const double> x, int y,
                         const TransformSpace& space) {
  OrbitLosses ol;
  ol.losses.reserve(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) {
    const std::vector<double> gx = invaug::apply(space.element(i), x);
    ol.losses.push_back(loss(forward(theta, config, gx), y));
  }
  return ol;
}

std::pair<double, std::size_t> adversarial_loss(const OrbitLosses& ol) {
  if (ol.losses.empty())
    throw std::invalid_argument("adversarial_loss: empty orbit");
  std::size_t argmax = 0;
  for (std::size_t i = 1; i < ol.losses.size(); ++i)
    if (ol.losses[i] > ol.losses[argmax]) argmax = i;  // first max wins ties
  return {ol.losses[argmax], argmax};
}

std::vector<double> lambda_star_pointmass(const OrbitLosses& ol) {
  const auto [max_loss, argmax] = adversarial_loss(ol);
  (void)max_loss;
  std::vector<double> lambda(ol.losses.size(), 0.0);
  lambda[argmax] = 1.0;
  return lambda;
}

SmoothedDistribution smoothed_lambda(const OrbitLosses& ol) {
  if (ol.losses.empty())
    throw std::invalid_argument("smoothed_lambda: empty orbit");
  double total = 0.0;
  for (double l : ol.losses) {
    if (l < 0.0 || !std::isfinite(l))
      throw std::invalid_argument("smoothed_lambda: losses must be >= 0 and finite");
    total += l;
  }
  if (total <= 0.0)
    throw std::invalid_argument(
        "smoothed_lambda: all-zero orbit losses, distribution undefined");
  SmoothedDistribution sd;
  sd.c_star = 0.5 * total;
  sd.probs.reserve(ol.losses.size());
  for (double l : ol.losses) sd.probs.push_back(l / total);
  return sd;
}

double expected_smoothed_loss(const OrbitLosses& ol,
                              const SmoothedDistribution& sd) {
  if (ol.losses.size() != sd.probs.size())
    throw std::invalid_argument("expected_smoothed_loss: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < ol.losses.size(); ++i)
    acc += sd.probs[i] * ol.losses[i];
  return acc;
}

CStarEstimate c_star_mc_stats(std::span<const double> theta,
                              const MLPConfig& config, std::span<const double> x,
                              int y, const TransformSpace& space, int n_draws,
                              Rng& rng) {
  if (n_draws < 1)
    throw std::invalid_argument("c_star_mc: n_draws must be >= 1");
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int i = 0; i < n_draws; ++i) {
    const Transform g = uniform_sample(space, rng);
    const std::vector<double> gx = invaug::apply(g, x);
    const double l = loss(forward(theta, config, gx), y);
    sum += l;
    sum_sq += l * l;
  }
  const double n = static_cast<double>(n_draws);
  const double mean = sum / n;
  const double var = std::max(0.0, sum_sq / n - mean * mean);
  CStarEstimate est;
  est.estimate = 0.5 * measure(space) * mean;
  est.std_error = 0.5 * measure(space) * std::sqrt(var / n);
  est.n_draws = n_draws;
  return est;
}

double c_star_mc(std::span<const double> theta, const MLPConfig& config,
                 std::span<const double> x, int y, const TransformSpace& space,
                 int n_draws, Rng& rng) {
  return c_star_mc_stats(theta, config, x, y, space, n_draws, rng).estimate;
}

double invariance_risk(std::span<const double> theta, const MLPConfig& config,
                       const Dataset& ds, const TransformSpace& space) {
  if (ds.samples.empty())
    throw std::invalid_argument("invariance_risk: empty dataset");
  double acc = 0.0;
  for (const Sample& s : ds.samples) {
    const double clean = loss(forward(theta, config, s.x), s.y);
    const OrbitLosses ol = orbit_losses(theta, config, s.x, s.y, space);
    double worst = 0.0;
    for (double l : ol.losses) worst = std::max(worst, std::abs(clean - l));
    acc += worst;
  }
  return acc / static_cast<double>(ds.samples.size());
}

std::pair<double, double> mixture_decomposition_check(
    std::span<const double> theta, const MLPConfig& config, const Dataset& ds,
    const TransformSpace& space, double gamma) {
  if (!(gamma > 0.0) || gamma > 1.0)
    throw std::invalid_argument("mixture check: gamma must be in (0, 1]");
  if (!space.include_identity())
    throw std::invalid_argument("mixture check: space must contain the identity");
  if (ds.samples.empty())
    throw std::invalid_argument("mixture check: empty dataset");
  const std::size_t n = space.size();
  if (n < 2 && gamma < 1.0)
    throw std::invalid_argument(
        "mixture check: no non-identity elements to carry mass 1-gamma");
  const std::size_t id_index =
      space.index_of(Transform{TransformKind::Identity, 0, 0.0});
  const double off_weight =
      n > 1 ? (1.0 - gamma) / static_cast<double>(n - 1) : 0.0;

  // lhs: per-sample expectation under the mixture, then dataset mean.
  double lhs = 0.0;
  for (const Sample& s : ds.samples) {
    const OrbitLosses ol = orbit_losses(theta, config, s.x, s.y, space);
    double mix = gamma * ol.losses[id_index];
    for (std::size_t i = 0; i < n; ++i)
      if (i != id_index) mix += off_weight * ol.losses[i];
    lhs += mix;
  }
  lhs /= static_cast<double>(ds.samples.size());

  // rhs: gamma-weighted combination of the clean risk and the risk under the
  // uniform distribution on the non-identity elements.
  double clean_risk = 0.0;
  double off_risk = 0.0;
  for (const Sample& s : ds.samples) {
    const OrbitLosses ol = orbit_losses(theta, config, s.x, s.y, space);
    clean_risk += ol.losses[id_index];
    double off_mean = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (i != id_index) off_mean += ol.losses[i];
    if (n > 1) off_mean /= static_cast<double>(n - 1);
    off_risk += off_mean;
  }
  clean_risk /= static_cast<double>(ds.samples.size());
  off_risk /= static_cast<double>(ds.samples.size());
  const double rhs = gamma * clean_risk + (1.0 - gamma) * off_risk;

  return {lhs, rhs};
}

bool l2_feasibility_check(const TransformSpace& space, int n_random, Rng& rng) {
  if (n_random < 1)
    throw std::invalid_argument("l2_feasibility_check: n_random must be >= 1");
  const std::size_t n = space.size();
  const double bound = 1.0 / static_cast<double>(n);

  // (a) the uniform vector attains the bound (equality in Cauchy-Schwarz);
  // allow round-off at the last-ulp level from the summation.
  const double u = 1.0 / static_cast<double>(n);
  double norm_sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) norm_sq += u * u;
  const double tol = 4.0 * std::numeric_limits<double>::epsilon() * bound;
  if (std::abs(norm_sq - bound) > tol) return false;

  // (b) random simplex vectors all sit on or above the bound.
  for (int draw = 0; draw < n_random; ++draw) {
    std::vector<double> lambda(n);
    double total = 0.0;
    for (double& v : lambda) {
      v = -std::log(rng.next_double_pos());  // flat Dirichlet via exponentials
      total += v;
    }
    double sq = 0.0;
    for (double v : lambda) {
      const double p = v / total;
      sq += p * p;
    }
    if (sq < bound) return false;
  }
  return true;
}

double empirical_entropy(std::span<const std::uint64_t> histogram) {
  if (histogram.empty())
    throw std::invalid_argument("empirical_entropy: empty histogram");
  std::uint64_t total = 0;
  for (std::uint64_t c : histogram) total += c;
  if (total == 0)
    throw std::invalid_argument("empirical_entropy: histogram total is zero");
  double h = 0.0;
  for (std::uint64_t c : histogram) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log(p);
  }
  return h;
}

}  // namespace invaug
