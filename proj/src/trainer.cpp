#include "invaug/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "invaug/errors.hpp"
#include "invaug/oracle.hpp"

namespace invaug {

namespace {
// Stream tags keep the shuffle and sampler rng streams disjoint.
constexpr std::uint64_t kShuffleStream = 0x5;
constexpr std::uint64_t kSamplerStream = 0x2;
}  // namespace

std::string mode_name(TrainMode mode) {
  switch (mode) {
    case TrainMode::PrimalDual: return "primal_dual";
    case TrainMode::Penalized: return "penalized";
    case TrainMode::Erm: return "erm";
    case TrainMode::UniformConstrained: return "uniform_constrained";
  }
  throw std::invalid_argument("unknown train mode");
}

TrainMode mode_from_name(const std::string& name) {
  if (name == "primal_dual") return TrainMode::PrimalDual;
  if (name == "penalized") return TrainMode::Penalized;
  if (name == "erm") return TrainMode::Erm;
  if (name == "uniform_constrained") return TrainMode::UniformConstrained;
  throw std::invalid_argument("unknown train mode: " + name);
}

DualState dual_update(DualState d, double slack) {
  d.gamma = std::max(0.0, d.gamma + d.eta_d * slack);
  return d;
}

void validate(const TrainerConfig& config) {
  if (config.epsilon < 0.0)
    throw std::invalid_argument("trainer: epsilon must be >= 0");
  if (!(config.eta_p > 0.0))
    throw std::invalid_argument("trainer: eta_p must be > 0");
  if (!(config.eta_d > 0.0))
    throw std::invalid_argument("trainer: eta_d must be > 0");
  if (config.fixed_gamma < 0.0)
    throw std::invalid_argument("trainer: fixed_gamma must be >= 0");
  if (config.batch_size < 1)
    throw std::invalid_argument("trainer: batch_size must be >= 1");
  if (config.epochs < 1)
    throw std::invalid_argument("trainer: epochs must be >= 1");
  validate(config.sampler);
}

double lagrangian(double clean_loss, double gamma, double slack) {
  if (gamma < 0.0) throw std::invalid_argument("lagrangian: gamma must be >= 0");
  return clean_loss + gamma * slack;
}

namespace {

struct BatchEval {
  double clean_loss = 0.0;
  Gradients clean_grad;
  double aug_loss = 0.0;  // mean over batch and m
  Gradients aug_grad;
};

// Clean and augmented batch means with their gradients, fixed summation
// order. transforms may be empty (erm) in which case the augmented terms
// stay zero. With need_aug_grad unset, only the augmented losses are
// evaluated (the gradient term is about to be scaled by gamma = 0).
BatchEval eval_batch(std::span<const double> theta, const MLPConfig& config,
                     const Dataset& ds, std::span<const std::size_t> batch,
                     const std::vector<std::vector<Transform>>& transforms,
                     bool need_aug_grad = true) {
  if (batch.empty()) throw std::invalid_argument("eval_batch: empty batch");
  BatchEval ev;
  ev.clean_grad.assign(theta.size(), 0.0);
  ev.aug_grad.assign(theta.size(), 0.0);

  const double inv_b = 1.0 / static_cast<double>(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Sample& s = ds.samples[batch[i]];
    const LossGrad lg = loss_grad(theta, config, s.x, s.y);
    ev.clean_loss += lg.loss;
    for (std::size_t p = 0; p < theta.size(); ++p)
      ev.clean_grad[p] += lg.grad[p];

    if (transforms.empty()) continue;
    const std::vector<Transform>& gs = transforms[i];
    const double inv_m = 1.0 / static_cast<double>(gs.size());
    for (const Transform& g : gs) {
      const std::vector<double> gx = invaug::apply(g, s.x);
      if (need_aug_grad) {
        const LossGrad alg = loss_grad(theta, config, gx, s.y);
        ev.aug_loss += alg.loss * inv_m;
        for (std::size_t p = 0; p < theta.size(); ++p)
          ev.aug_grad[p] += alg.grad[p] * inv_m;
      } else {
        ev.aug_loss += loss(forward(theta, config, gx), s.y) * inv_m;
      }
    }
  }
  ev.clean_loss *= inv_b;
  ev.aug_loss *= inv_b;
  for (std::size_t p = 0; p < theta.size(); ++p) {
    ev.clean_grad[p] *= inv_b;
    ev.aug_grad[p] *= inv_b;
  }
  if (!std::isfinite(ev.clean_loss) || !std::isfinite(ev.aug_loss))
    throw NumericError("non-finite batch loss");
  return ev;
}

void check_transforms(std::span<const std::size_t> batch,
                      const std::vector<std::vector<Transform>>& transforms) {
  if (transforms.size() != batch.size())
    throw std::invalid_argument("one transform list per batch sample required");
  for (const auto& gs : transforms)
    if (gs.empty())
      throw std::invalid_argument("each sample needs at least one transform");
}

}  // namespace

double constraint_slack(std::span<const double> theta, const MLPConfig& config,
                        const Dataset& ds, std::span<const std::size_t> batch,
                        const std::vector<std::vector<Transform>>& transforms,
                        double epsilon) {
  if (batch.empty()) throw std::invalid_argument("constraint_slack: empty batch");
  check_transforms(batch, transforms);
  double acc = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Sample& s = ds.samples[batch[i]];
    double sample_mean = 0.0;
    for (const Transform& g : transforms[i]) {
      const std::vector<double> gx = invaug::apply(g, s.x);
      sample_mean += loss(forward(theta, config, gx), s.y);
    }
    acc += sample_mean / static_cast<double>(transforms[i].size());
  }
  return acc / static_cast<double>(batch.size()) - epsilon;
}

ParameterVector primal_update(std::span<const double> theta,
                              const MLPConfig& config, const Dataset& ds,
                              std::span<const std::size_t> batch,
                              const std::vector<std::vector<Transform>>& transforms,
                              double gamma, double eta_p) {
  if (gamma < 0.0)
    throw std::invalid_argument("primal_update: gamma must be >= 0");
  if (!(eta_p > 0.0))
    throw std::invalid_argument("primal_update: eta_p must be > 0");
  check_transforms(batch, transforms);
  const BatchEval ev = eval_batch(theta, config, ds, batch, transforms);
  Gradients grad(theta.size());
  for (std::size_t p = 0; p < theta.size(); ++p)
    grad[p] = ev.clean_grad[p] + gamma * ev.aug_grad[p];
  return sgd_step(theta, grad, eta_p);
}

std::pair<double, double> evaluate(std::span<const double> theta,
                                   const MLPConfig& config, const Dataset& ds) {
  if (ds.samples.empty()) throw std::invalid_argument("evaluate: empty dataset");
  double total_loss = 0.0;
  std::size_t correct = 0;
  for (const Sample& s : ds.samples) {
    const std::vector<double> logits = forward(theta, config, s.x);
    total_loss += loss(logits, s.y);
    const auto argmax =
        std::max_element(logits.begin(), logits.end()) - logits.begin();
    if (static_cast<int>(argmax) == s.y) ++correct;
  }
  const double n = static_cast<double>(ds.samples.size());
  return {total_loss / n, static_cast<double>(correct) / n};
}

RunResult train(const Dataset& train_ds, const Dataset& test_ds,
                const TransformSpace& space, const MLPConfig& model_config,
                const TrainerConfig& config, const EpochCallback& on_epoch) {
  validate(config);
  validate(model_config);
  if (train_ds.samples.empty() || test_ds.samples.empty())
    throw std::invalid_argument("train: datasets must be non-empty");
  if (train_ds.d != model_config.layer_sizes.front())
    throw std::invalid_argument("train: dataset dimension != model input size");
  if (train_ds.n_classes > model_config.layer_sizes.back())
    throw std::invalid_argument("train: more classes than model outputs");

  const auto t_start = std::chrono::steady_clock::now();
  const std::size_t n = train_ds.samples.size();
  const auto batch_size = static_cast<std::size_t>(config.batch_size);
  const bool augmented = config.mode != TrainMode::Erm;
  const bool dual_ascent = config.mode == TrainMode::PrimalDual ||
                           config.mode == TrainMode::UniformConstrained;

  ParameterVector theta = init_params(model_config);
  DualState dual{config.mode == TrainMode::Penalized ? config.fixed_gamma : 0.0,
                 config.eta_d};

  RunResult result;
  result.model_config = model_config;
  result.trainer_config = config;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng shuffle_rng(derive_seed(config.seed, kShuffleStream, epoch));
    for (std::size_t i = n - 1; i > 0; --i)
      std::swap(order[i], order[shuffle_rng.next_below(i + 1)]);

    std::vector<std::uint64_t> histogram(space.size(), 0);
    double epoch_clean = 0.0;
    double epoch_slack = 0.0;

    int batch_index = 0;
    for (std::size_t start = 0; start < n; start += batch_size, ++batch_index) {
      const std::size_t count = std::min(batch_size, n - start);
      const std::span<const std::size_t> batch(order.data() + start, count);
      try {
        std::vector<std::vector<Transform>> transforms;
        if (augmented) {
          transforms.resize(count);
          for (std::size_t i = 0; i < count; ++i) {
            const std::uint64_t stream = derive_seed(
                config.seed, kSamplerStream, epoch, batch_index, i);
            if (config.mode == TrainMode::UniformConstrained) {
              transforms[i].reserve(config.sampler.m);
              for (int j = 0; j < config.sampler.m; ++j) {
                Rng chain_rng(derive_seed(stream, j));
                transforms[i].push_back(uniform_sample(space, chain_rng));
              }
            } else {
              const Sample& s = train_ds.samples[batch[i]];
              transforms[i] = mh_chain(theta, model_config, s.x, s.y, space,
                                       config.sampler, stream);
            }
            for (const Transform& g : transforms[i])
              ++histogram[space.index_of(g)];
          }
        }

        const double gamma = dual_ascent ? dual.gamma : (config.mode == TrainMode::Penalized ? config.fixed_gamma : 0.0);
        const BatchEval ev = eval_batch(theta, model_config, train_ds, batch,
                                        transforms, gamma != 0.0);
        const double slack = augmented ? ev.aug_loss - config.epsilon : 0.0;

        Gradients grad(theta.size());
        if (gamma != 0.0) {
          for (std::size_t p = 0; p < theta.size(); ++p)
            grad[p] = ev.clean_grad[p] + gamma * ev.aug_grad[p];
        } else {
          grad = ev.clean_grad;
        }
        theta = sgd_step(theta, grad, config.eta_p);

        if (dual_ascent) dual = dual_update(dual, slack);

        epoch_clean += ev.clean_loss * static_cast<double>(count);
        epoch_slack += slack * static_cast<double>(count);
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " (epoch " +
                               std::to_string(epoch) + ", batch " +
                               std::to_string(batch_index) + ")",
                           epoch, batch_index);
      }
    }

    EpochMetrics m;
    m.epoch = epoch;
    m.train_loss = epoch_clean / static_cast<double>(n);
    m.slack = augmented ? epoch_slack / static_cast<double>(n) : 0.0;
    m.gamma = dual_ascent ? dual.gamma
                          : (config.mode == TrainMode::Penalized
                                 ? config.fixed_gamma
                                 : 0.0);
    m.transform_histogram = std::move(histogram);
    m.entropy = augmented ? empirical_entropy(m.transform_histogram) : 0.0;
    try {
      const auto [test_loss, test_acc] = evaluate(theta, model_config, test_ds);
      m.test_loss = test_loss;
      m.test_accuracy = test_acc;
    } catch (const NumericError& e) {
      throw NumericError(std::string(e.what()) + " (epoch " +
                             std::to_string(epoch) + ", test evaluation)",
                         epoch, batch_index - 1);
    }
    if (on_epoch) on_epoch(m);
    result.epochs.push_back(std::move(m));
  }

  result.final_theta = std::move(theta);
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return result;
}

}  // namespace invaug
