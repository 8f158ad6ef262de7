#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "invaug/data.hpp"
#include "invaug/model.hpp"
#include "invaug/sampler.hpp"
#include "invaug/transform.hpp"

namespace invaug {

enum class TrainMode { PrimalDual, Penalized, Erm, UniformConstrained };

std::string mode_name(TrainMode mode);
TrainMode mode_from_name(const std::string& name);

// Non-negative dual variable and its ascent step size.
struct DualState {
  double gamma = 0.0;
  double eta_d = 1e-3;
};

// gamma' = max(0, gamma + eta_d * slack)
DualState dual_update(DualState d, double slack);

struct TrainerConfig {
  TrainMode mode = TrainMode::PrimalDual;
  double epsilon = 0.0;      // constraint level
  double eta_p = 0.05;       // primal step size
  double eta_d = 1e-3;       // dual step size
  double fixed_gamma = 0.0;  // penalized mode only
  int batch_size = 64;
  int epochs = 1;
  SamplerConfig sampler;
  std::uint64_t seed = 0;
};

void validate(const TrainerConfig& config);

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;  // clean loss, mean over the epoch's batches
  double slack = 0.0;       // mean augmented loss minus epsilon (0 for erm)
  double gamma = 0.0;       // dual variable at the end of the epoch
  double entropy = 0.0;     // entropy of the epoch's sampled transforms
  std::vector<std::uint64_t> transform_histogram;
  double test_loss = 0.0;
  double test_accuracy = 0.0;
};

struct RunResult {
  std::vector<EpochMetrics> epochs;
  ParameterVector final_theta;
  MLPConfig model_config;
  TrainerConfig trainer_config;
  double wall_seconds = 0.0;
};

// Batch mean over m sampled transforms per sample of the augmented loss,
// minus epsilon. transforms[i] holds the transforms for batch sample i.
double constraint_slack(std::span<const double> theta, const MLPConfig& config,
                        const Dataset& ds, std::span<const std::size_t> batch,
                        const std::vector<std::vector<Transform>>& transforms,
                        double epsilon);

double lagrangian(double clean_loss, double gamma, double slack);

// One SGD step on the Lagrangian: grad = grad(clean mean) + gamma *
// grad(augmented mean), transforms held fixed.
ParameterVector primal_update(std::span<const double> theta,
                              const MLPConfig& config, const Dataset& ds,
                              std::span<const std::size_t> batch,
                              const std::vector<std::vector<Transform>>& transforms,
                              double gamma, double eta_p);

std::pair<double, double> evaluate(std::span<const double> theta,
                                   const MLPConfig& config, const Dataset& ds);

using EpochCallback = std::function<void(const EpochMetrics&)>;

RunResult train(const Dataset& train_ds, const Dataset& test_ds,
                const TransformSpace& space, const MLPConfig& model_config,
                const TrainerConfig& config,
                const EpochCallback& on_epoch = {});

}  // namespace invaug
