#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace invaug {

enum class Activation { Tanh, Relu };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

// Fully connected classifier; layer_sizes = {d, hidden..., K}. Hidden layers
// use the configured activation, the output layer is linear (logits).
struct MLPConfig {
  std::vector<int> layer_sizes;
  Activation activation = Activation::Tanh;
  double init_scale = 0.5;
  std::uint64_t seed = 0;
};

void validate(const MLPConfig& config);

// Flat parameter layout: W0 (row-major, out x in), b0, W1, b1, ...
using ParameterVector = std::vector<double>;
using Gradients = std::vector<double>;

std::size_t param_count(const MLPConfig& config);

// Byte offset (in doubles) of each layer's (W, b) block in the flat vector.
std::vector<std::size_t> layer_offsets(const MLPConfig& config);

// Entries uniform in [-init_scale, init_scale], seeded by config.seed.
ParameterVector init_params(const MLPConfig& config);

std::vector<double> forward(std::span<const double> theta,
                            const MLPConfig& config, std::span<const double> x);

// Cross entropy -log softmax(logits)[y], computed with max subtraction.
double loss(std::span<const double> logits, int y);

struct LossGrad {
  double loss = 0.0;
  Gradients grad;
};

// Analytic gradient of loss(forward(theta, x), y) w.r.t. theta.
LossGrad loss_grad(std::span<const double> theta, const MLPConfig& config,
                   std::span<const double> x, int y);

// theta' = theta - lr * grad
ParameterVector sgd_step(std::span<const double> theta,
                         std::span<const double> grad, double lr);

// Analytic gradients vs central finite differences on random probes.
struct GradCheckReport {
  double max_rel_err = 0.0;
  std::size_t worst_probe = 0;
  std::size_t worst_param = 0;
  // Worst relative error per layer, over all probes.
  std::vector<double> per_layer_max;
};

// Each probe draws fresh (theta, x, y) from a stream derived from `seed`.
// `perturb` is added to the first analytic gradient entry of every probe
// (self-test hook for the negative control).
GradCheckReport gradient_check(const MLPConfig& config, int n_probes,
                               std::uint64_t seed, double h = 1e-5,
                               double perturb = 0.0);

// Versioned checkpoint: text header (config) + raw little-endian theta.
// Round-trips bit-exactly.
void save_checkpoint(const std::filesystem::path& path, const MLPConfig& config,
                     std::span<const double> theta);
std::pair<MLPConfig, ParameterVector> load_checkpoint(
    const std::filesystem::path& path);

}  // namespace invaug
