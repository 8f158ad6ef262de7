#include "invaug/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "invaug/errors.hpp"
#include "invaug/format.hpp"
#include "invaug/rng.hpp"

namespace invaug {

std::string activation_name(Activation a) {
  return a == Activation::Tanh ? "tanh" : "relu";
}

Activation activation_from_name(const std::string& name) {
  if (name == "tanh") return Activation::Tanh;
  if (name == "relu") return Activation::Relu;
  throw std::invalid_argument("unknown activation: " + name);
}

void validate(const MLPConfig& config) {
  if (config.layer_sizes.size() < 2)
    throw std::invalid_argument("model: need at least input and output layers");
  for (int n : config.layer_sizes)
    if (n < 1) throw std::invalid_argument("model: layer sizes must be >= 1");
  if (!(config.init_scale > 0.0))
    throw std::invalid_argument("model: init_scale must be > 0");
}

std::size_t param_count(const MLPConfig& config) {
  validate(config);
  std::size_t p = 0;
  for (std::size_t l = 0; l + 1 < config.layer_sizes.size(); ++l) {
    const auto in = static_cast<std::size_t>(config.layer_sizes[l]);
    const auto out = static_cast<std::size_t>(config.layer_sizes[l + 1]);
    p += out * in + out;
  }
  return p;
}

std::vector<std::size_t> layer_offsets(const MLPConfig& config) {
  validate(config);
  std::vector<std::size_t> offsets;
  std::size_t p = 0;
  for (std::size_t l = 0; l + 1 < config.layer_sizes.size(); ++l) {
    offsets.push_back(p);
    const auto in = static_cast<std::size_t>(config.layer_sizes[l]);
    const auto out = static_cast<std::size_t>(config.layer_sizes[l + 1]);
    p += out * in + out;
  }
  return offsets;
}

ParameterVector init_params(const MLPConfig& config) {
  validate(config);
  ParameterVector theta(param_count(config));
  Rng rng(config.seed);
  for (double& v : theta)
    v = rng.uniform(-config.init_scale, config.init_scale);
  return theta;
}

namespace {

double activate(Activation a, double z) {
  return a == Activation::Tanh ? std::tanh(z) : std::max(0.0, z);
}

double activate_grad(Activation a, double z, double act) {
  if (a == Activation::Tanh) return 1.0 - act * act;
  return z > 0.0 ? 1.0 : 0.0;
}

void check_input(const MLPConfig& config, std::span<const double> theta,
                 std::span<const double> x) {
  validate(config);
  if (theta.size() != param_count(config))
    throw std::invalid_argument("model: parameter vector length mismatch");
  if (x.size() != static_cast<std::size_t>(config.layer_sizes.front()))
    throw std::invalid_argument("model: input dimension mismatch");
}

// Forward pass keeping pre-activations and activations per layer.
struct ForwardTrace {
  std::vector<std::vector<double>> pre;  // z per non-input layer
  std::vector<std::vector<double>> act;  // a per layer, act[0] = x
};

ForwardTrace run_forward(std::span<const double> theta, const MLPConfig& config,
                         std::span<const double> x) {
  ForwardTrace t;
  t.act.emplace_back(x.begin(), x.end());
  std::size_t offset = 0;
  const std::size_t n_layers = config.layer_sizes.size() - 1;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const auto in = static_cast<std::size_t>(config.layer_sizes[l]);
    const auto out = static_cast<std::size_t>(config.layer_sizes[l + 1]);
    const double* w = theta.data() + offset;
    const double* b = theta.data() + offset + out * in;
    const std::vector<double>& prev = t.act.back();
    std::vector<double> z(out);
    for (std::size_t r = 0; r < out; ++r) {
      double acc = b[r];
      const double* row = w + r * in;
      for (std::size_t c = 0; c < in; ++c) acc += row[c] * prev[c];
      z[r] = acc;
    }
    std::vector<double> a(out);
    const bool last = l + 1 == n_layers;
    for (std::size_t r = 0; r < out; ++r)
      a[r] = last ? z[r] : activate(config.activation, z[r]);
    t.pre.push_back(std::move(z));
    t.act.push_back(std::move(a));
    offset += out * in + out;
  }
  return t;
}

std::vector<double> softmax(std::span<const double> logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

}  // namespace

std::vector<double> forward(std::span<const double> theta,
                            const MLPConfig& config, std::span<const double> x) {
  check_input(config, theta, x);
  return run_forward(theta, config, x).act.back();
}

double loss(std::span<const double> logits, int y) {
  if (y < 0 || y >= static_cast<int>(logits.size()))
    throw std::invalid_argument("loss: label out of range");
  double m = logits[0];
  for (double v : logits) {
    if (!std::isfinite(v)) throw NumericError("loss: non-finite logit");
    m = std::max(m, v);
  }
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v - m);
  return m + std::log(sum) - logits[y];
}

LossGrad loss_grad(std::span<const double> theta, const MLPConfig& config,
                   std::span<const double> x, int y) {
  check_input(config, theta, x);
  const ForwardTrace t = run_forward(theta, config, x);
  const std::vector<double>& logits = t.act.back();

  LossGrad out;
  out.loss = loss(logits, y);
  out.grad.assign(theta.size(), 0.0);

  std::vector<double> delta = softmax(logits);
  delta[y] -= 1.0;

  const std::vector<std::size_t> offsets = layer_offsets(config);
  const std::size_t n_layers = config.layer_sizes.size() - 1;
  for (std::size_t l = n_layers; l-- > 0;) {
    const auto in = static_cast<std::size_t>(config.layer_sizes[l]);
    const auto out_n = static_cast<std::size_t>(config.layer_sizes[l + 1]);
    const std::vector<double>& prev = t.act[l];
    double* gw = out.grad.data() + offsets[l];
    double* gb = gw + out_n * in;
    for (std::size_t r = 0; r < out_n; ++r) {
      double* row = gw + r * in;
      for (std::size_t c = 0; c < in; ++c) row[c] = delta[r] * prev[c];
      gb[r] = delta[r];
    }
    if (l == 0) break;
    const double* w = theta.data() + offsets[l];
    std::vector<double> next(in, 0.0);
    for (std::size_t c = 0; c < in; ++c) {
      double acc = 0.0;
      for (std::size_t r = 0; r < out_n; ++r) acc += w[r * in + c] * delta[r];
      next[c] = acc * activate_grad(config.activation, t.pre[l - 1][c],
                                    t.act[l][c]);
    }
    delta = std::move(next);
  }
  return out;
}

ParameterVector sgd_step(std::span<const double> theta,
                         std::span<const double> grad, double lr) {
  if (theta.size() != grad.size())
    throw std::invalid_argument("sgd_step: length mismatch");
  if (!(lr > 0.0)) throw std::invalid_argument("sgd_step: lr must be > 0");
  ParameterVector next(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i)
    next[i] = theta[i] - lr * grad[i];
  return next;
}

GradCheckReport gradient_check(const MLPConfig& config, int n_probes,
                               std::uint64_t seed, double h, double perturb) {
  validate(config);
  if (n_probes < 1)
    throw std::invalid_argument("gradient_check: n_probes must be >= 1");
  const std::size_t d = config.layer_sizes.front();
  const int n_classes = config.layer_sizes.back();
  const std::vector<std::size_t> offsets = layer_offsets(config);

  GradCheckReport report;
  report.per_layer_max.assign(offsets.size(), 0.0);

  for (int probe = 0; probe < n_probes; ++probe) {
    Rng rng(derive_seed(seed, 0x6, probe));
    MLPConfig probe_config = config;
    probe_config.seed = rng.next_u64();
    ParameterVector theta = init_params(probe_config);
    std::vector<double> x(d);
    for (double& v : x) v = rng.uniform(-2.0, 2.0);
    const int y = static_cast<int>(rng.next_below(n_classes));

    LossGrad analytic = loss_grad(theta, config, x, y);
    if (perturb != 0.0) analytic.grad[0] += perturb;

    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double saved = theta[i];
      theta[i] = saved + h;
      const double lp = loss(forward(theta, config, x), y);
      theta[i] = saved - h;
      const double lm = loss(forward(theta, config, x), y);
      theta[i] = saved;
      const double numeric = (lp - lm) / (2.0 * h);
      const double denom =
          std::max({std::abs(analytic.grad[i]), std::abs(numeric), 1e-3});
      const double rel = std::abs(analytic.grad[i] - numeric) / denom;

      std::size_t layer = 0;
      while (layer + 1 < offsets.size() && i >= offsets[layer + 1]) ++layer;
      report.per_layer_max[layer] = std::max(report.per_layer_max[layer], rel);
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_probe = static_cast<std::size_t>(probe);
        report.worst_param = i;
      }
    }
  }
  return report;
}

namespace {
constexpr char kCheckpointMagic[] = "INVAUG_CKPT_V1";
}

void save_checkpoint(const std::filesystem::path& path, const MLPConfig& config,
                     std::span<const double> theta) {
  validate(config);
  if (theta.size() != param_count(config))
    throw std::invalid_argument("checkpoint: theta length mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << kCheckpointMagic << '\n';
  out << "layers";
  for (int n : config.layer_sizes) out << ' ' << n;
  out << '\n';
  out << "activation " << activation_name(config.activation) << '\n';
  out << "init_scale " << fmt_double(config.init_scale) << '\n';
  out << "seed " << config.seed << '\n';
  out << "params " << theta.size() << '\n';
  out.write(reinterpret_cast<const char*>(theta.data()),
            static_cast<std::streamsize>(theta.size() * sizeof(double)));
  if (!out) throw std::runtime_error("checkpoint write failed: " + path.string());
}

std::pair<MLPConfig, ParameterVector> load_checkpoint(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != kCheckpointMagic)
    throw std::runtime_error("bad checkpoint header: " + path.string());

  MLPConfig config;
  std::size_t n_params = 0;
  for (int field = 0; field < 5; ++field) {
    if (!std::getline(in, line))
      throw std::runtime_error("truncated checkpoint: " + path.string());
    std::stringstream ss(line);
    std::string key;
    ss >> key;
    if (key == "layers") {
      int n;
      while (ss >> n) config.layer_sizes.push_back(n);
    } else if (key == "activation") {
      std::string name;
      ss >> name;
      config.activation = activation_from_name(name);
    } else if (key == "init_scale") {
      ss >> config.init_scale;
    } else if (key == "seed") {
      ss >> config.seed;
    } else if (key == "params") {
      ss >> n_params;
    } else {
      throw std::runtime_error("unknown checkpoint field: " + key);
    }
  }
  validate(config);
  if (n_params != param_count(config))
    throw std::runtime_error("checkpoint parameter count mismatch");
  ParameterVector theta(n_params);
  in.read(reinterpret_cast<char*>(theta.data()),
          static_cast<std::streamsize>(n_params * sizeof(double)));
  if (static_cast<std::size_t>(in.gcount()) != n_params * sizeof(double))
    throw std::runtime_error("truncated checkpoint payload: " + path.string());
  return {std::move(config), std::move(theta)};
}

}  // namespace invaug
