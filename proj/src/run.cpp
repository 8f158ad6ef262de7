#include "invaug/run.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <ostream>
#include <sstream>

#include "invaug/errors.hpp"
#include "invaug/format.hpp"
#include "invaug/oracle.hpp"
#include "invaug/rng.hpp"
#include "invaug/sampler.hpp"

namespace invaug {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kModelSeedStream = 0xA;
constexpr std::uint64_t kTrainerSeedStream = 0xB;

std::string utc_now_iso() {
  const std::time_t t =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

const json& require_field(const json& j, const std::string& scope,
                          const char* key) {
  if (!j.is_object())
    throw ConfigError(scope + ": expected an object");
  const auto it = j.find(key);
  if (it == j.end())
    throw ConfigError(scope + "." + key + ": missing required field");
  return *it;
}

template <typename T>
T get_field(const json& j, const std::string& scope, const char* key) {
  try {
    return require_field(j, scope, key).get<T>();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError(scope + "." + key + ": invalid value type");
  }
}

template <typename T>
T get_field_or(const json& j, const std::string& scope, const char* key,
               T fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const std::exception&) {
    throw ConfigError(scope + "." + key + ": invalid value type");
  }
}

SyntheticSpec parse_dataset(const json& j) {
  SyntheticSpec spec;
  const std::string kind = get_field<std::string>(j, "dataset", "kind");
  if (kind == "rings")
    spec.kind = SyntheticKind::Rings;
  else if (kind == "wedges")
    spec.kind = SyntheticKind::Wedges;
  else
    throw ConfigError("dataset.kind: must be \"rings\" or \"wedges\"");
  spec.n_train = get_field<int>(j, "dataset", "n_train");
  spec.n_test = get_field<int>(j, "dataset", "n_test");
  spec.noise_sigma = get_field<double>(j, "dataset", "noise_sigma");
  spec.seed = get_field<std::uint64_t>(j, "dataset", "seed");
  spec.n_classes = get_field_or<int>(j, "dataset", "n_classes",
                                     spec.kind == SyntheticKind::Rings ? 3 : 4);
  if (spec.n_train < 1) throw ConfigError("dataset.n_train: must be >= 1");
  if (spec.n_test < 1) throw ConfigError("dataset.n_test: must be >= 1");
  if (spec.noise_sigma < 0) throw ConfigError("dataset.noise_sigma: must be >= 0");
  if (spec.n_classes < 1) throw ConfigError("dataset.n_classes: must be >= 1");
  return spec;
}

MLPConfig parse_model(const json& j) {
  MLPConfig config;
  config.layer_sizes = get_field<std::vector<int>>(j, "model", "layer_sizes");
  config.activation = activation_from_name(
      get_field_or<std::string>(j, "model", "activation", "tanh"));
  config.init_scale = get_field_or<double>(j, "model", "init_scale", 0.5);
  config.seed = get_field_or<std::uint64_t>(j, "model", "seed", 0);
  try {
    validate(config);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  return config;
}

TrainerConfig parse_trainer(const json& j) {
  TrainerConfig config;
  config.mode = mode_from_name(
      get_field_or<std::string>(j, "trainer", "mode", "primal_dual"));
  config.epsilon = get_field_or<double>(j, "trainer", "epsilon", 0.0);
  if (config.mode != TrainMode::Erm && !j.contains("epsilon"))
    throw ConfigError("trainer.epsilon: required for augmented modes");
  config.eta_p = get_field<double>(j, "trainer", "eta_p");
  config.eta_d = get_field_or<double>(j, "trainer", "eta_d", 1e-3);
  config.fixed_gamma = get_field_or<double>(j, "trainer", "fixed_gamma", 0.0);
  if (config.mode == TrainMode::Penalized && !j.contains("fixed_gamma"))
    throw ConfigError("trainer.fixed_gamma: required for penalized mode");
  config.batch_size = get_field_or<int>(j, "trainer", "batch_size", 64);
  config.epochs = get_field<int>(j, "trainer", "epochs");
  config.seed = get_field_or<std::uint64_t>(j, "trainer", "seed", 0);
  if (j.contains("sampler")) {
    const json& s = j.at("sampler");
    config.sampler.n_steps = get_field_or<int>(s, "trainer.sampler", "n_steps", 2);
    config.sampler.m = get_field_or<int>(s, "trainer.sampler", "m", 1);
    config.sampler.zero_loss_epsilon =
        get_field_or<double>(s, "trainer.sampler", "zero_loss_epsilon", 1e-12);
  }
  if (config.epsilon < 0) throw ConfigError("trainer.epsilon: must be >= 0");
  try {
    validate(config);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("trainer: ") + e.what());
  }
  return config;
}

json echo_config(const RunConfig& c) {
  json j;
  j["dataset"] = {
      {"kind", c.dataset.kind == SyntheticKind::Rings ? "rings" : "wedges"},
      {"n_train", c.dataset.n_train},
      {"n_test", c.dataset.n_test},
      {"noise_sigma", c.dataset.noise_sigma},
      {"seed", c.dataset.seed},
      {"n_classes", c.dataset.n_classes}};
  j["space"] = {{"kinds", c.space_kinds}, {"levels_per_op", c.levels_per_op}};
  j["model"] = {{"layer_sizes", c.model.layer_sizes},
                {"activation", activation_name(c.model.activation)},
                {"init_scale", c.model.init_scale},
                {"seed", c.model.seed}};
  j["trainer"] = {{"mode", mode_name(c.trainer.mode)},
                  {"epsilon", c.trainer.epsilon},
                  {"eta_p", c.trainer.eta_p},
                  {"eta_d", c.trainer.eta_d},
                  {"fixed_gamma", c.trainer.fixed_gamma},
                  {"batch_size", c.trainer.batch_size},
                  {"epochs", c.trainer.epochs},
                  {"seed", c.trainer.seed},
                  {"sampler", {{"n_steps", c.trainer.sampler.n_steps},
                               {"m", c.trainer.sampler.m},
                               {"zero_loss_epsilon",
                                c.trainer.sampler.zero_loss_epsilon}}}};
  if (c.master_seed) j["seed"] = *c.master_seed;
  j["output_dir"] = c.output_dir.string();
  if (!c.sweep.empty()) {
    json sw = json::array();
    for (const auto& field : c.sweep)
      sw.push_back({{"path", field.path}, {"values", field.values}});
    j["sweep"] = sw;
  }
  return j;
}

void set_by_path(json& j, const std::string& path, const json& value) {
  json* cur = &j;
  std::size_t start = 0;
  for (;;) {
    const std::size_t dot = path.find('.', start);
    const std::string part = path.substr(start, dot - start);
    if (part.empty()) throw ConfigError("sweep.path: empty path segment");
    if (dot == std::string::npos) {
      if (!cur->is_object() || !cur->contains(part))
        throw ConfigError("sweep.path: no such config field: " + path);
      (*cur)[part] = value;
      return;
    }
    if (!cur->is_object() || !cur->contains(part))
      throw ConfigError("sweep.path: no such config field: " + path);
    cur = &(*cur)[part];
    start = dot + 1;
  }
}

std::string csv_value(double v) { return fmt_double(v); }

struct TrainArtifacts {
  RunResult result;
  fs::path metrics_path;
};

// Shared by run_train and run_sweep: writes the full run directory.
TrainArtifacts execute_train(const RunConfig& config, std::ostream& log) {
  const fs::path dir = config.output_dir;
  if (dir.empty()) throw ConfigError("output_dir: missing (set it or pass --out)");
  fs::create_directories(dir);

  json manifest;
  manifest["format"] = kConfigFormat;
  manifest["tool_version"] = kToolVersion;
  manifest["status"] = "running";
  manifest["started_utc"] = utc_now_iso();
  manifest["finished_utc"] = nullptr;
  manifest["config"] = config.resolved;
  manifest["files"] =
      json::array({"metrics.csv", "histograms.jsonl", "checkpoint.bin"});
  manifest["error"] = nullptr;
  const auto write_manifest = [&] {
    std::ofstream out(dir / "manifest.json");
    out << manifest.dump(2) << '\n';
  };
  write_manifest();

  const auto [train_ds, test_ds] = make_dataset_pair(config.dataset);
  const TransformSpace space = build_space(config);

  std::ofstream metrics(dir / "metrics.csv");
  std::ofstream histograms(dir / "histograms.jsonl");
  metrics << "epoch,train_loss,slack,gamma,entropy,test_loss,test_acc\n";

  const auto on_epoch = [&](const EpochMetrics& m) {
    metrics << m.epoch << ',' << csv_value(m.train_loss) << ','
            << csv_value(m.slack) << ',' << csv_value(m.gamma) << ','
            << csv_value(m.entropy) << ',' << csv_value(m.test_loss) << ','
            << csv_value(m.test_accuracy) << '\n';
    json h;
    h["epoch"] = m.epoch;
    h["counts"] = m.transform_histogram;
    histograms << h.dump() << '\n';
  };

  try {
    RunResult result =
        train(train_ds, test_ds, space, config.model, config.trainer, on_epoch);
    save_checkpoint(dir / "checkpoint.bin", config.model, result.final_theta);
    manifest["status"] = "complete";
    manifest["finished_utc"] = utc_now_iso();
    manifest["wall_seconds"] = result.wall_seconds;
    write_manifest();
    return {std::move(result), dir / "metrics.csv"};
  } catch (const NumericError& e) {
    manifest["status"] = "failed";
    manifest["finished_utc"] = utc_now_iso();
    manifest["error"] = e.what();
    write_manifest();
    log << "numeric abort: " << e.what() << '\n';
    throw;
  }
}

ParameterVector checkpoint_or_init(const RunConfig& config,
                                   const fs::path& checkpoint_path,
                                   bool required) {
  if (fs::exists(checkpoint_path)) {
    auto [model, theta] = load_checkpoint(checkpoint_path);
    if (model.layer_sizes != config.model.layer_sizes)
      throw ConfigError("checkpoint model does not match config.model");
    return theta;
  }
  if (required)
    throw ConfigError("checkpoint not found: " + checkpoint_path.string());
  return init_params(config.model);
}

}  // namespace

RunConfig parse_run_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  RunConfig config;
  config.dataset = parse_dataset(require_field(j, "config", "dataset"));

  const json& space = require_field(j, "config", "space");
  config.space_kinds = get_field<std::vector<std::string>>(space, "space", "kinds");
  config.levels_per_op = get_field_or<int>(space, "space", "levels_per_op", 30);
  if (config.space_kinds.empty())
    throw ConfigError("space.kinds: must list at least one transform kind");
  if (config.levels_per_op < 1)
    throw ConfigError("space.levels_per_op: must be >= 1");
  for (const std::string& name : config.space_kinds) {
    try {
      kind_from_name(name);
    } catch (const std::invalid_argument&) {
      throw ConfigError("space.kinds: unknown transform kind: " + name);
    }
  }

  config.model = parse_model(require_field(j, "config", "model"));
  config.trainer = parse_trainer(require_field(j, "config", "trainer"));

  if (j.contains("seed") && !j.at("seed").is_null()) {
    config.master_seed = get_field<std::uint64_t>(j, "config", "seed");
    config.model.seed = derive_seed(*config.master_seed, kModelSeedStream);
    config.trainer.seed = derive_seed(*config.master_seed, kTrainerSeedStream);
  }

  if (j.contains("output_dir"))
    config.output_dir = get_field<std::string>(j, "config", "output_dir");

  if (j.contains("sweep")) {
    const json& sweep = j.at("sweep");
    if (!sweep.is_array()) throw ConfigError("sweep: expected an array");
    for (std::size_t i = 0; i < sweep.size(); ++i) {
      const std::string scope = "sweep[" + std::to_string(i) + "]";
      RunConfig::SweepField field;
      field.path = get_field<std::string>(sweep[i], scope, "path");
      const json& values = require_field(sweep[i], scope, "values");
      if (!values.is_array() || values.empty())
        throw ConfigError(scope + ".values: expected a non-empty array");
      field.values.assign(values.begin(), values.end());
      config.sweep.push_back(std::move(field));
    }
  }

  if (config.model.layer_sizes.front() != 2)
    throw ConfigError("model.layer_sizes: input dimension must be 2");
  if (config.model.layer_sizes.back() < config.dataset.n_classes)
    throw ConfigError("model.layer_sizes: output smaller than dataset.n_classes");

  config.resolved = echo_config(config);
  return config;
}

RunConfig load_run_config(const fs::path& path,
                          std::optional<std::uint64_t> seed_override,
                          std::optional<fs::path> out_override) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config parse error in " + path.string() + ": " + e.what());
  }
  // A manifest is a valid config source: unwrap its echo.
  if (j.is_object() && j.contains("config") && j.at("config").is_object())
    j = j.at("config");
  if (seed_override) j["seed"] = *seed_override;
  if (out_override) j["output_dir"] = out_override->string();
  return parse_run_config(j);
}

TransformSpace build_space(const RunConfig& config) {
  return TransformSpace::from_names(config.space_kinds, config.levels_per_op);
}

int run_train(const RunConfig& config, std::ostream& log) {
  try {
    const TrainArtifacts artifacts = execute_train(config, log);
    const EpochMetrics& last = artifacts.result.epochs.back();
    log << "run complete: " << config.output_dir.string()
        << " final_train_loss=" << fmt_double(last.train_loss)
        << " test_acc=" << fmt_double(last.test_accuracy) << '\n';
    return 0;
  } catch (const NumericError&) {
    return 1;
  }
}

int run_sweep(const RunConfig& config, std::ostream& log) {
  if (config.sweep.empty())
    throw ConfigError("sweep: config has no sweep block");
  if (config.output_dir.empty())
    throw ConfigError("output_dir: missing (set it or pass --out)");
  fs::create_directories(config.output_dir);

  std::vector<std::size_t> sizes;
  std::size_t total = 1;
  for (const auto& field : config.sweep) {
    sizes.push_back(field.values.size());
    total *= field.values.size();
  }

  std::ofstream summary(config.output_dir / "sweep.csv");
  summary << "point";
  for (const auto& field : config.sweep) summary << ',' << field.path;
  summary << ",epsilon,final_train_loss,final_slack,final_gamma,final_entropy,"
             "final_test_loss,test_acc,status\n";

  int failures = 0;
  std::vector<std::size_t> idx(config.sweep.size(), 0);
  for (std::size_t point = 0; point < total; ++point) {
    json j = config.resolved;
    j.erase("sweep");
    for (std::size_t f = 0; f < config.sweep.size(); ++f)
      set_by_path(j, config.sweep[f].path, config.sweep[f].values[idx[f]]);

    char name[32];
    std::snprintf(name, sizeof(name), "point_%03zu", point);
    j["output_dir"] = (config.output_dir / name).string();

    summary << name;
    for (std::size_t f = 0; f < config.sweep.size(); ++f) {
      const json& v = config.sweep[f].values[idx[f]];
      summary << ','
              << (v.is_number_float() ? fmt_double(v.get<double>()) : v.dump());
    }

    try {
      const RunConfig point_config = parse_run_config(j);
      const TrainArtifacts artifacts = execute_train(point_config, log);
      const EpochMetrics& last = artifacts.result.epochs.back();
      summary << ',' << fmt_double(point_config.trainer.epsilon) << ','
              << csv_value(last.train_loss) << ',' << csv_value(last.slack)
              << ',' << csv_value(last.gamma) << ',' << csv_value(last.entropy)
              << ',' << csv_value(last.test_loss) << ','
              << csv_value(last.test_accuracy) << ",ok\n";
    } catch (const std::exception& e) {
      log << name << " failed: " << e.what() << '\n';
      summary << ",,,,,,,failed\n";
      ++failures;
    }

    for (std::size_t f = config.sweep.size(); f-- > 0;) {
      if (++idx[f] < sizes[f]) break;
      idx[f] = 0;
    }
  }
  log << "sweep complete: " << total - failures << "/" << total << " points ok\n";
  return failures == 0 ? 0 : 1;
}

int run_oracle(const RunConfig& config, int sample_index, std::ostream& out,
               std::ostream& log) {
  const ParameterVector theta =
      checkpoint_or_init(config, config.output_dir / "checkpoint.bin", true);
  const auto [train_ds, test_ds] = make_dataset_pair(config.dataset);
  if (sample_index < 0 ||
      sample_index >= static_cast<int>(train_ds.samples.size()))
    throw ConfigError("sample index out of range for the training split");
  const Sample& s = train_ds.samples[sample_index];
  const TransformSpace space = build_space(config);

  const OrbitLosses ol = orbit_losses(theta, config.model, s.x, s.y, space);
  const SmoothedDistribution sd = smoothed_lambda(ol);
  const auto [max_loss, argmax] = adversarial_loss(ol);
  const double clean = loss(forward(theta, config.model, s.x), s.y);
  double gap = 0.0;
  for (double l : ol.losses) gap = std::max(gap, std::abs(clean - l));

  double prob_total = 0.0;
  for (double p : sd.probs) prob_total += p;
  if (std::abs(prob_total - 1.0) > 1e-9) {
    log << "internal error: smoothed distribution does not normalize\n";
    return 1;
  }

  json report;
  report["sample_index"] = sample_index;
  report["x"] = s.x;
  report["y"] = s.y;
  report["losses"] = ol.losses;
  report["probs"] = sd.probs;
  report["c_star"] = sd.c_star;
  report["max_loss"] = max_loss;
  report["argmax"] = argmax;
  report["clean_loss"] = clean;
  report["invariance_gap"] = gap;
  out << report.dump(2) << '\n';
  return 0;
}

int run_gradcheck(const RunConfig& config, double perturb, std::ostream& out) {
  constexpr int kProbes = 20;
  constexpr double kThreshold = 1e-5;
  const std::uint64_t seed =
      config.master_seed ? *config.master_seed : config.model.seed;
  const GradCheckReport report =
      gradient_check(config.model, kProbes, seed, 1e-5, perturb);

  json j;
  j["n_probes"] = kProbes;
  j["max_rel_err"] = report.max_rel_err;
  j["worst_probe"] = report.worst_probe;
  j["worst_param"] = report.worst_param;
  j["per_layer_max"] = report.per_layer_max;
  j["threshold"] = kThreshold;
  j["pass"] = report.max_rel_err < kThreshold;
  out << j.dump(2) << '\n';
  return report.max_rel_err < kThreshold ? 0 : 1;
}

int run_sample_trace(const RunConfig& config, int sample_index,
                     std::ostream& out, std::ostream& log) {
  const ParameterVector theta =
      checkpoint_or_init(config, config.output_dir / "checkpoint.bin", false);
  const auto [train_ds, test_ds] = make_dataset_pair(config.dataset);
  if (sample_index < 0 ||
      sample_index >= static_cast<int>(train_ds.samples.size()))
    throw ConfigError("sample index out of range for the training split");
  const Sample& s = train_ds.samples[sample_index];
  const TransformSpace space = build_space(config);

  const std::vector<ChainStep> trace = mh_chain_trace(
      theta, config.model, s.x, s.y, space, config.trainer.sampler.n_steps,
      config.trainer.sampler.zero_loss_epsilon,
      derive_seed(config.trainer.seed, 0x7, sample_index));

  out << "step,kind,level,loss,accepted\n";
  for (const ChainStep& step : trace)
    out << step.step << ',' << kind_name(step.g.kind) << ',' << step.g.level
        << ',' << fmt_double(step.loss) << ',' << (step.accepted ? 1 : 0)
        << '\n';
  log << "traced " << trace.size() << " chain states\n";
  return 0;
}

}  // namespace invaug
