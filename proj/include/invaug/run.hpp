#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "invaug/data.hpp"
#include "invaug/model.hpp"
#include "invaug/trainer.hpp"
#include "invaug/transform.hpp"

namespace invaug {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kConfigFormat = "invaug-run/1";

// Declarative experiment description; see README for the schema.
struct RunConfig {
  SyntheticSpec dataset;
  std::vector<std::string> space_kinds;
  int levels_per_op = 30;
  MLPConfig model;
  TrainerConfig trainer;
  std::optional<std::uint64_t> master_seed;  // re-derives model/trainer seeds
  std::filesystem::path output_dir;

  struct SweepField {
    std::string path;  // dot-separated, e.g. "trainer.epsilon"
    std::vector<nlohmann::json> values;
  };
  std::vector<SweepField> sweep;

  // Resolved config echo (defaults materialized, overrides applied).
  nlohmann::json resolved;
};

// Parses and validates; throws ConfigError naming the offending field.
RunConfig parse_run_config(const nlohmann::json& j);

// Reads a config file. A manifest.json (object with a "config" key) is
// accepted as well, so any run directory is replayable as-is.
RunConfig load_run_config(const std::filesystem::path& path,
                          std::optional<std::uint64_t> seed_override = {},
                          std::optional<std::filesystem::path> out_override = {});

TransformSpace build_space(const RunConfig& config);

// Runs training and writes manifest.json, metrics.csv, histograms.jsonl and
// checkpoint.bin into output_dir. Returns 0 on success; on numeric abort
// logs the epoch/batch coordinates and returns 1.
int run_train(const RunConfig& config, std::ostream& log);

// One training run per grid point of the sweep block (subdirectories
// point_000, ...), plus a sweep.csv summary of final-epoch metrics.
int run_sweep(const RunConfig& config, std::ostream& log);

// Orbit diagnostics for one training sample, as JSON, using the checkpoint
// in output_dir.
int run_oracle(const RunConfig& config, int sample_index, std::ostream& out,
               std::ostream& log);

// Finite-difference gradient check of the configured model; exit 0 iff the
// max relative error over 20 probes is < 1e-5. `perturb` corrupts the
// analytic gradient (negative control).
int run_gradcheck(const RunConfig& config, double perturb, std::ostream& out);

// Per-step CSV trace of one MH chain for the given training sample; uses the
// checkpoint when present, otherwise freshly initialized parameters.
int run_sample_trace(const RunConfig& config, int sample_index,
                     std::ostream& out, std::ostream& log);

}  // namespace invaug
