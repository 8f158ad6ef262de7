#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "invaug/errors.hpp"
#include "invaug/run.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "Run config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", args.seed,
                  "Master seed override (re-derives model/trainer seeds)");
  cmd->add_option("--out", args.out_dir, "Output directory override");
}

invaug::RunConfig load(const CommonArgs& args) {
  std::optional<std::filesystem::path> out;
  if (args.out_dir) out = *args.out_dir;
  return invaug::load_run_config(args.config_path, args.seed, out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"invaug: invariance-constrained data augmentation trainer"};
  app.require_subcommand(1);

  CommonArgs train_args;
  CLI::App* train = app.add_subcommand("train", "Run one training job");
  add_common(train, train_args);

  CommonArgs sweep_args;
  CLI::App* sweep = app.add_subcommand("sweep", "Run the config's sweep grid");
  add_common(sweep, sweep_args);

  CommonArgs oracle_args;
  int oracle_sample = 0;
  CLI::App* oracle = app.add_subcommand(
      "oracle", "Exact orbit diagnostics for one training sample (JSON)");
  add_common(oracle, oracle_args);
  oracle->add_option("--sample", oracle_sample, "Training sample index")
      ->required();

  CommonArgs gradcheck_args;
  double gradcheck_perturb = 0.0;
  CLI::App* gradcheck = app.add_subcommand(
      "gradcheck", "Finite-difference check of the analytic gradients");
  add_common(gradcheck, gradcheck_args);
  gradcheck->add_option(
      "--perturb", gradcheck_perturb,
      "Corrupt the analytic gradient by this amount (negative control)");

  CommonArgs trace_args;
  int trace_sample = 0;
  CLI::App* trace = app.add_subcommand(
      "sample-trace", "Per-step MH chain trace for one training sample (CSV)");
  add_common(trace, trace_args);
  trace->add_option("--sample", trace_sample, "Training sample index");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return invaug::run_train(load(train_args), std::cerr);
    if (sweep->parsed()) return invaug::run_sweep(load(sweep_args), std::cerr);
    if (oracle->parsed())
      return invaug::run_oracle(load(oracle_args), oracle_sample, std::cout,
                                std::cerr);
    if (gradcheck->parsed())
      return invaug::run_gradcheck(load(gradcheck_args), gradcheck_perturb,
                                   std::cout);
    if (trace->parsed())
      return invaug::run_sample_trace(load(trace_args), trace_sample, std::cout,
                                      std::cerr);
  } catch (const invaug::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
