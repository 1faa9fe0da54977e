// se3lab: target generation, training runs, W1 evaluation and sweeps.

#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "runner/runner.hpp"
#include "se3lab/error.hpp"

using namespace se3lab;

namespace {

std::map<std::string, double> ParseParams(const std::vector<std::string>& items) {
  std::map<std::string, double> params;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw Error(ErrorKind::kConfig, "--param expects name=value, got '" + item + "'");
    }
    try {
      std::size_t used = 0;
      const std::string text = item.substr(eq + 1);
      params[item.substr(0, eq)] = std::stod(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
    } catch (const std::logic_error&) {
      throw Error(ErrorKind::kConfig, "--param " + item + ": value is not a number");
    }
  }
  return params;
}

int Target(const std::string& space, const std::string& name, std::size_t n, std::uint64_t seed,
           const std::vector<std::string>& params, std::string out) {
  TargetSpec spec{ParseSpace(space), name, n, seed, ParseParams(params)};
  if (out.empty()) out = name + ".csv";
  runner::RunTarget(spec, out);
  std::cout << "wrote " << n << " samples to " << out << "\n";
  return 0;
}

int Train(const std::string& config_path, const std::string& out, bool quiet) {
  runner::RunConfig config = runner::LoadRunConfig(config_path);
  if (!out.empty()) config.output_dir = out;
  TrainCallback progress;
  if (!quiet) {
    progress = [](const TrainRecord& r) {
      std::printf("epoch %d  loss %.6g  w1 %.6g\n", r.epoch, r.loss, r.w1);
      std::fflush(stdout);
    };
  }
  const runner::RunResult r = runner::RunTrain(config, progress);
  std::printf("initial_w1 %.9g\nfinal_w1 %.9g\nratio %.9g\n", r.initial_w1, r.final_w1, r.final_w1 / r.initial_w1);
  if (!(r.final_w1 < r.initial_w1)) {
    std::fprintf(stderr, "final W1 did not improve on the initial W1\n");
    return 2;
  }
  return 0;
}

int Eval(const std::string& samples, const std::string& target, const std::string& space, std::string cost,
         std::string record) {
  const Space sp = ParseSpace(space);
  if (cost.empty()) cost = sp == Space::kR3 ? "euclidean" : "geodesic";
  if (record.empty()) record = samples + ".w1.json";
  const auto r = runner::RunEval(samples, target, sp, runner::ParseCost(cost), record);
  std::printf("%.9g\n", r.w1);
  return 0;
}

int Sweep(const std::string& config_path, const std::string& out, int threads) {
  runner::SweepConfig config = runner::LoadSweepConfig(config_path);
  if (!out.empty()) config.output_dir = out;
  const auto cells = runner::RunSweep(config, threads);
  int failed = 0;
  for (const auto& c : cells) {
    std::printf("%-4s %-6s seed %llu  ", std::string(SpaceName(c.space)).c_str(),
                std::string(ParadigmName(c.paradigm)).c_str(), static_cast<unsigned long long>(c.seed));
    if (c.ok) {
      std::printf("initial %.6g  final %.6g  ratio %.4f\n", c.initial_w1, c.final_w1, c.final_w1 / c.initial_w1);
    } else {
      std::printf("FAILED: %s\n", c.status.c_str());
      ++failed;
    }
  }
  return failed ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"se3lab: diffusion, score and flow alignment on R^3 and SO(3)"};
  app.set_version_flag("--version", runner::Version());
  app.require_subcommand(1);

  std::string space = "r3", name, out, config, samples, target, cost, record;
  std::size_t n = 512;
  std::uint64_t seed = 0;
  std::vector<std::string> params;
  bool quiet = false;
  int threads = 0;

  auto* cmd_target = app.add_subcommand("target", "Write a synthetic target distribution as CSV");
  cmd_target->add_option("--space", space, "r3 or so3")->capture_default_str();
  cmd_target->add_option("--name", name, "Target name")->required();
  cmd_target->add_option("--n", n, "Sample count")->capture_default_str()->check(CLI::PositiveNumber);
  cmd_target->add_option("--seed", seed, "Random seed")->capture_default_str();
  cmd_target->add_option("--param", params, "Target parameter override, name=value (repeatable)");
  cmd_target->add_option("--out", out, "Output CSV (default <name>.csv)");

  auto* cmd_train = app.add_subcommand("train", "Train one paradigm and log W1 against held-out targets");
  cmd_train->add_option("config", config, "YAML run config")->required();
  cmd_train->add_option("--out", out, "Override output_dir");
  cmd_train->add_flag("--quiet", quiet, "Do not print per-evaluation progress");

  auto* cmd_eval = app.add_subcommand("eval", "Exact W1 between two sample CSV files");
  cmd_eval->add_option("--samples", samples, "Sample CSV")->required();
  cmd_eval->add_option("--target", target, "Target CSV")->required();
  cmd_eval->add_option("--space", space, "r3 or so3")->capture_default_str();
  cmd_eval->add_option("--cost", cost, "euclidean (r3) or geodesic (so3); default follows --space");
  cmd_eval->add_option("--record", record, "JSON record path (default <samples>.w1.json)");

  auto* cmd_sweep = app.add_subcommand("sweep", "Run a space x paradigm x seed grid");
  cmd_sweep->add_option("config", config, "YAML sweep config")->required();
  cmd_sweep->add_option("--out", out, "Override output_dir");
  cmd_sweep->add_option("--threads", threads, "Concurrent cells (default sweep.threads)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*cmd_target) return Target(space, name, n, seed, params, out);
    if (*cmd_train) return Train(config, out, quiet);
    if (*cmd_eval) return Eval(samples, target, space, cost, record);
    if (*cmd_sweep) return Sweep(config, out, threads);
  } catch (const std::exception& e) {
    std::cerr << "se3lab: " << e.what() << "\n";
    return runner::ExitCode(e);
  }
  return 1;
}
