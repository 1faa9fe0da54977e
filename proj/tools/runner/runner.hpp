#pragma once

#include <cstdint>
#include <exception>
#include <string>
#include <utility>
#include <vector>

#include "runner/config.hpp"
#include "se3lab/otmetrics.hpp"

namespace se3lab::runner {

std::string Version();

/**
 * Plain-text run manifest:
 *
 *   se3lab-manifest 1
 *   version <version>
 *   command <name>
 *   seconds <wall clock>
 *   config <key> <value>      (one line per key)
 *   file <path>               (relative to the manifest's directory)
 */
struct Manifest {
  std::string command;
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<std::string> files;
  double seconds = 0.0;

  void Write(const std::string& path) const;
  static Manifest Read(const std::string& path);
};

struct RunResult {
  double initial_w1 = 0.0;
  double final_w1 = 0.0;
  std::string directory;
  std::vector<std::string> files;  // relative to directory, manifest last
};

/// target.csv, heldout.csv, log.csv, samples.csv, checkpoint.txt and
/// manifest.txt in config.output_dir.
RunResult RunTrain(const RunConfig& config, const TrainCallback& callback = {});

/// Writes the target CSV and <path>.manifest.txt.
void RunTarget(const TargetSpec& spec, const std::string& path);

struct EvalResult {
  double w1 = 0.0;
  std::size_t n = 0;
};

/// Exact W1 between two CSV sample files; writes a JSON record.
/// The cost must match the space (euclidean for r3, geodesic for so3).
EvalResult RunEval(const std::string& samples, const std::string& target, Space space, GroundCost cost,
                   const std::string& record_path);

GroundCost ParseCost(const std::string& name);

struct CellResult {
  Space space = Space::kR3;
  Paradigm paradigm = Paradigm::kFlow;
  std::uint64_t seed = 0;  // master seed of the grid row
  std::string directory;  // relative to the sweep output_dir
  bool ok = false;
  std::string status;  // "ok" or the failure message
  double initial_w1 = 0.0;
  double final_w1 = 0.0;
};

/**
 * Runs every (space, paradigm, seed) cell, `threads` at a time, each into
 * its own directory under config.output_dir, then writes summary.csv
 * (space,paradigm,seed,initial_w1,final_w1,ratio,status), comparison.csv
 * (flow vs DDPM final W1 per space and seed) and manifest.txt. A failed
 * cell does not stop the others.
 */
std::vector<CellResult> RunSweep(const SweepConfig& config, int threads = 0);

std::string CellDirectory(Space space, Paradigm paradigm, std::uint64_t seed);

/// 1 for usage/config problems, 2 for runtime and numeric failures.
int ExitCode(const std::exception& e);

}  // namespace se3lab::runner
