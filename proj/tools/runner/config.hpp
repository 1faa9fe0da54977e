#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "se3lab/paradigms.hpp"
#include "se3lab/targets.hpp"
#include "se3lab/training.hpp"

namespace se3lab::runner {

/**
 * One training run. Loaded from a flat YAML mapping; every key is optional
 * except space, paradigm and target:
 *
 *   space: r3 | so3             paradigm: ddpm | score | flow
 *   target: <registered name>   target.<param>: <real>
 *   n_target, epochs, batch_size, eval_every, eval_n, seed
 *   target_seed                 defaults to seed
 *   hidden: [256, 256, 256]     time_dim, activation: gelu | tanh
 *   learning_rate, lr_decay: cosine | none, final_lr_fraction, ema_decay
 *   ddpm_steps, beta_min, beta_max, sample_steps
 *   output_dir, write_checkpoint: true | false
 */
struct RunConfig {
  Space space = Space::kR3;
  Paradigm paradigm = Paradigm::kFlow;
  std::string target;
  std::map<std::string, double> target_params;
  std::size_t n_target = 512;
  std::optional<std::uint64_t> target_seed;
  TrainOptions train;
  EngineOptions engine;
  std::string output_dir = "out";
  bool write_checkpoint = true;

  TargetSpec Spec() const;
  /// key/value lines for manifests, in a fixed order.
  std::vector<std::pair<std::string, std::string>> Echo() const;
};

/// Flat key -> node map; nodes keep their source marks for diagnostics.
using KeyMap = std::map<std::string, YAML::Node>;

/// Parses a YAML file into a flat mapping. Throws kIO / kParse.
KeyMap LoadKeys(const std::string& path);

/// Builds a RunConfig; unknown keys and bad values throw kConfig with the
/// source name, line and key.
RunConfig ParseRunConfig(const KeyMap& keys, const std::string& source);
RunConfig LoadRunConfig(const std::string& path);

/**
 * Grid of runs. Accepts every RunConfig key plus
 *
 *   sweep.spaces: [r3, so3]   sweep.paradigms: [ddpm, score, flow]
 *   sweep.seeds: [0]          sweep.threads: <int>
 *   <space>.<key>, <paradigm>.<key>   per-cell overrides
 *
 * Overrides apply base, then space, then paradigm. Unless target_seed is
 * given, every cell of a master seed trains on the same target draw.
 */
struct SweepConfig {
  KeyMap base;
  std::string source;
  std::vector<Space> spaces;
  std::vector<Paradigm> paradigms;
  std::vector<std::uint64_t> seeds;
  int threads = 1;
  std::string output_dir = "out";

  /// Config of one cell. Its seed is derived from the master seed and the
  /// (space, paradigm) pair, so it does not depend on grid order.
  RunConfig Cell(Space space, Paradigm paradigm, std::uint64_t seed) const;
};

SweepConfig ParseSweepConfig(const KeyMap& keys, const std::string& source);
SweepConfig LoadSweepConfig(const std::string& path);

std::uint64_t CellSeed(std::uint64_t master, Space space, Paradigm paradigm);

}  // namespace se3lab::runner
