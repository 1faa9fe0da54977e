#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "se3lab/paradigms.hpp"

namespace se3lab {

enum class LrDecay { kNone, kCosine };

struct TrainOptions {
  int epochs = 100;
  int batch_size = 128;
  int eval_every = 10;
  std::size_t eval_n = 512;
  std::uint64_t seed = 0;
  /// kCosine anneals the optimizer's rate per epoch from its initial value
  /// down to final_lr_fraction of it.
  LrDecay lr_decay = LrDecay::kCosine;
  double final_lr_fraction = 0.05;
};

/// Learning-rate multiplier for a 1-based epoch.
double LrFactor(const TrainOptions& options, int epoch);

struct TrainRecord {
  int epoch = 0;
  double loss = 0.0;  // mean minibatch loss since the previous record
  double w1 = 0.0;
};

struct TrainLog {
  double initial_w1 = 0.0;  // untrained network, epoch 0
  std::vector<TrainRecord> records;

  double final_w1() const { return records.empty() ? initial_w1 : records.back().w1; }

  /// Writes epoch,loss,w1; one row per record.
  void WriteCsv(const std::string& path) const;
  static TrainLog ReadCsv(const std::string& path);
};

/// Mean of the first and last `window` logged W1 values. Returns false when
/// the log has fewer than `window` records.
bool MovingAverageEnds(const TrainLog& log, int window, double* first, double* last);

/// Called after each record is appended.
using TrainCallback = std::function<void(const TrainRecord&)>;

/**
 * Trains an engine on `train` and evaluates W1 between eval_n generated
 * samples and `heldout` every eval_every epochs. An epoch is one shuffled
 * pass over `train` in minibatches of batch_size. Every evaluation uses the
 * same sampling seed, so successive W1 values differ only through the
 * network.
 *
 * Throws kConfig for invalid options and kCostOverflow when a parameter
 * becomes non-finite. final_samples, if given, receives the last evaluation
 * draw.
 */
template <class Point>
TrainLog Train(Engine<Point>& engine, std::span<const Point> train, std::span<const Point> heldout,
               const TrainOptions& options, std::vector<Point>* final_samples = nullptr,
               const TrainCallback& callback = {});

}  // namespace se3lab
