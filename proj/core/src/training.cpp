#include "se3lab/training.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "se3lab/csv.hpp"
#include "se3lab/error.hpp"
#include "se3lab/otmetrics.hpp"

namespace se3lab {

namespace {

// Stream ids under the run seed.
constexpr std::uint64_t kTrainStream = 1;
constexpr std::uint64_t kEvalStream = 2;

void Validate(const TrainOptions& o, std::size_t n_train, std::size_t n_heldout) {
  if (o.epochs < 1) throw Error(ErrorKind::kConfig, "epochs must be >= 1");
  if (o.batch_size < 1) throw Error(ErrorKind::kConfig, "batch_size must be >= 1");
  if (o.eval_every < 1) throw Error(ErrorKind::kConfig, "eval_every must be >= 1");
  if (!(o.final_lr_fraction > 0.0 && o.final_lr_fraction <= 1.0)) {
    throw Error(ErrorKind::kConfig, "final_lr_fraction must lie in (0, 1]");
  }
  if (n_train == 0) throw Error(ErrorKind::kConfig, "empty training set");
  if (o.eval_n != n_heldout) {
    throw Error(ErrorKind::kSizeMismatch, "held-out set has " + std::to_string(n_heldout) +
                                              " samples but eval_n is " + std::to_string(o.eval_n));
  }
}

}  // namespace

void TrainLog::WriteCsv(const std::string& path) const {
  CsvWriter out(path, {"epoch", "loss", "w1"});
  for (const auto& r : records) out.Row({static_cast<double>(r.epoch), r.loss, r.w1});
  out.Close();
}

TrainLog TrainLog::ReadCsv(const std::string& path) {
  const CsvTable table = se3lab::ReadCsv(path);
  const auto ce = table.Column("epoch");
  const auto cl = table.Column("loss");
  const auto cw = table.Column("w1");
  TrainLog log;
  for (const auto& row : table.rows) {
    log.records.push_back({static_cast<int>(row[ce]), row[cl], row[cw]});
  }
  return log;
}

bool MovingAverageEnds(const TrainLog& log, int window, double* first, double* last) {
  const auto& r = log.records;
  if (window < 1 || static_cast<int>(r.size()) < window) return false;
  double a = 0.0, b = 0.0;
  for (int i = 0; i < window; ++i) {
    a += r[i].w1;
    b += r[r.size() - window + i].w1;
  }
  *first = a / window;
  *last = b / window;
  return true;
}

double LrFactor(const TrainOptions& o, int epoch) {
  if (o.lr_decay == LrDecay::kNone) return 1.0;
  if (o.epochs <= 1) return 1.0;
  const double progress = static_cast<double>(epoch - 1) / (o.epochs - 1);
  const double f = o.final_lr_fraction;
  return f + (1.0 - f) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

template <class Point>
TrainLog Train(Engine<Point>& engine, std::span<const Point> train, std::span<const Point> heldout,
               const TrainOptions& options, std::vector<Point>* final_samples,
               const TrainCallback& callback) {
  Validate(options, train.size(), heldout.size());
  const std::uint64_t eval_seed = DeriveSeed(options.seed, kEvalStream);
  Rng rng(DeriveSeed(options.seed, kTrainStream));

  TrainLog log;
  std::vector<Point> samples = engine.Generate(options.eval_n, eval_seed);
  log.initial_w1 = W1Exact(std::span<const Point>(samples), heldout);

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<Point> batch;
  double loss_sum = 0.0;
  long loss_count = 0;

  const double base_lr = engine.optimizer().options().learning_rate;
  for (int epoch = 1; epoch <= options.epochs; ++epoch) {
    engine.optimizer().set_learning_rate(base_lr * LrFactor(options, epoch));
    std::shuffle(order.begin(), order.end(), rng.engine());
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t stop = std::min(order.size(), start + options.batch_size);
      batch.clear();
      for (std::size_t k = start; k < stop; ++k) batch.push_back(train[order[k]]);
      loss_sum += engine.TrainStep(std::span<const Point>(batch), rng);
      ++loss_count;
    }
    if (!engine.net().AllFinite()) {
      throw Error(ErrorKind::kCostOverflow, "non-finite network parameter after epoch " + std::to_string(epoch));
    }
    if (epoch % options.eval_every != 0) continue;

    samples = engine.Generate(options.eval_n, eval_seed);
    TrainRecord rec{epoch, loss_sum / static_cast<double>(loss_count),
                    W1Exact(std::span<const Point>(samples), heldout)};
    log.records.push_back(rec);
    loss_sum = 0.0;
    loss_count = 0;
    if (callback) callback(rec);
  }
  if (final_samples) *final_samples = std::move(samples);
  return log;
}

template TrainLog Train<Vec3>(Engine<Vec3>&, std::span<const Vec3>, std::span<const Vec3>, const TrainOptions&,
                              std::vector<Vec3>*, const TrainCallback&);
template TrainLog Train<Rotation>(Engine<Rotation>&, std::span<const Rotation>, std::span<const Rotation>,
                                  const TrainOptions&, std::vector<Rotation>*, const TrainCallback&);

}  // namespace se3lab
