#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace se3lab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation { kGelu, kTanh };

/// Sinusoidal features of t on a geometric frequency ladder from 1 to 1000
/// rad per unit time: [sin(f_k t), cos(f_k t)].
class TimeEmbedding {
 public:
  explicit TimeEmbedding(int dim = 32);

  int dim() const { return dim_; }
  const Vector& frequencies() const { return freq_; }
  Vector Embed(double t) const;

 private:
  int dim_;
  Vector freq_;
};

struct MlpConfig {
  int state_dim = 3;
  int out_dim = 3;
  std::vector<int> hidden = {256, 256, 256};
  int time_dim = 32;
  Activation activation = Activation::kGelu;
};

struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;
};

/// Activations saved by Forward for Backward. Tagged with the parameter
/// version it was computed against.
struct ForwardCache {
  std::uint64_t version = 0;
  std::vector<Matrix> inputs;  // input to each layer (columns = batch)
  std::vector<Matrix> pre;     // pre-activation of each hidden layer
};

struct Gradients {
  std::vector<Matrix> weight;
  std::vector<Vector> bias;

  std::size_t size() const;
  double Flat(std::size_t i) const;
  void Scale(double a);
  bool AllZero() const;
};

/**
 * Fully connected network: [state ; embed(t)] -> hidden layers -> linear
 * output. Batches are column-major: one sample per column.
 *
 * Hidden layers use uniform fan-in initialization; the output layer starts
 * at zero so an untrained network predicts 0.
 */
class Mlp {
 public:
  Mlp(const MlpConfig& config, std::uint64_t seed);

  const MlpConfig& config() const { return config_; }
  const TimeEmbedding& embedding() const { return embedding_; }
  int input_dim() const { return config_.state_dim + config_.time_dim; }

  /// states: state_dim x B; times: B entries in [0, 1].
  /// Throws kDimensionMismatch.
  Matrix Forward(const Matrix& states, std::span<const double> times,
                 ForwardCache* cache = nullptr) const;

  /// Gradients of sum_{ij} dout_ij * out_ij. Throws kStaleCache if the
  /// parameters changed since the cache was filled.
  Gradients Backward(const ForwardCache& cache, const Matrix& dout) const;

  std::vector<DenseLayer>& mutable_layers();
  const std::vector<DenseLayer>& layers() const { return layers_; }

  std::size_t ParameterCount() const;
  double Parameter(std::size_t i) const;
  void SetParameter(std::size_t i, double value);
  std::string ParameterName(std::size_t i) const;

  bool AllFinite() const;
  std::uint64_t version() const { return version_; }

 private:
  MlpConfig config_;
  TimeEmbedding embedding_;
  std::vector<DenseLayer> layers_;
  std::uint64_t version_ = 1;
};

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class AdamState {
 public:
  AdamState(const Mlp& net, AdamOptions options = {});

  const AdamOptions& options() const { return options_; }
  std::uint64_t step() const { return step_; }
  void set_learning_rate(double lr) { options_.learning_rate = lr; }

 private:
  friend void AdamStep(Mlp& net, const Gradients& grads, AdamState& state);

  AdamOptions options_;
  Gradients m_;
  Gradients v_;
  std::uint64_t step_ = 0;
};

/// Bias-corrected adaptive-moment update.
void AdamStep(Mlp& net, const Gradients& grads, AdamState& state);

/// avg <- decay * avg + (1 - decay) * net, parameter by parameter.
void EmaUpdate(Mlp& avg, const Mlp& net, double decay);

/**
 * Text checkpoint:
 *
 *   se3lab-checkpoint 1
 *   config state_dim out_dim time_dim activation hidden...
 *   tensor <name> <rows> <cols>
 *   <values, one row per line, shortest round-trip decimals>
 *   ...
 */
void SaveCheckpoint(const Mlp& net, const std::string& path);
Mlp LoadCheckpoint(const std::string& path);

}  // namespace se3lab
