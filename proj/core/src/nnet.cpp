#include "se3lab/nnet.hpp"

#include <cmath>
#include <numbers>

#include "se3lab/error.hpp"
#include "se3lab/rng.hpp"

namespace se3lab {

namespace {

constexpr double kGeluScale = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluCubic = 0.044715;

// tanh through exp, which Eigen vectorizes for doubles.
Eigen::ArrayXXd FastTanh(const Eigen::ArrayXXd& u) {
  return 1.0 - 2.0 / ((2.0 * u).exp() + 1.0);
}

Matrix Activate(Activation act, const Matrix& z) {
  const auto x = z.array();
  if (act == Activation::kTanh) return FastTanh(x).matrix();
  const Eigen::ArrayXXd th = FastTanh(kGeluScale * (x + kGeluCubic * x.cube()));
  return (0.5 * x * (1.0 + th)).matrix();
}

Matrix ActivateDerivative(Activation act, const Matrix& z) {
  const auto x = z.array();
  if (act == Activation::kTanh) {
    const Eigen::ArrayXXd th = FastTanh(x);
    return (1.0 - th.square()).matrix();
  }
  const Eigen::ArrayXXd th = FastTanh(kGeluScale * (x + kGeluCubic * x.cube()));
  const Eigen::ArrayXXd du = kGeluScale * (1.0 + 3.0 * kGeluCubic * x.square());
  return (0.5 * (1.0 + th) + 0.5 * x * (1.0 - th.square()) * du).matrix();
}

}  // namespace

TimeEmbedding::TimeEmbedding(int dim) : dim_(dim) {
  if (dim <= 0 || dim % 2 != 0) throw Error(ErrorKind::kDimensionMismatch, "time embedding dim must be even");
  const int half = dim / 2;
  freq_.resize(half);
  for (int k = 0; k < half; ++k) {
    const double frac = half == 1 ? 0.0 : static_cast<double>(k) / (half - 1);
    freq_[k] = std::exp(frac * std::log(1000.0));
  }
}

Vector TimeEmbedding::Embed(double t) const {
  const int half = dim_ / 2;
  Vector e(dim_);
  for (int k = 0; k < half; ++k) {
    e[k] = std::sin(freq_[k] * t);
    e[half + k] = std::cos(freq_[k] * t);
  }
  return e;
}

std::size_t Gradients::size() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weight.size(); ++l) n += weight[l].size() + bias[l].size();
  return n;
}

double Gradients::Flat(std::size_t i) const {
  for (std::size_t l = 0; l < weight.size(); ++l) {
    const auto nw = static_cast<std::size_t>(weight[l].size());
    if (i < nw) return weight[l].data()[i];
    i -= nw;
    const auto nb = static_cast<std::size_t>(bias[l].size());
    if (i < nb) return bias[l][i];
    i -= nb;
  }
  throw Error(ErrorKind::kDimensionMismatch, "gradient index out of range");
}

void Gradients::Scale(double a) {
  for (auto& w : weight) w *= a;
  for (auto& b : bias) b *= a;
}

bool Gradients::AllZero() const {
  for (auto& w : weight)
    if (!w.isZero(0.0)) return false;
  for (auto& b : bias)
    if (!b.isZero(0.0)) return false;
  return true;
}

Mlp::Mlp(const MlpConfig& config, std::uint64_t seed) : config_(config), embedding_(config.time_dim) {
  if (config.state_dim <= 0 || config.out_dim <= 0) {
    throw Error(ErrorKind::kDimensionMismatch, "state and output dims must be positive");
  }
  Rng rng(seed);
  int in = input_dim();
  for (int width : config.hidden) {
    if (width <= 0) throw Error(ErrorKind::kDimensionMismatch, "hidden width must be positive");
    DenseLayer layer;
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    layer.weight.resize(width, in);
    layer.bias.resize(width);
    for (Eigen::Index j = 0; j < layer.weight.cols(); ++j)
      for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) layer.weight(i, j) = rng.Uniform(-bound, bound);
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias[i] = rng.Uniform(-bound, bound);
    layers_.push_back(std::move(layer));
    in = width;
  }
  DenseLayer out;
  out.weight = Matrix::Zero(config.out_dim, in);
  out.bias = Vector::Zero(config.out_dim);
  layers_.push_back(std::move(out));
}

Matrix Mlp::Forward(const Matrix& states, std::span<const double> times, ForwardCache* cache) const {
  const auto batch = states.cols();
  if (states.rows() != config_.state_dim || static_cast<Eigen::Index>(times.size()) != batch) {
    throw Error(ErrorKind::kDimensionMismatch,
                "expected " + std::to_string(config_.state_dim) + " x B states with B times, got " +
                    std::to_string(states.rows()) + " x " + std::to_string(batch) + " and " +
                    std::to_string(times.size()) + " times");
  }
  Matrix x(input_dim(), batch);
  x.topRows(config_.state_dim) = states;
  for (Eigen::Index b = 0; b < batch; ++b) {
    x.col(b).bottomRows(config_.time_dim) = embedding_.Embed(times[b]);
  }

  if (cache) {
    cache->version = version_;
    cache->inputs.clear();
    cache->pre.clear();
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    Matrix z = layer.weight * x;
    z.colwise() += layer.bias;
    if (cache) cache->inputs.push_back(x);
    if (l + 1 == layers_.size()) return z;
    x = Activate(config_.activation, z);
    if (cache) cache->pre.push_back(std::move(z));
  }
  return x;
}

Gradients Mlp::Backward(const ForwardCache& cache, const Matrix& dout) const {
  if (cache.version != version_ || cache.inputs.size() != layers_.size()) {
    throw Error(ErrorKind::kStaleCache, "forward cache does not match current parameters");
  }
  if (dout.rows() != config_.out_dim || dout.cols() != cache.inputs.back().cols()) {
    throw Error(ErrorKind::kDimensionMismatch, "loss gradient shape does not match forward output");
  }
  Gradients g;
  g.weight.resize(layers_.size());
  g.bias.resize(layers_.size());
  Matrix delta = dout;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    g.weight[l].noalias() = delta * cache.inputs[l].transpose();
    g.bias[l] = delta.rowwise().sum();
    if (l == 0) break;
    Matrix back = layers_[l].weight.transpose() * delta;
    delta = back.cwiseProduct(ActivateDerivative(config_.activation, cache.pre[l - 1]));
  }
  return g;
}

std::vector<DenseLayer>& Mlp::mutable_layers() {
  ++version_;
  return layers_;
}

std::size_t Mlp::ParameterCount() const {
  std::size_t n = 0;
  for (auto& l : layers_) n += l.weight.size() + l.bias.size();
  return n;
}

double Mlp::Parameter(std::size_t i) const {
  for (auto& l : layers_) {
    const auto nw = static_cast<std::size_t>(l.weight.size());
    if (i < nw) return l.weight.data()[i];
    i -= nw;
    const auto nb = static_cast<std::size_t>(l.bias.size());
    if (i < nb) return l.bias[i];
    i -= nb;
  }
  throw Error(ErrorKind::kDimensionMismatch, "parameter index out of range");
}

void Mlp::SetParameter(std::size_t i, double value) {
  ++version_;
  for (auto& l : layers_) {
    const auto nw = static_cast<std::size_t>(l.weight.size());
    if (i < nw) {
      l.weight.data()[i] = value;
      return;
    }
    i -= nw;
    const auto nb = static_cast<std::size_t>(l.bias.size());
    if (i < nb) {
      l.bias[i] = value;
      return;
    }
    i -= nb;
  }
  throw Error(ErrorKind::kDimensionMismatch, "parameter index out of range");
}

std::string Mlp::ParameterName(std::size_t i) const {
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const auto& l = layers_[k];
    const auto nw = static_cast<std::size_t>(l.weight.size());
    if (i < nw) {
      const auto rows = static_cast<std::size_t>(l.weight.rows());
      return "layer" + std::to_string(k) + ".weight[" + std::to_string(i % rows) + "," +
             std::to_string(i / rows) + "]";
    }
    i -= nw;
    if (i < static_cast<std::size_t>(l.bias.size())) {
      return "layer" + std::to_string(k) + ".bias[" + std::to_string(i) + "]";
    }
    i -= l.bias.size();
  }
  return "out-of-range";
}

bool Mlp::AllFinite() const {
  for (auto& l : layers_)
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  return true;
}

AdamState::AdamState(const Mlp& net, AdamOptions options) : options_(options) {
  for (auto& l : net.layers()) {
    m_.weight.push_back(Matrix::Zero(l.weight.rows(), l.weight.cols()));
    m_.bias.push_back(Vector::Zero(l.bias.size()));
  }
  v_ = m_;
}

void AdamStep(Mlp& net, const Gradients& grads, AdamState& state) {
  auto& layers = net.mutable_layers();
  if (grads.weight.size() != layers.size()) {
    throw Error(ErrorKind::kDimensionMismatch, "gradient layout does not match network");
  }
  const auto& o = state.options_;
  ++state.step_;
  const double step = static_cast<double>(state.step_);
  const double c1 = 1.0 - std::pow(o.beta1, step);
  const double c2 = 1.0 - std::pow(o.beta2, step);
  auto update = [&](auto& param, const auto& g, auto& m, auto& v) {
    m = o.beta1 * m + (1.0 - o.beta1) * g;
    v = o.beta2 * v + (1.0 - o.beta2) * g.cwiseAbs2();
    param.array() -= o.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + o.epsilon);
  };
  for (std::size_t l = 0; l < layers.size(); ++l) {
    update(layers[l].weight, grads.weight[l], state.m_.weight[l], state.v_.weight[l]);
    update(layers[l].bias, grads.bias[l], state.m_.bias[l], state.v_.bias[l]);
  }
}

void EmaUpdate(Mlp& avg, const Mlp& net, double decay) {
  const auto& src = net.layers();
  auto& dst = avg.mutable_layers();
  if (src.size() != dst.size()) throw Error(ErrorKind::kDimensionMismatch, "EMA network layout differs");
  for (std::size_t l = 0; l < src.size(); ++l) {
    if (src[l].weight.rows() != dst[l].weight.rows() || src[l].weight.cols() != dst[l].weight.cols()) {
      throw Error(ErrorKind::kDimensionMismatch, "EMA network layout differs");
    }
    dst[l].weight = decay * dst[l].weight + (1.0 - decay) * src[l].weight;
    dst[l].bias = decay * dst[l].bias + (1.0 - decay) * src[l].bias;
  }
}

}  // namespace se3lab
