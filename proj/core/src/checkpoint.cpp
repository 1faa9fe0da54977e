#include <fstream>
#include <sstream>

#include "se3lab/csv.hpp"
#include "se3lab/error.hpp"
#include "se3lab/nnet.hpp"

namespace se3lab {

namespace {

constexpr const char* kMagic = "se3lab-checkpoint";
constexpr int kFormatVersion = 1;

std::string ActivationName(Activation a) { return a == Activation::kTanh ? "tanh" : "gelu"; }

void WriteTensor(std::ostream& out, const std::string& name, const Matrix& m) {
  out << "tensor " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out << ' ';
      out << FormatDouble(m(r, c));
    }
    out << '\n';
  }
}

Matrix ReadTensor(std::istream& in, const std::string& expected_name, Eigen::Index rows, Eigen::Index cols) {
  std::string tag, name;
  Eigen::Index r = 0, c = 0;
  if (!(in >> tag >> name >> r >> c) || tag != "tensor") {
    throw Error(ErrorKind::kParse, "checkpoint: expected tensor header for " + expected_name);
  }
  if (name != expected_name || r != rows || c != cols) {
    throw Error(ErrorKind::kParse, "checkpoint: tensor " + name + " has unexpected name or shape");
  }
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      std::string tok;
      if (!(in >> tok)) throw Error(ErrorKind::kParse, "checkpoint: truncated tensor " + name);
      m(i, j) = std::stod(tok);
    }
  }
  return m;
}

}  // namespace

void SaveCheckpoint(const Mlp& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIO, "cannot open " + path + " for writing");
  const auto& cfg = net.config();
  out << kMagic << ' ' << kFormatVersion << '\n';
  out << "config " << cfg.state_dim << ' ' << cfg.out_dim << ' ' << cfg.time_dim << ' '
      << ActivationName(cfg.activation) << ' ' << cfg.hidden.size();
  for (int h : cfg.hidden) out << ' ' << h;
  out << '\n';
  const auto& layers = net.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    WriteTensor(out, "layer" + std::to_string(l) + ".weight", layers[l].weight);
    WriteTensor(out, "layer" + std::to_string(l) + ".bias", layers[l].bias.transpose());
  }
  if (!out) throw Error(ErrorKind::kIO, "write failed on " + path);
}

Mlp LoadCheckpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIO, "cannot open " + path);
  std::string magic, tag, act;
  int version = 0;
  if (!(in >> magic >> version) || magic != kMagic || version != kFormatVersion) {
    throw Error(ErrorKind::kParse, path + ": not a version-1 checkpoint");
  }
  MlpConfig cfg;
  std::size_t nhidden = 0;
  if (!(in >> tag >> cfg.state_dim >> cfg.out_dim >> cfg.time_dim >> act >> nhidden) || tag != "config") {
    throw Error(ErrorKind::kParse, path + ": bad config line");
  }
  cfg.activation = act == "tanh" ? Activation::kTanh : Activation::kGelu;
  cfg.hidden.resize(nhidden);
  for (auto& h : cfg.hidden) in >> h;

  Mlp net(cfg, 0);
  auto& layers = net.mutable_layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto& layer = layers[l];
    layer.weight = ReadTensor(in, "layer" + std::to_string(l) + ".weight", layer.weight.rows(), layer.weight.cols());
    layer.bias = ReadTensor(in, "layer" + std::to_string(l) + ".bias", 1, layer.bias.size()).transpose();
  }
  return net;
}

}  // namespace se3lab
