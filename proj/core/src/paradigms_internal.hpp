#pragma once

#include <cstdint>
#include <vector>

#include "se3lab/nnet.hpp"
#include "se3lab/rng.hpp"

namespace se3lab::detail {

/// One independent stream per reverse chain.
std::vector<Rng> ChainStreams(std::size_t n, std::uint64_t seed);

/// weight * mean_b ||out_b - target_b||^2.
double MseLoss(const Matrix& out, const Matrix& target, double weight, Matrix* dout);

inline MlpConfig WithDims(MlpConfig cfg, int state_dim, int out_dim) {
  cfg.state_dim = state_dim;
  cfg.out_dim = out_dim;
  return cfg;
}

}  // namespace se3lab::detail
