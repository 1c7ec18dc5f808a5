#pragma once

#include <cstddef>
#include <vector>

#include "ckn/signal.hpp"

namespace ckn {

// Discrete Gaussian filter h[k] ~ exp(-k^2 / (2 sigma^2)), |k| <= ceil(4 sigma),
// normalized to sum 1. sigma = 0 yields the delta {1}. Index k + radius.
std::vector<double> gaussian_taps(double sigma);

// One output row of a sparse linear map.
struct SparseRow {
  std::vector<std::size_t> cols;
  std::vector<double> weights;
};

// Row-sparse matrix mapping input positions to output positions.
struct PoolingOperator {
  std::size_t in_size = 0;
  std::vector<SparseRow> rows;
  std::vector<std::size_t> out_shape;

  std::size_t out_size() const { return rows.size(); }
};

inline std::size_t subsampled_length(std::size_t n, std::size_t s) {
  return (n + s - 1) / s;
}

// Filter-then-subsample along one axis: row n holds h[n*s - m] for every input
// m within the filter support (wrapped for circular, dropped for zero).
PoolingOperator pooling_axis(std::size_t length, double sigma,
                             std::size_t subsample, Boundary boundary,
                             bool subsample_norm);

// Separable operator on a row-major grid: Kronecker product of per-axis
// operators. The 1/sqrt(s) factor (when requested) is applied once per axis.
PoolingOperator pooling_operator(const std::vector<std::size_t>& shape,
                                 double sigma, std::size_t subsample,
                                 Boundary boundary, bool subsample_norm);

// Applies the operator channel by channel.
Signal apply_pooling(const PoolingOperator& op, const Signal& x);

Signal pool_signal(const Signal& x, double sigma, std::size_t subsample,
                   bool subsample_norm);

}  // namespace ckn
