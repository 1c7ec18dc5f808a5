#include "ckn/pooling.hpp"

#include <cmath>

#include "ckn/error.hpp"

namespace ckn {

std::vector<double> gaussian_taps(double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw Error("invalid_argument", "pooling sigma must be finite and >= 0");
  }
  if (sigma == 0.0) return {1.0};
  const auto radius = static_cast<long>(std::ceil(4.0 * sigma));
  std::vector<double> taps(2 * radius + 1);
  double total = 0.0;
  for (long k = -radius; k <= radius; ++k) {
    const double v = std::exp(-0.5 * (k * k) / (sigma * sigma));
    taps[k + radius] = v;
    total += v;
  }
  for (auto& t : taps) t /= total;
  return taps;
}

PoolingOperator pooling_axis(std::size_t length, double sigma,
                             std::size_t subsample, Boundary boundary,
                             bool subsample_norm) {
  if (subsample == 0) throw Error("invalid_argument", "subsample must be >= 1");
  if (length == 0) throw Error("shape_underflow", "empty axis");
  const auto taps = gaussian_taps(sigma);
  const long radius = static_cast<long>(taps.size() / 2);
  const double scale = subsample_norm ? 1.0 / std::sqrt(double(subsample)) : 1.0;
  const long n_in = static_cast<long>(length);

  PoolingOperator op;
  op.in_size = length;
  op.out_shape = {subsampled_length(length, subsample)};
  op.rows.resize(op.out_shape[0]);
  for (std::size_t n = 0; n < op.rows.size(); ++n) {
    const long center = static_cast<long>(n * subsample);
    // Accumulate by column so that wrapped taps landing on the same input
    // sample (filter wider than the axis) merge into one entry.
    std::vector<double> dense(length, 0.0);
    std::vector<bool> touched(length, false);
    for (long k = -radius; k <= radius; ++k) {
      long m = center - k;  // h[center - m] = h[k]
      if (boundary == Boundary::circular) {
        m = ((m % n_in) + n_in) % n_in;
      } else if (m < 0 || m >= n_in) {
        continue;
      }
      dense[m] += taps[k + radius] * scale;
      touched[m] = true;
    }
    auto& row = op.rows[n];
    for (std::size_t m = 0; m < length; ++m) {
      if (touched[m]) {
        row.cols.push_back(m);
        row.weights.push_back(dense[m]);
      }
    }
  }
  return op;
}

PoolingOperator pooling_operator(const std::vector<std::size_t>& shape,
                                 double sigma, std::size_t subsample,
                                 Boundary boundary, bool subsample_norm) {
  if (shape.empty() || shape.size() > 2) {
    throw Error("invalid_argument", "pooling supports 1D and 2D grids");
  }
  if (shape.size() == 1) {
    return pooling_axis(shape[0], sigma, subsample, boundary, subsample_norm);
  }
  const auto rows = pooling_axis(shape[0], sigma, subsample, boundary, subsample_norm);
  const auto cols = pooling_axis(shape[1], sigma, subsample, boundary, subsample_norm);
  PoolingOperator op;
  op.in_size = shape[0] * shape[1];
  op.out_shape = {rows.out_size(), cols.out_size()};
  op.rows.resize(rows.out_size() * cols.out_size());
  for (std::size_t i = 0; i < rows.out_size(); ++i) {
    for (std::size_t j = 0; j < cols.out_size(); ++j) {
      auto& out = op.rows[i * cols.out_size() + j];
      const auto& ri = rows.rows[i];
      const auto& cj = cols.rows[j];
      out.cols.reserve(ri.cols.size() * cj.cols.size());
      out.weights.reserve(ri.cols.size() * cj.cols.size());
      for (std::size_t a = 0; a < ri.cols.size(); ++a) {
        for (std::size_t b = 0; b < cj.cols.size(); ++b) {
          out.cols.push_back(ri.cols[a] * shape[1] + cj.cols[b]);
          out.weights.push_back(ri.weights[a] * cj.weights[b]);
        }
      }
    }
  }
  return op;
}

Signal apply_pooling(const PoolingOperator& op, const Signal& x) {
  if (op.in_size != x.positions()) {
    throw Error("shape_mismatch", "pooling operator does not match signal size");
  }
  Signal out;
  out.shape = op.out_shape;
  out.channels = x.channels;
  out.boundary = x.boundary;
  out.values.assign(op.out_size() * x.channels, 0.0);
  for (std::size_t n = 0; n < op.out_size(); ++n) {
    const auto& row = op.rows[n];
    for (std::size_t t = 0; t < row.cols.size(); ++t) {
      const double w = row.weights[t];
      const double* src = x.values.data() + row.cols[t] * x.channels;
      double* dst = out.values.data() + n * x.channels;
      for (std::size_t c = 0; c < x.channels; ++c) dst[c] += w * src[c];
    }
  }
  return out;
}

Signal pool_signal(const Signal& x, double sigma, std::size_t subsample,
                   bool subsample_norm) {
  return apply_pooling(
      pooling_operator(x.shape, sigma, subsample, x.boundary, subsample_norm), x);
}

}  // namespace ckn
