#pragma once

#include <cstddef>
#include <vector>

#include "ckn/signal.hpp"

namespace ckn {

// Subsampled filter responses of a 1D multi-channel signal:
// streams[c][j][n] = (h * s_c)[n * subsample + j] (circular), j < patch.
struct Measurements {
  std::size_t length = 0;
  std::size_t subsample = 1;
  std::size_t patch = 1;
  std::vector<std::vector<std::vector<double>>> streams;
};

// `h` holds centered taps h[k + r], k = -r..r (as produced by gaussian_taps).
// Throws "undersampled" when patch < subsample.
Measurements measure(const Signal& s, const std::vector<double>& h, std::size_t subsample,
                     std::size_t patch);

struct Recovery {
  Signal signal;
  double min_dft_magnitude = 0.0;  // min over frequencies of |DFT(h)|
};

// De-interleaves the streams into the filtered signal (overlapping samples must
// agree within 1e-9) and divides by DFT(h). Throws "ill_posed" when
// |DFT(h)| < 1e-12 at some frequency and "data_corruption" on inconsistent
// overlaps.
Recovery recover(const Measurements& y, const std::vector<double>& h);

// Circular convolution (h * s)[m] = sum_k h[k] s[m - k], the dense oracle.
std::vector<double> circular_convolve(const std::vector<double>& s, const std::vector<double>& h);

}  // namespace ckn
