#include "ckn/recovery.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <mutex>

#include <fftw3.h>

#include "ckn/error.hpp"

namespace ckn {

namespace {

// FFTW planning is not thread-safe.
std::mutex fftw_mutex;

struct FftwBuffers {
  explicit FftwBuffers(std::size_t n)
      : real(fftw_alloc_real(n)), spectrum(fftw_alloc_complex(n / 2 + 1)) {
    std::lock_guard<std::mutex> lock(fftw_mutex);
    forward = fftw_plan_dft_r2c_1d(static_cast<int>(n), real, spectrum, FFTW_ESTIMATE);
    backward = fftw_plan_dft_c2r_1d(static_cast<int>(n), spectrum, real, FFTW_ESTIMATE);
  }
  ~FftwBuffers() {
    std::lock_guard<std::mutex> lock(fftw_mutex);
    fftw_destroy_plan(forward);
    fftw_destroy_plan(backward);
    fftw_free(real);
    fftw_free(spectrum);
  }
  FftwBuffers(const FftwBuffers&) = delete;
  FftwBuffers& operator=(const FftwBuffers&) = delete;

  double* real;
  fftw_complex* spectrum;
  fftw_plan forward;
  fftw_plan backward;
};

std::size_t wrap(long i, std::size_t n) {
  const long len = static_cast<long>(n);
  return static_cast<std::size_t>(((i % len) + len) % len);
}

}  // namespace

std::vector<double> circular_convolve(const std::vector<double>& s, const std::vector<double>& h) {
  const std::size_t n = s.size();
  const long r = static_cast<long>(h.size() / 2);
  std::vector<double> out(n, 0.0);
  for (std::size_t m = 0; m < n; ++m) {
    double acc = 0.0;
    for (long k = -r; k <= r; ++k) acc += h[k + r] * s[wrap(static_cast<long>(m) - k, n)];
    out[m] = acc;
  }
  return out;
}

Measurements measure(const Signal& s, const std::vector<double>& h, std::size_t subsample,
                     std::size_t patch) {
  if (subsample == 0 || patch == 0) {
    throw Error("invalid_argument", "subsample and patch must be positive");
  }
  if (patch < subsample) {
    throw Error("undersampled", "undersampled: recovery not guaranteed (patch " +
                                    std::to_string(patch) + " < subsample " +
                                    std::to_string(subsample) + ")");
  }
  if (s.dims() != 1) throw Error("shape_mismatch", "recovery works on 1D signals");
  if (h.size() % 2 == 0) throw Error("invalid_argument", "filter must have odd length");
  Measurements y;
  y.length = s.shape[0];
  y.subsample = subsample;
  y.patch = patch;
  const std::size_t count = (y.length + subsample - 1) / subsample;
  y.streams.resize(s.channels);
  for (std::size_t c = 0; c < s.channels; ++c) {
    std::vector<double> ch(y.length);
    for (std::size_t m = 0; m < y.length; ++m) ch[m] = s.at(m, c);
    const auto conv = circular_convolve(ch, h);
    y.streams[c].assign(patch, std::vector<double>(count));
    for (std::size_t j = 0; j < patch; ++j) {
      for (std::size_t n = 0; n < count; ++n) {
        y.streams[c][j][n] = conv[(n * subsample + j) % y.length];
      }
    }
  }
  return y;
}

Recovery recover(const Measurements& y, const std::vector<double>& h) {
  if (y.patch < y.subsample) {
    throw Error("undersampled", "undersampled: recovery not guaranteed");
  }
  const std::size_t n = y.length;
  if (n == 0) throw Error("invalid_argument", "empty measurements");
  if (h.size() % 2 == 0) throw Error("invalid_argument", "filter must have odd length");

  FftwBuffers fft(n);
  const std::size_t bins = n / 2 + 1;

  // DFT of the filter laid out circularly on n samples.
  std::fill(fft.real, fft.real + n, 0.0);
  const long r = static_cast<long>(h.size() / 2);
  for (long k = -r; k <= r; ++k) fft.real[wrap(k, n)] += h[k + r];
  fftw_execute(fft.forward);
  std::vector<std::complex<double>> hf(bins);
  double min_mag = std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < bins; ++b) {
    hf[b] = {fft.spectrum[b][0], fft.spectrum[b][1]};
    min_mag = std::min(min_mag, std::abs(hf[b]));
  }
  if (min_mag < 1e-12) {
    throw Error("ill_posed", "deconvolution ill-posed: min |DFT(h)| = " + std::to_string(min_mag));
  }

  Recovery out;
  out.min_dft_magnitude = min_mag;
  out.signal.shape = {n};
  out.signal.channels = y.streams.size();
  out.signal.boundary = Boundary::circular;
  out.signal.values.assign(n * y.streams.size(), 0.0);

  for (std::size_t c = 0; c < y.streams.size(); ++c) {
    if (y.streams[c].size() != y.patch) {
      throw Error("data_corruption", "channel " + std::to_string(c) + " has the wrong stream count");
    }
    std::vector<double> full(n, 0.0);
    std::vector<bool> filled(n, false);
    for (std::size_t j = 0; j < y.patch; ++j) {
      for (std::size_t k = 0; k < y.streams[c][j].size(); ++k) {
        const std::size_t m = (k * y.subsample + j) % n;
        const double v = y.streams[c][j][k];
        if (filled[m]) {
          if (std::abs(full[m] - v) > 1e-9) {
            throw Error("data_corruption", "overlapping measurements disagree at sample " +
                                               std::to_string(m) + " of channel " +
                                               std::to_string(c));
          }
        } else {
          full[m] = v;
          filled[m] = true;
        }
      }
    }
    for (std::size_t m = 0; m < n; ++m) {
      if (!filled[m]) {
        throw Error("data_corruption", "sample " + std::to_string(m) + " is not covered");
      }
    }

    std::copy(full.begin(), full.end(), fft.real);
    fftw_execute(fft.forward);
    for (std::size_t b = 0; b < bins; ++b) {
      const std::complex<double> v =
          std::complex<double>(fft.spectrum[b][0], fft.spectrum[b][1]) / hf[b];
      fft.spectrum[b][0] = v.real();
      fft.spectrum[b][1] = v.imag();
    }
    fftw_execute(fft.backward);
    for (std::size_t m = 0; m < n; ++m) out.signal.at(m, c) = fft.real[m] / double(n);
  }
  return out;
}

}  // namespace ckn
