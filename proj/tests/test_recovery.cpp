#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "ckn/error.hpp"
#include "ckn/pooling.hpp"
#include "ckn/recovery.hpp"

using namespace ckn;

namespace {

Signal random_1d(std::mt19937_64& rng, std::size_t n, std::size_t ch) {
  std::normal_distribution<double> normal;
  std::vector<double> v(n * ch);
  for (auto& x : v) x = normal(rng);
  return make_signal({n}, ch, v, Boundary::circular);
}

std::vector<double> channel(const Signal& s, std::size_t c) {
  std::vector<double> out(s.positions());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = s.at(i, c);
  return out;
}

double max_abs_diff(const Signal& a, const Signal& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) m = std::max(m, std::abs(a.values[i] - b.values[i]));
  return m;
}

}  // namespace

TEST_CASE("delta filter measurements are the signal") {
  std::mt19937_64 rng(1);
  const auto s = random_1d(rng, 10, 2);
  const auto y = measure(s, {1.0}, 1, 1);
  for (std::size_t c = 0; c < 2; ++c) CHECK(y.streams[c][0] == channel(s, c));
  const auto r = recover(y, {1.0});
  CHECK(max_abs_diff(r.signal, s) <= 1e-14);  // FFT round trip
  CHECK(r.min_dft_magnitude == doctest::Approx(1.0));
}

TEST_CASE("two offset streams interleave") {
  std::mt19937_64 rng(2);
  const auto s = random_1d(rng, 12, 1);
  const auto h = gaussian_taps(0.8);
  const auto y = measure(s, h, 2, 2);
  const auto full = circular_convolve(channel(s, 0), h);
  REQUIRE(y.streams[0].size() == 2);
  for (std::size_t n = 0; n < 6; ++n) {
    CHECK(y.streams[0][0][n] == doctest::Approx(full[2 * n]).epsilon(1e-14));
    CHECK(y.streams[0][1][n] == doctest::Approx(full[2 * n + 1]).epsilon(1e-14));
  }
}

TEST_CASE("circular convolution matches a dense matrix product") {
  std::mt19937_64 rng(3);
  const auto s = channel(random_1d(rng, 9, 1), 0);
  const auto h = gaussian_taps(1.0);  // radius 4
  const auto got = circular_convolve(s, h);
  for (long m = 0; m < 9; ++m) {
    double acc = 0.0;
    for (long j = 0; j < 9; ++j) {
      // every k = m - j + 9 t inside the support contributes
      for (long k = -4; k <= 4; ++k)
        if ((((m - k) % 9) + 9) % 9 == j) acc += h[k + 4] * s[j];
    }
    CHECK(got[m] == doctest::Approx(acc).epsilon(1e-14));
  }
}

TEST_CASE("round trip") {
  std::mt19937_64 rng(4);
  const auto s = random_1d(rng, 32, 3);
  const auto h = gaussian_taps(1.0);
  const auto r = recover(measure(s, h, 2, 3), h);
  double inf = 0.0;
  for (double v : s.values) inf = std::max(inf, std::abs(v));
  CHECK(max_abs_diff(r.signal, s) <= 1e-8 * inf);
  CHECK(r.min_dft_magnitude > 1e-12);
}

TEST_CASE("failure modes") {
  std::mt19937_64 rng(5);
  const auto s = random_1d(rng, 16, 1);
  try {
    measure(s, gaussian_taps(1.0), 3, 2);
    FAIL("expected undersampled");
  } catch (const Error& e) {
    CHECK(e.code() == "undersampled");
  }
  // A 3-tap box has DFT zeros at k = n / 3.
  const auto box_signal = random_1d(rng, 18, 1);
  const std::vector<double> box{1.0 / 3, 1.0 / 3, 1.0 / 3};
  const auto y = measure(box_signal, box, 1, 1);
  try {
    recover(y, box);
    FAIL("expected ill_posed");
  } catch (const Error& e) {
    CHECK(e.code() == "ill_posed");
  }
  auto bad = measure(s, gaussian_taps(0.5), 2, 3);
  bad.streams[0][2][1] += 1.0;
  try {
    recover(bad, gaussian_taps(0.5));
    FAIL("expected data_corruption");
  } catch (const Error& e) {
    CHECK(e.code() == "data_corruption");
  }
}
