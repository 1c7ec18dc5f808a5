#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ckn {

enum class Boundary { zero, circular };

// A d-dimensional (d = 1 or 2) multi-channel grid. Values are stored
// row-major over positions with channels innermost:
//   values[position * channels + c].
struct Signal {
  std::vector<std::size_t> shape;
  std::size_t channels = 1;
  std::vector<double> values;
  Boundary boundary = Boundary::zero;

  std::size_t dims() const { return shape.size(); }
  std::size_t positions() const;

  double& at(std::size_t position, std::size_t c) {
    return values[position * channels + c];
  }
  double at(std::size_t position, std::size_t c) const {
    return values[position * channels + c];
  }
  std::span<const double> vector_at(std::size_t position) const {
    return {values.data() + position * channels, channels};
  }

  double squared_norm() const;
};

// Validates shape/channel/value invariants and returns the assembled signal.
Signal make_signal(std::vector<std::size_t> shape, std::size_t channels,
                   std::vector<double> values,
                   Boundary boundary = Boundary::zero);

Signal zeros_like(const Signal& x, std::size_t channels);

// Per-site displacement field tau(u) with d components per grid point.
struct DeformationField {
  std::vector<std::size_t> shape;
  std::vector<double> vectors;  // vectors[position * d + a]
  double smoothing_scale = 1.0;
  double sup_norm = 0.0;       // max_u |tau(u)|
  double jacobian_norm = 0.0;  // max_u ||grad tau(u)||_2 (forward differences)
  double unscaled_jacobian_norm = 0.0;  // measured before rescaling to the target

  std::size_t dims() const { return shape.size(); }
};

enum class SignalFormat { pgm, csv1d, idx };

SignalFormat format_from_path(const std::string& path);

Signal load_signal(const std::string& path, SignalFormat format);

// Every image stored in an IDX file (magic 0x803: n x rows x cols, or 0x801:
// a single 1D vector).
std::vector<Signal> load_idx(const std::string& path);

Signal parse_pgm(const std::string& bytes);
Signal parse_csv1d(const std::string& text);
std::vector<Signal> parse_idx(const std::string& bytes);

void save_pgm(const Signal& x, const std::string& path);

// Partial derivatives with grid spacing 1. Output has d * p channels, the
// derivative along axis a of input channel c stored in channel a * p + c.
Signal gradient(const Signal& x);

// Tangent approximation x(u) - alpha * tau(u) . grad x(u).
Signal apply_deformation(const Signal& x, const DeformationField& tau,
                         double alpha);

// L_c x(u) = x(u - c). Vacated cells are zero-filled or wrapped depending on
// the signal's boundary.
Signal apply_translation(const Signal& x, std::span<const long> offset);

// Sup over sites of the operator 2-norm of the forward-difference Jacobian.
double jacobian_sup_norm(const DeformationField& tau);

// White noise per component, circularly smoothed with a Gaussian of the given
// scale, then rescaled so jacobian_sup_norm equals target_grad_norm.
DeformationField random_smooth_field(const std::vector<std::size_t>& shape,
                                     double smoothing_scale,
                                     double target_grad_norm,
                                     std::uint64_t seed);

}  // namespace ckn
