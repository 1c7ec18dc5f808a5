#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace ckn {

enum class KernelVariant {
  exponential,         // kappa(u) = exp(rho (u - 1)), param = rho
  inverse_polynomial,  // kappa(u) = 1 / (2 - u)
  polynomial,          // kappa(u) = (c + u)^p / (c + 1)^p, c = p - 1, param = p
  arccos1,             // arc-cosine kernel of degree 1
  vovk3,               // kappa(u) = (1 + u + u^2) / 3
  linear,              // kappa(u) = u
};

// A dot-product function kappa on [-1, 1] with a Maclaurin expansion
// sum_j b_j u^j, b_j >= 0. `param` is rho for exponential and the degree for
// polynomial; it is ignored otherwise.
struct DotProductKernel {
  KernelVariant variant = KernelVariant::exponential;
  double param = 1.0;

  static DotProductKernel exponential(double rho = 1.0) { return {KernelVariant::exponential, rho}; }
  static DotProductKernel inverse_polynomial() { return {KernelVariant::inverse_polynomial, 0.0}; }
  static DotProductKernel polynomial(int degree) { return {KernelVariant::polynomial, double(degree)}; }
  static DotProductKernel arccos1() { return {KernelVariant::arccos1, 0.0}; }
  static DotProductKernel vovk3() { return {KernelVariant::vovk3, 0.0}; }
  static DotProductKernel linear() { return {KernelVariant::linear, 0.0}; }

  bool has_param() const { return variant == KernelVariant::exponential || variant == KernelVariant::polynomial; }
  bool operator==(const DotProductKernel& o) const {
    return variant == o.variant && (!has_param() || param == o.param);
  }
};

std::string variant_name(KernelVariant v);
KernelVariant parse_variant(const std::string& name);
// "exponential:2.36", "polynomial:3", "vovk3", ...
DotProductKernel parse_kernel(const std::string& spec);
std::string describe(const DotProductKernel& k);

// Validates parameters (rho > 0, integer degree >= 1); throws otherwise.
void check_kernel(const DotProductKernel& k);

// kappa(u); u is clamped to [-1, 1].
double kappa_eval(const DotProductKernel& k, double u);
double kappa_derivative(const DotProductKernel& k, double u);

// Maclaurin coefficient b_j.
double maclaurin_coefficient(const DotProductKernel& k, std::size_t j);
std::vector<double> maclaurin_coefficients(const DotProductKernel& k, std::size_t count);

// sum_{j > J} b_j = kappa(1) - sum_{j <= J} b_j, computed without cancellation
// where a closed form exists.
double coefficient_tail(const DotProductKernel& k, std::size_t J);

// Lipschitz constant of the kernel map: max(1, sqrt(kappa'(1))).
double lipschitz_factor(const DotProductKernel& k);

// Norms below this are treated as exactly zero.
inline constexpr double kZeroNorm = 1e-300;

// Lift of a Gram entry: nx * ny * kappa(g / (nx * ny)), 0 when a norm is 0.
double lift_entry(const DotProductKernel& k, double nx, double ny, double g);

// K(z, z2) = |z| |z2| kappa(<z, z2> / (|z| |z2|)).
double homogeneous_eval(const DotProductKernel& k, std::span<const double> z,
                        std::span<const double> z2);

// Explicit truncated feature map (sqrt(b_j) |z|^{1-j} z^{(x)j})_{j=0..J}, with
// the order-j tensor power stored in its symmetric (monomial) coordinates
// scaled by sqrt(multinomial), which preserves <z^{(x)j}, z2^{(x)j}>.
// Blocks with b_j = 0 are omitted. Throws "capacity" when the result would
// exceed max_entries.
std::vector<double> truncated_feature_map(const DotProductKernel& k,
                                          std::span<const double> z, std::size_t J,
                                          std::size_t max_entries = std::size_t(1) << 23);

// Number of entries truncated_feature_map produces for input dimension `dim`.
std::size_t truncated_feature_size(const DotProductKernel& k, std::size_t dim,
                                   std::size_t J);

struct KernelReport {
  DotProductKernel kernel;
  double kappa_at_one = 0.0;
  double derivative_at_one = 0.0;
  double min_coefficient = 0.0;  // over j <= 64
  double lipschitz = 0.0;
  bool satisfies_a1 = false;     // b_j >= 0, kappa(1) = 1, kappa'(1) = 1
};

KernelReport validate(const DotProductKernel& k);

// The kernels of the standard zoo (exponential with rho = 1, inverse
// polynomial, polynomial of degree 2 and 3, arc-cosine, Vovk, linear).
std::vector<DotProductKernel> kernel_zoo();

}  // namespace ckn
