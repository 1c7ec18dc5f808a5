#include "ckn/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "ckn/error.hpp"

namespace ckn {

std::string variant_name(KernelVariant v) {
  switch (v) {
    case KernelVariant::exponential: return "exponential";
    case KernelVariant::inverse_polynomial: return "inverse_polynomial";
    case KernelVariant::polynomial: return "polynomial";
    case KernelVariant::arccos1: return "arccos1";
    case KernelVariant::vovk3: return "vovk3";
    case KernelVariant::linear: return "linear";
  }
  return "unknown";
}

KernelVariant parse_variant(const std::string& name) {
  for (auto v : {KernelVariant::exponential, KernelVariant::inverse_polynomial,
                 KernelVariant::polynomial, KernelVariant::arccos1, KernelVariant::vovk3,
                 KernelVariant::linear}) {
    if (variant_name(v) == name) return v;
  }
  throw Error("invalid_argument", "unknown kernel variant '" + name + "'");
}

DotProductKernel parse_kernel(const std::string& spec) {
  const auto colon = spec.find(':');
  DotProductKernel k;
  k.variant = parse_variant(spec.substr(0, colon));
  if (colon != std::string::npos) {
    try {
      k.param = std::stod(spec.substr(colon + 1));
    } catch (const std::exception&) {
      throw Error("invalid_argument", "bad kernel parameter in '" + spec + "'");
    }
  } else if (k.variant == KernelVariant::polynomial) {
    k.param = 2.0;
  }
  if (!k.has_param()) k.param = 0.0;
  check_kernel(k);
  return k;
}

std::string describe(const DotProductKernel& k) {
  std::ostringstream ss;
  ss.precision(std::numeric_limits<double>::max_digits10);
  ss << variant_name(k.variant);
  if (k.has_param()) {
    ss << ':' << k.param;
  }
  return ss.str();
}

void check_kernel(const DotProductKernel& k) {
  if (k.variant == KernelVariant::exponential && !(k.param > 0.0 && std::isfinite(k.param))) {
    throw Error("invalid_argument", "exponential kernel needs rho > 0");
  }
  if (k.variant == KernelVariant::polynomial &&
      !(k.param >= 1.0 && k.param == std::floor(k.param) && k.param <= 64.0)) {
    throw Error("invalid_argument", "polynomial kernel needs an integer degree in [1, 64]");
  }
}

namespace {

int degree_of(const DotProductKernel& k) { return static_cast<int>(k.param); }

double binomial(int n, int r) {
  double v = 1.0;
  for (int i = 1; i <= r; ++i) v = v * (n - r + i) / i;
  return v;
}

}  // namespace

double kappa_eval(const DotProductKernel& k, double u) {
  u = std::clamp(u, -1.0, 1.0);
  switch (k.variant) {
    case KernelVariant::exponential:
      return std::exp(k.param * (u - 1.0));
    case KernelVariant::inverse_polynomial:
      return 1.0 / (2.0 - u);
    case KernelVariant::polynomial: {
      const int p = degree_of(k);
      const double c = p - 1.0;
      return std::pow((c + u) / (c + 1.0), p);
    }
    case KernelVariant::arccos1: {
      const double theta = std::acos(u);
      return (std::sin(theta) + (std::numbers::pi - theta) * u) / std::numbers::pi;
    }
    case KernelVariant::vovk3:
      return (1.0 + u + u * u) / 3.0;
    case KernelVariant::linear:
      return u;
  }
  return 0.0;
}

double kappa_derivative(const DotProductKernel& k, double u) {
  u = std::clamp(u, -1.0, 1.0);
  switch (k.variant) {
    case KernelVariant::exponential:
      return k.param * std::exp(k.param * (u - 1.0));
    case KernelVariant::inverse_polynomial:
      return 1.0 / ((2.0 - u) * (2.0 - u));
    case KernelVariant::polynomial: {
      const int p = degree_of(k);
      const double c = p - 1.0;
      return p * std::pow(c + u, p - 1) / std::pow(c + 1.0, p);
    }
    case KernelVariant::arccos1:
      return (std::numbers::pi - std::acos(u)) / std::numbers::pi;
    case KernelVariant::vovk3:
      return (1.0 + 2.0 * u) / 3.0;
    case KernelVariant::linear:
      return 1.0;
  }
  return 0.0;
}

double maclaurin_coefficient(const DotProductKernel& k, std::size_t j) {
  switch (k.variant) {
    case KernelVariant::exponential: {
      // e^{-rho} rho^j / j!, evaluated in log space.
      const double rho = k.param;
      return std::exp(-rho + double(j) * std::log(rho) - std::lgamma(double(j) + 1.0));
    }
    case KernelVariant::inverse_polynomial:
      return std::ldexp(1.0, -static_cast<int>(j) - 1);
    case KernelVariant::polynomial: {
      const int p = degree_of(k);
      if (static_cast<int>(j) > p) return 0.0;
      const double c = p - 1.0;
      return binomial(p, static_cast<int>(j)) * std::pow(c, p - static_cast<int>(j)) /
             std::pow(c + 1.0, p);
    }
    case KernelVariant::arccos1: {
      // kappa(u) = (sqrt(1-u^2) + pi u / 2 + u asin(u)) / pi. Expanding both
      // series, the u^{2m} coefficient (m >= 1) is c_{m-1} / (pi 2m (2m-1))
      // with c_k = binom(2k, k) / 4^k; odd orders above one vanish.
      if (j == 0) return 1.0 / std::numbers::pi;
      if (j == 1) return 0.5;
      if (j % 2 == 1) return 0.0;
      const std::size_t m = j / 2;
      double c = 1.0;
      for (std::size_t i = 1; i < m; ++i) c *= (2.0 * i - 1.0) / (2.0 * i);
      return c / (std::numbers::pi * (2.0 * m) * (2.0 * m - 1.0));
    }
    case KernelVariant::vovk3:
      return j <= 2 ? 1.0 / 3.0 : 0.0;
    case KernelVariant::linear:
      return j == 1 ? 1.0 : 0.0;
  }
  return 0.0;
}

std::vector<double> maclaurin_coefficients(const DotProductKernel& k, std::size_t count) {
  std::vector<double> b(count);
  for (std::size_t j = 0; j < count; ++j) b[j] = maclaurin_coefficient(k, j);
  return b;
}

double coefficient_tail(const DotProductKernel& k, std::size_t J) {
  switch (k.variant) {
    case KernelVariant::exponential: {
      double tail = 0.0;
      for (std::size_t j = J + 1;; ++j) {
        const double b = maclaurin_coefficient(k, j);
        tail += b;
        if (double(j) > k.param && b <= 1e-18 * tail) break;
        if (j > J + 100000) break;
      }
      return tail;
    }
    case KernelVariant::inverse_polynomial:
      return std::ldexp(1.0, -static_cast<int>(J) - 1);
    case KernelVariant::polynomial:
    case KernelVariant::vovk3:
    case KernelVariant::linear: {
      double tail = 0.0;
      for (std::size_t j = J + 1; j <= 64; ++j) tail += maclaurin_coefficient(k, j);
      return tail;
    }
    case KernelVariant::arccos1: {
      double partial = 0.0;
      for (std::size_t j = 0; j <= J; ++j) partial += maclaurin_coefficient(k, j);
      return std::max(0.0, 1.0 - partial);
    }
  }
  return 0.0;
}

double lipschitz_factor(const DotProductKernel& k) {
  return std::max(1.0, std::sqrt(kappa_derivative(k, 1.0)));
}

double lift_entry(const DotProductKernel& k, double nx, double ny, double g) {
  if (nx < kZeroNorm || ny < kZeroNorm) return 0.0;
  const double n = nx * ny;
  return n * kappa_eval(k, g / n);
}

double homogeneous_eval(const DotProductKernel& k, std::span<const double> z,
                        std::span<const double> z2) {
  if (z.size() != z2.size()) throw Error("shape_mismatch", "kernel inputs differ in length");
  double zz = 0.0, ww = 0.0, zw = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    zz += z[i] * z[i];
    ww += z2[i] * z2[i];
    zw += z[i] * z2[i];
  }
  return lift_entry(k, std::sqrt(zz), std::sqrt(ww), zw);
}

// ---------------------------------------------------------------------------
// Explicit feature map

namespace {

double monomial_count(std::size_t dim, std::size_t degree) {
  // C(dim + degree - 1, degree)
  if (dim == 0) return degree == 0 ? 1.0 : 0.0;
  return binomial(static_cast<int>(dim + degree - 1), static_cast<int>(degree));
}

// Appends sqrt(multinomial(degree; alpha)) * prod u_i^alpha_i for every
// multi-index alpha with |alpha| = degree, in lexicographic order of the
// nondecreasing variable sequence.
void append_monomials(std::span<const double> u, std::size_t degree, double scale,
                      std::vector<double>& out) {
  std::vector<std::size_t> alpha(u.size(), 0);
  // Recursion over (first variable allowed, remaining degree) carrying the
  // running product and the running multinomial coefficient.
  auto rec = [&](auto&& self, std::size_t start, std::size_t remaining, std::size_t used,
                 double product, double multinom) -> void {
    if (remaining == 0) {
      out.push_back(scale * std::sqrt(multinom) * product);
      return;
    }
    for (std::size_t i = start; i < u.size(); ++i) {
      ++alpha[i];
      self(self, i, remaining - 1, used + 1, product * u[i],
           multinom * double(used + 1) / double(alpha[i]));
      --alpha[i];
    }
  };
  rec(rec, 0, degree, 0, 1.0, 1.0);
}

}  // namespace

std::size_t truncated_feature_size(const DotProductKernel& k, std::size_t dim,
                                   std::size_t J) {
  double total = 0.0;
  for (std::size_t j = 0; j <= J; ++j) {
    if (maclaurin_coefficient(k, j) > 0.0) total += monomial_count(dim, j);
  }
  return total > 1e18 ? std::size_t(-1) : static_cast<std::size_t>(total);
}

std::vector<double> truncated_feature_map(const DotProductKernel& k,
                                          std::span<const double> z, std::size_t J,
                                          std::size_t max_entries) {
  if (J < 1) throw Error("invalid_argument", "truncation order must be >= 1");
  const std::size_t size = truncated_feature_size(k, z.size(), J);
  if (size > max_entries) {
    throw Error("capacity", "explicit feature map needs " + std::to_string(size) +
                                " entries (limit " + std::to_string(max_entries) + ")");
  }
  double nz = 0.0;
  for (double v : z) nz += v * v;
  nz = std::sqrt(nz);

  std::vector<double> out;
  out.reserve(size);
  if (nz < kZeroNorm) {
    out.assign(size, 0.0);
    return out;
  }
  std::vector<double> unit(z.begin(), z.end());
  for (auto& v : unit) v /= nz;
  for (std::size_t j = 0; j <= J; ++j) {
    const double b = maclaurin_coefficient(k, j);
    if (b <= 0.0) continue;
    // sqrt(b_j) |z|^{1-j} z^{(x)j} = sqrt(b_j) |z| unit^{(x)j}
    append_monomials(unit, j, std::sqrt(b) * nz, out);
  }
  return out;
}

// ---------------------------------------------------------------------------

KernelReport validate(const DotProductKernel& k) {
  check_kernel(k);
  KernelReport r;
  r.kernel = k;
  r.kappa_at_one = kappa_eval(k, 1.0);
  r.derivative_at_one = kappa_derivative(k, 1.0);
  double min_b = maclaurin_coefficient(k, 0);
  for (std::size_t j = 1; j <= 64; ++j) min_b = std::min(min_b, maclaurin_coefficient(k, j));
  r.min_coefficient = min_b;
  r.lipschitz = lipschitz_factor(k);
  r.satisfies_a1 = min_b >= 0.0 && std::abs(r.kappa_at_one - 1.0) < 1e-12 &&
                   std::abs(r.derivative_at_one - 1.0) < 1e-12;
  return r;
}

std::vector<DotProductKernel> kernel_zoo() {
  return {DotProductKernel::exponential(1.0), DotProductKernel::inverse_polynomial(),
          DotProductKernel::polynomial(2),    DotProductKernel::polynomial(3),
          DotProductKernel::arccos1(),        DotProductKernel::vovk3(),
          DotProductKernel::linear()};
}

}  // namespace ckn
