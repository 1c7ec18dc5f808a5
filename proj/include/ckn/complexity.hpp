#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "ckn/kernels.hpp"

namespace ckn {

enum class ActivationKind { identity, square, exp_like, kappa_match, custom, srelu };

// Activation sigma(u) = sum_j a_j u^j.
//   identity: a_1 = 1; square: a_2 = 1; exp_like: e^u - 1, a_j = 1/j! (j >= 1);
//   kappa_match: a_j = b_j of `matched`; custom / srelu: explicit list.
struct ActivationSpec {
  ActivationKind kind = ActivationKind::identity;
  DotProductKernel matched;     // kappa_match only
  std::vector<double> coeffs;   // custom / srelu only

  double coefficient(std::size_t j) const;
  // Highest index with a non-zero coefficient, or nullopt when the sequence
  // has infinite support.
  std::optional<std::size_t> support() const;
  std::string name() const;

  static ActivationSpec identity() { return {ActivationKind::identity, {}, {}}; }
  static ActivationSpec square() { return {ActivationKind::square, {}, {}}; }
  static ActivationSpec exp_like() { return {ActivationKind::exp_like, {}, {}}; }
  static ActivationSpec kappa_match(const DotProductKernel& k) {
    return {ActivationKind::kappa_match, k, {}};
  }
  static ActivationSpec custom(std::vector<double> a) {
    return {ActivationKind::custom, {}, std::move(a)};
  }
};

// Experimental smoothed ReLU: least-squares polynomial fit of max(0, u) on
// [-1, 1] using only the powers j <= degree where the kernel's b_j > 0.
ActivationSpec srelu_fit(const DotProductKernel& k, std::size_t degree = 8);

// "identity", "square", "exp_like", "kappa_match", "srelu", or
// "custom:a0,a1,...". The kernel is needed for kappa_match and srelu.
ActivationSpec parse_activation(const std::string& spec, const DotProductKernel& k);

struct SeriesValue {
  double value = 0.0;       // partial sum up to J
  double tail_bound = 0.0;  // estimate of the remaining terms
};

// C^2(lambda^2) = sum_j a_j^2 / b_j lambda^{2j}. Throws "invalid_argument" when
// a_j != 0 where b_j = 0, and "divergence" when the series is not summable at
// this lambda^2.
SeriesValue c_sigma_sq(const ActivationSpec& act, const DotProductKernel& k, double lambda_sq,
                       std::size_t J = 128);

// Layer k filters w_k^{ij}(v), stored [i][j][v]; the offset measure has
// weight 1/e.
struct FilterBank {
  std::size_t p_out = 0;
  std::size_t p_in = 0;
  std::size_t e = 1;
  std::vector<double> data;

  double at(std::size_t i, std::size_t j, std::size_t v) const {
    return data[(i * p_in + j) * e + v];
  }
  double& at(std::size_t i, std::size_t j, std::size_t v) { return data[(i * p_in + j) * e + v]; }
};

struct CnnWeights {
  std::vector<FilterBank> layers;
  std::size_t p_n = 0;     // channels of the last layer
  std::size_t n_grid = 0;  // positions of the final map
  std::vector<double> final_weights;  // w_{n+1}[i][u]
};

void check_weights(const CnnWeights& w);

// Binary: "CKNW", u32 layer count, per layer u32 p_out, p_in, e then f64 data
// [i][j][v]; then u32 p_n, n_grid and f64 final weights [i][u]. Little-endian.
CnnWeights load_weights(const std::string& path);
void save_weights(const CnnWeights& w, const std::string& path);
CnnWeights parse_weights_json(const std::string& text);

// (1/e) sum_v sum_j w^{ij}(v)^2 for filter i.
double filter_sq_norm(const FilterBank& w, std::size_t i);
// (1/e) sum_v w^{ij}(v)^2.
double filter_pair_sq_norm(const FilterBank& w, std::size_t i, std::size_t j);
// (1/e) sum_v ||W(v)||_F^2 and (1/e) sum_v ||W(v)||_2^2.
double mixed_frobenius_sq(const FilterBank& w);
double mixed_spectral_sq(const FilterBank& w);

// Largest singular value of the p_out x (e * p_in) matrix (1/sqrt(e)) [W(1) .. W(e)],
// the operator norm of z -> (1/e) sum_v W(v) z(v). Power iteration; throws
// "no_convergence" after max_iter sweeps.
double operator_spectral_norm(const FilterBank& w, double tol = 1e-10,
                              std::size_t max_iter = 10000);

double final_sq_norm(const CnnWeights& w);

double prop4_bound(const CnnWeights& w, const ActivationSpec& act, const DotProductKernel& k,
                   std::size_t J = 128);
double prop5_bound(const CnnWeights& w, const ActivationSpec& act, const DotProductKernel& k,
                   std::size_t J = 128);

// rho^n ||w_{n+1}|| prod_k ||W_k||_2.
double generic_stability_factor(const CnnWeights& w, double rho);

struct MarginBound {
  double rademacher = 0.0;
  double margin_bound = 0.0;
};

// rademacher = lambda sqrt(mean diag) / sqrt(N);
// margin_bound = empirical + 2 rademacher / gamma + sqrt(log(1/delta) / (2N)).
MarginBound rademacher_margin_bound(double lambda, const std::vector<double>& kernel_diagonal,
                                    double gamma, double delta, double empirical_margin_loss);

}  // namespace ckn
