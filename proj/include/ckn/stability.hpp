#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ckn/architecture.hpp"
#include "ckn/nystrom.hpp"
#include "ckn/signal.hpp"

namespace ckn {

// Stroke-like 28x28 images: a few smooth random curves drawn with a soft pen,
// values in [0, 1], zero boundary. Deterministic in seed.
std::vector<Signal> synthetic_corpus(std::size_t count, std::uint64_t seed,
                                     std::size_t size = 28);

struct DeformationSettings {
  double smoothing_scale = 4.0;   // Gaussian scale of the random field
  double base_grad_norm = 0.1;    // ||grad tau||_inf of the field before alpha
  std::size_t set_size = 20;
  long translation = 2;           // shift length along each of the 8 directions
};

// The i-th translation of the 8-direction family (dx, dy in {-t, 0, t}, not both 0).
std::vector<long> direction_shift(std::size_t i, long t, std::size_t dims);

// Deformed copies L_{alpha tau_i} x for i < set_size, optionally followed by a
// translation along a direction drawn from the seed.
std::vector<Signal> transformation_set(const Signal& x, double alpha, bool translate,
                                       std::uint64_t seed, const DeformationSettings& settings);

struct RelativeDistance {
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation over the set
};

// Average of ||Phi(x') - Phi(x)|| / ||Phi(x)|| over the set, with the exact
// kernel or, when `model` is given, the CKN approximation.
RelativeDistance relative_distance(const Signal& x_ref, const std::vector<Signal>& set,
                                   const ArchitectureSpec& arch,
                                   const CknModel* model = nullptr);

struct StabilityRow {
  std::string condition;
  double alpha = 0.0;
  std::size_t final_subsample = 0;
  std::size_t patch = 0;
  std::size_t n_set = 0;
  double mean_rel_dist = 0.0;
  double std_rel_dist = 0.0;
  std::uint64_t seed = 0;
};

std::string stability_csv(const std::vector<StabilityRow>& rows);

// One row per alpha, deformation-only sets.
std::vector<StabilityRow> alpha_sweep(const Signal& x_ref, const std::vector<double>& alphas,
                                      const ArchitectureSpec& arch, std::uint64_t seed,
                                      const DeformationSettings& settings = {});

// For each final-layer subsampling s (sigma = s / sqrt(2)): rows "deformation",
// "deformation+translation" and "gap" (difference of the two means).
std::vector<StabilityRow> pooling_sweep(const Signal& x_ref, const ArchitectureSpec& base,
                                        const std::vector<std::size_t>& final_subsamples,
                                        double alpha, std::uint64_t seed,
                                        const DeformationSettings& settings = {});

// Same patch size at every layer; rows "deformation" and "deformation+translation".
std::vector<StabilityRow> patch_sweep(const Signal& x_ref, const ArchitectureSpec& base,
                                      const std::vector<std::size_t>& patch_sizes,
                                      double alpha, std::uint64_t seed,
                                      const DeformationSettings& settings = {});

// 2^d ||grad h||_1 for the standard Gaussian h on R^d (d = 1 or 2).
double translation_constant(std::size_t dims);

struct TranslationCheck {
  std::vector<long> shift;
  double lhs = 0.0;  // ||L_c A x - A x|| / ||x||
  double rhs = 0.0;  // C2 / sigma * |c|
  bool holds = false;
};

// Gaussian pooling at scale sigma without subsampling, circular boundary.
std::vector<TranslationCheck> translation_bound_check(const Signal& x, double sigma,
                                                      const std::vector<std::vector<long>>& shifts);

}  // namespace ckn
