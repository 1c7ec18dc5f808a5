#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ckn/engine.hpp"
#include "ckn/nystrom.hpp"
#include "ckn/signal.hpp"

namespace ckn {

// A signal on the discretized roto-translation group: one planar slice per
// rotation angle 2 pi r / R. Slices share shape and channels and use circular
// boundaries. The Haar measure gives each slice weight 1/R.
struct GroupSignal {
  std::size_t rotations = 1;
  std::vector<Signal> slices;

  double squared_norm() const;
};

// R identical copies of a 2D signal.
GroupSignal extend(const Signal& x, std::size_t rotations);

// g = (c, theta) with theta an index into the R rotation angles.
struct GroupElement {
  std::vector<long> shift{0, 0};
  long theta = 0;
};

// True when theta is a multiple of a quarter turn, so grid rotation is exact.
bool exact_rotation(long theta, std::size_t rotations);

// g g' = (c + R_theta c', theta + theta'); exact rotations only.
GroupElement compose(const GroupElement& g, const GroupElement& h, std::size_t rotations);
GroupElement inverse(const GroupElement& g, std::size_t rotations);

// Planar part of the action: out(u) = s(R_{-theta}(u - c)), rotating about index
// (0, 0) modulo the grid. Quarter-turn rotations are exact permutations; other
// angles use bilinear interpolation (approximate).
Signal rotate_translate(const Signal& s, const std::vector<long>& shift, long theta,
                        std::size_t rotations);

// (L_g x)(u, eta) = x(R_{-theta}(u - c), eta - theta).
GroupSignal group_action(const GroupElement& g, const GroupSignal& x);

struct GroupLayerSpec {
  std::vector<std::size_t> patch{3, 3};
  DotProductKernel kernel;
  double pooling_sigma = 0.0;
  std::size_t subsample = 1;
};

// Offsets of the canonical centered patch rotated by angle eta (rounded to the
// grid when eta is not a quarter turn).
std::vector<std::vector<long>> rotated_offsets(const std::vector<std::size_t>& patch, long eta,
                                               std::size_t rotations);

// Per-slice patch matrices, rows scaled by 1/sqrt(e), vector ordered by the
// canonical offsets.
std::vector<Matrix> group_patches(const GroupSignal& x, const std::vector<std::size_t>& patch);

struct GroupModel {
  bool subsample_norm = true;
  std::vector<GroupLayerSpec> specs;
  std::vector<CknLayer> layers;
};

// Anchors and whiteners learned layer by layer from the patches of `x`.
GroupModel fit_group_model(const GroupSignal& x, const std::vector<GroupLayerSpec>& specs,
                           std::size_t anchors, AnchorMethod method, std::uint64_t seed,
                           bool subsample_norm = true);

// One equivariant layer with the CKN backend: rotated patches, projection,
// per-slice Gaussian pooling and subsampling.
GroupSignal equivariant_layer(const GroupSignal& x, const GroupLayerSpec& spec,
                              const CknLayer& layer, bool subsample_norm);

GroupSignal group_forward(const GroupModel& model, const GroupSignal& x);

// A_c: average over the rotation slices.
Signal global_rotation_pool(const GroupSignal& x);

// Exact-Gram backend. Positions are flattened as eta * N + u.
struct GroupGrams {
  Matrix gxx, gyy, gxy;
  std::vector<std::size_t> shape;
  std::size_t rotations = 1;
};

// Propagates the Grams of x and y through the layers. Memory grows as
// (R N)^2, so this is restricted to R <= 4.
GroupGrams group_exact_grams(const GroupSignal& x, const GroupSignal& y,
                             const std::vector<GroupLayerSpec>& specs, bool subsample_norm = true);

// ||A_c Phi(y) - S A_c Phi(x)||, where S applies the planar part of g on the
// final grid (shift divided by the total stride).
double exact_aligned_pool_distance(const GroupGrams& g, const GroupElement& elem,
                                   std::size_t total_stride);

struct GroupReport {
  std::size_t rotations = 0;
  std::vector<std::size_t> grid;
  bool exact = true;                  // every tested rotation was a quarter turn
  double equivariance_max_err = 0.0;  // max |Phi(L_g x) - L_g Phi(x)|
  double invariance_max_err = 0.0;    // max |A_c Phi(L_g x) - S_g A_c Phi(x)|
  double global_descriptor_err = 0.0; // max |mean_u A_c Phi(L_g x) - mean_u A_c Phi(x)|
};

// Checks every rotation index with a fixed shift (a multiple of the total
// stride) using the CKN backend fitted on x.
GroupReport group_test(const Signal& x, std::size_t rotations,
                       const std::vector<GroupLayerSpec>& specs, std::size_t anchors,
                       std::uint64_t seed);

}  // namespace ckn
