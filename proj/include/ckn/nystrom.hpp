#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ckn/architecture.hpp"
#include "ckn/engine.hpp"
#include "ckn/signal.hpp"

namespace ckn {

enum class AnchorMethod { uniform, spherical_kmeans };

AnchorMethod parse_anchor_method(const std::string& name);

struct CknLayer {
  LayerSpec spec;
  std::size_t in_channels = 0;
  Matrix anchors;   // p x (e * in_channels), unit rows
  Matrix whitener;  // p x p, K_ZZ^{-1/2}

  std::size_t out_channels() const { return static_cast<std::size_t>(anchors.rows()); }
  std::size_t patch_dim() const { return static_cast<std::size_t>(anchors.cols()); }
};

struct CknModel {
  bool subsample_norm = true;
  std::vector<CknLayer> layers;
};

// Row u holds the patch at position u scaled by 1/sqrt(e): the concatenation of
// x(u + v) over the layer's offsets (row-major), zero outside a zero-padded grid.
Matrix extract_patches(const Signal& x, const LayerSpec& layer);

// Unit-normalized non-zero rows with duplicate directions removed, in order of
// first appearance.
Matrix distinct_directions(const Matrix& patches);

// p unit-norm anchors drawn from the distinct non-zero patch directions.
// p = 0 selects all of them. Throws "degenerate" when fewer than p exist.
Matrix sample_anchors(const Matrix& patches, std::size_t p, AnchorMethod method,
                      std::uint64_t seed, std::size_t kmeans_iterations = 10);

// Kernel matrix K(z_i, z_j) between the rows of two matrices.
Matrix kernel_block(const Matrix& a, const Matrix& b, const DotProductKernel& k);

// Symmetric K_ZZ^{-1/2}; eigenvalues below eps * lambda_max are dropped.
Matrix whiten(const Matrix& anchors, const DotProductKernel& k, double eps = 1e-8);

Eigen::VectorXd project(const CknLayer& layer, std::span<const double> z);

// Projection of every patch of x through the layer, before pooling.
Signal map_layer(const CknLayer& layer, const Signal& x);

// Patch, project and pool through one layer.
Signal forward_layer(const CknLayer& layer, const Signal& x, bool subsample_norm);

Signal forward(const CknModel& model, const Signal& x);

struct FitOptions {
  // Anchors per layer; a single entry is broadcast, 0 means all distinct patches.
  std::vector<std::size_t> anchors{64};
  AnchorMethod method = AnchorMethod::spherical_kmeans;
  std::uint64_t seed = 0;
  double eps = 1e-8;
  // Upper bound on patches collected per layer (uniform subsample beyond it).
  std::size_t max_patches = 200000;
};

CknModel fit_model(const ArchitectureSpec& arch, const std::vector<Signal>& data,
                   const FitOptions& options);

// Sum over positions and channels of the product of two feature maps.
double feature_inner(const Signal& a, const Signal& b);

// <psi_n(x), psi_n(y)>.
double ckn_kernel(const CknModel& model, const Signal& x, const Signal& y);

// |<psi_n(x), psi_n(y)> - K_n(x, y)| / max(K_n(x, x), K_n(y, y)).
double approx_error(const CknModel& model, const Signal& x, const Signal& y,
                    const ArchitectureSpec& arch);

// Binary model file ("CKN1", little-endian) and a readable JSON mirror.
void save_model(const CknModel& model, const std::string& path);
CknModel load_model(const std::string& path);
std::string model_to_json(const CknModel& model);

}  // namespace ckn
