#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "ckn/architecture.hpp"
#include "ckn/kernels.hpp"
#include "ckn/pooling.hpp"
#include "ckn/signal.hpp"

namespace ckn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Pairwise inner products between the current feature maps of two signals:
// gxy(u, u') = <x_k(u), y_k(u')>, and likewise for x-x and y-y.
struct LayerGrams {
  Matrix gxx;
  Matrix gyy;
  Matrix gxy;
  std::vector<std::size_t> grid_shape_x;
  std::vector<std::size_t> grid_shape_y;
};

// Raw channel inner products between every pair of positions.
LayerGrams init_grams(const Signal& x, const Signal& y);

// Gram of the patch maps: G'(u, u') = (1/e) sum_v G(u + v, u' + v). Positions
// outside the grid contribute zero under zero padding and wrap when circular.
LayerGrams patch_inner(const LayerGrams& g, const std::vector<std::size_t>& patch,
                       Boundary padding, PatchAlign align = PatchAlign::centered);

// Pointwise kernel mapping applied through the Gram entries.
LayerGrams kernel_lift(const LayerGrams& g, const DotProductKernel& k);

// G' = H_x G H_y^T with H the Gaussian-then-subsample operator.
LayerGrams pool_gram(const LayerGrams& g, double sigma, std::size_t subsample,
                     bool subsample_norm, Boundary padding = Boundary::zero);

// Single-matrix building blocks shared with the group module.
Matrix cross_gram(const Signal& x, const Signal& y);
Matrix patch_gram(const Matrix& g, const std::vector<std::size_t>& shape_a,
                  const std::vector<std::size_t>& shape_b,
                  const std::vector<std::size_t>& patch, Boundary padding,
                  PatchAlign align);
Matrix lift_gram(const Matrix& g, const Eigen::VectorXd& norms_a,
                 const Eigen::VectorXd& norms_b, const DotProductKernel& k);
Matrix pool_gram_matrix(const Matrix& g, const PoolingOperator& ha,
                        const PoolingOperator& hb);

struct KernelValues {
  double kxx = 0.0;
  double kyy = 0.0;
  double kxy = 0.0;

  double distance() const;
};

// Per-layer state of one signal's self-Gram chain, reused across many
// comparisons against the same reference.
struct SelfChain {
  std::vector<Eigen::VectorXd> lift_norms;  // norms entering each kernel lift
  std::vector<std::vector<std::size_t>> grid_shapes;  // input grid of each layer
  double kernel = 0.0;                      // K_n(x, x)
};

SelfChain self_chain(const Signal& x, const ArchitectureSpec& arch);

// K_n(x, y) given both self chains.
double cross_kernel(const Signal& x, const SelfChain& cx, const Signal& y,
                    const SelfChain& cy, const ArchitectureSpec& arch);

KernelValues full_kernel(const Signal& x, const Signal& y, const ArchitectureSpec& arch);

// sqrt(max(0, kxx + kyy - 2 kxy)).
double representation_distance(const Signal& x, const Signal& y,
                               const ArchitectureSpec& arch);

// All pooling operators of the architecture applied directly to x, channel by
// channel (the linear part of the representation).
Signal cascade_pool(const Signal& x, const ArchitectureSpec& arch);

// Full kernel matrix over a batch of signals.
Matrix kernel_matrix(const std::vector<Signal>& batch, const ArchitectureSpec& arch);

}  // namespace ckn
