#include "ckn/engine.hpp"

#include <algorithm>
#include <cmath>

#include "ckn/error.hpp"
#include "ckn/parallel.hpp"

namespace ckn {

namespace {

std::size_t volume(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (auto s : shape) n *= s;
  return n;
}

// For each patch offset, the flat index of position u + v, or -1 when it falls
// outside a zero-padded grid.
std::vector<std::vector<long>> shifted_indices(const std::vector<std::size_t>& shape,
                                               const std::vector<std::vector<long>>& offsets,
                                               Boundary padding) {
  const std::size_t n = volume(shape);
  const std::size_t d = shape.size();
  std::vector<std::vector<long>> table(offsets.size(), std::vector<long>(n));
  for (std::size_t o = 0; o < offsets.size(); ++o) {
    for (std::size_t pos = 0; pos < n; ++pos) {
      std::size_t rem = pos;
      std::vector<long> idx(d);
      for (std::size_t a = d; a-- > 0;) {
        idx[a] = static_cast<long>(rem % shape[a]);
        rem /= shape[a];
      }
      long flat = 0;
      bool inside = true;
      for (std::size_t a = 0; a < d; ++a) {
        const long len = static_cast<long>(shape[a]);
        long j = idx[a] + offsets[o][a];
        if (padding == Boundary::circular) {
          j = ((j % len) + len) % len;
        } else if (j < 0 || j >= len) {
          inside = false;
          break;
        }
        flat = flat * len + j;
      }
      table[o][pos] = inside ? flat : -1;
    }
  }
  return table;
}

Eigen::VectorXd diag_norms(const Matrix& g) {
  Eigen::VectorXd n(g.rows());
  for (Eigen::Index i = 0; i < g.rows(); ++i) n[i] = std::sqrt(std::max(0.0, g(i, i)));
  return n;
}

// Lift of a self-Gram; the diagonal keeps the squared norms exactly.
Matrix lift_self(const Matrix& g, const Eigen::VectorXd& norms, const DotProductKernel& k) {
  Matrix out = lift_gram(g, norms, norms, k);
  for (Eigen::Index i = 0; i < out.rows(); ++i) out(i, i) = norms[i] * norms[i];
  return out;
}

}  // namespace

Matrix cross_gram(const Signal& x, const Signal& y) {
  if (x.channels != y.channels) {
    throw Error("shape_mismatch", "channel counts differ (" + std::to_string(x.channels) +
                                      " vs " + std::to_string(y.channels) + ")");
  }
  const std::size_t nx = x.positions(), ny = y.positions(), p = x.channels;
  Matrix g(nx, ny);
  parallel_for(0, nx, [&](std::size_t u) {
    const double* xu = x.values.data() + u * p;
    for (std::size_t v = 0; v < ny; ++v) {
      const double* yv = y.values.data() + v * p;
      double s = 0.0;
      for (std::size_t c = 0; c < p; ++c) s += xu[c] * yv[c];
      g(u, v) = s;
    }
  });
  return g;
}

LayerGrams init_grams(const Signal& x, const Signal& y) {
  if (x.dims() != y.dims()) throw Error("shape_mismatch", "signal dimensions differ");
  LayerGrams g;
  g.gxx = cross_gram(x, x);
  g.gyy = cross_gram(y, y);
  g.gxy = cross_gram(x, y);
  g.grid_shape_x = x.shape;
  g.grid_shape_y = y.shape;
  return g;
}

Matrix patch_gram(const Matrix& g, const std::vector<std::size_t>& shape_a,
                  const std::vector<std::size_t>& shape_b,
                  const std::vector<std::size_t>& patch, Boundary padding,
                  PatchAlign align) {
  const auto resolved = resolve_patch(patch, shape_a.size());
  const auto offsets = patch_offsets(resolved, align);
  const auto ia = shifted_indices(shape_a, offsets, padding);
  const auto ib = shifted_indices(shape_b, offsets, padding);
  const double inv_e = 1.0 / double(offsets.size());
  const std::size_t na = volume(shape_a), nb = volume(shape_b);
  Matrix out(na, nb);
  parallel_for(0, na, [&](std::size_t u) {
    for (std::size_t v = 0; v < nb; ++v) {
      double s = 0.0;
      for (std::size_t o = 0; o < offsets.size(); ++o) {
        const long a = ia[o][u];
        const long b = ib[o][v];
        if (a >= 0 && b >= 0) s += g(a, b);
      }
      out(u, v) = s * inv_e;
    }
  });
  return out;
}

LayerGrams patch_inner(const LayerGrams& g, const std::vector<std::size_t>& patch,
                       Boundary padding, PatchAlign align) {
  LayerGrams out;
  out.grid_shape_x = g.grid_shape_x;
  out.grid_shape_y = g.grid_shape_y;
  out.gxx = patch_gram(g.gxx, g.grid_shape_x, g.grid_shape_x, patch, padding, align);
  out.gyy = patch_gram(g.gyy, g.grid_shape_y, g.grid_shape_y, patch, padding, align);
  out.gxy = patch_gram(g.gxy, g.grid_shape_x, g.grid_shape_y, patch, padding, align);
  return out;
}

Matrix lift_gram(const Matrix& g, const Eigen::VectorXd& norms_a,
                 const Eigen::VectorXd& norms_b, const DotProductKernel& k) {
  Matrix out(g.rows(), g.cols());
  parallel_for(0, static_cast<std::size_t>(g.rows()), [&](std::size_t u) {
    for (Eigen::Index v = 0; v < g.cols(); ++v) {
      out(u, v) = lift_entry(k, norms_a[u], norms_b[v], g(u, v));
    }
  });
  return out;
}

LayerGrams kernel_lift(const LayerGrams& g, const DotProductKernel& k) {
  const auto nx = diag_norms(g.gxx);
  const auto ny = diag_norms(g.gyy);
  LayerGrams out;
  out.grid_shape_x = g.grid_shape_x;
  out.grid_shape_y = g.grid_shape_y;
  out.gxx = lift_self(g.gxx, nx, k);
  out.gyy = lift_self(g.gyy, ny, k);
  out.gxy = lift_gram(g.gxy, nx, ny, k);
  return out;
}

Matrix pool_gram_matrix(const Matrix& g, const PoolingOperator& ha,
                        const PoolingOperator& hb) {
  if (static_cast<std::size_t>(g.rows()) != ha.in_size ||
      static_cast<std::size_t>(g.cols()) != hb.in_size) {
    throw Error("shape_mismatch", "pooling operator does not match Gram size");
  }
  const std::size_t na = ha.in_size, ma = ha.out_size(), mb = hb.out_size();
  // T = G H_b^T, then G' = H_a T.
  Matrix t(na, mb);
  parallel_for(0, na, [&](std::size_t u) {
    for (std::size_t n = 0; n < mb; ++n) {
      const auto& row = hb.rows[n];
      double s = 0.0;
      for (std::size_t i = 0; i < row.cols.size(); ++i) s += g(u, row.cols[i]) * row.weights[i];
      t(u, n) = s;
    }
  });
  Matrix out(ma, mb);
  parallel_for(0, ma, [&](std::size_t n) {
    const auto& row = ha.rows[n];
    for (std::size_t m = 0; m < mb; ++m) {
      double s = 0.0;
      for (std::size_t i = 0; i < row.cols.size(); ++i) s += row.weights[i] * t(row.cols[i], m);
      out(n, m) = s;
    }
  });
  return out;
}

LayerGrams pool_gram(const LayerGrams& g, double sigma, std::size_t subsample,
                     bool subsample_norm, Boundary padding) {
  const auto hx = pooling_operator(g.grid_shape_x, sigma, subsample, padding, subsample_norm);
  const auto hy = pooling_operator(g.grid_shape_y, sigma, subsample, padding, subsample_norm);
  LayerGrams out;
  out.grid_shape_x = hx.out_shape;
  out.grid_shape_y = hy.out_shape;
  out.gxx = pool_gram_matrix(g.gxx, hx, hx);
  out.gyy = pool_gram_matrix(g.gyy, hy, hy);
  out.gxy = pool_gram_matrix(g.gxy, hx, hy);
  return out;
}

// ---------------------------------------------------------------------------

double KernelValues::distance() const { return std::sqrt(std::max(0.0, kxx + kyy - 2.0 * kxy)); }

namespace {

double diagonal_sum(const Matrix& g) {
  if (g.rows() != g.cols()) {
    throw Error("shape_mismatch", "final feature maps have different grid sizes");
  }
  double s = 0.0;
  for (Eigen::Index i = 0; i < g.rows(); ++i) s += g(i, i);
  return s;
}

}  // namespace

SelfChain self_chain(const Signal& x, const ArchitectureSpec& arch) {
  check_architecture(arch);
  SelfChain chain;
  Matrix g = cross_gram(x, x);
  std::vector<std::size_t> shape = x.shape;
  for (const auto& layer : arch.layers) {
    chain.grid_shapes.push_back(shape);
    g = patch_gram(g, shape, shape, layer.patch, layer.padding, layer.align);
    const auto norms = diag_norms(g);
    chain.lift_norms.push_back(norms);
    g = lift_self(g, norms, layer.kernel);
    const auto h = pooling_operator(shape, layer.pooling_sigma, layer.subsample,
                                    layer.padding, arch.subsample_norm);
    g = pool_gram_matrix(g, h, h);
    shape = h.out_shape;
  }
  chain.kernel = diagonal_sum(g);
  return chain;
}

double cross_kernel(const Signal& x, const SelfChain& cx, const Signal& y,
                    const SelfChain& cy, const ArchitectureSpec& arch) {
  if (x.dims() != y.dims()) throw Error("shape_mismatch", "signal dimensions differ");
  Matrix g = cross_gram(x, y);
  for (std::size_t k = 0; k < arch.layers.size(); ++k) {
    const auto& layer = arch.layers[k];
    const auto& sx = cx.grid_shapes[k];
    const auto& sy = cy.grid_shapes[k];
    g = patch_gram(g, sx, sy, layer.patch, layer.padding, layer.align);
    g = lift_gram(g, cx.lift_norms[k], cy.lift_norms[k], layer.kernel);
    const auto hx = pooling_operator(sx, layer.pooling_sigma, layer.subsample, layer.padding,
                                     arch.subsample_norm);
    const auto hy = pooling_operator(sy, layer.pooling_sigma, layer.subsample, layer.padding,
                                     arch.subsample_norm);
    g = pool_gram_matrix(g, hx, hy);
  }
  return diagonal_sum(g);
}

KernelValues full_kernel(const Signal& x, const Signal& y, const ArchitectureSpec& arch) {
  if (x.shape != y.shape || x.channels != y.channels) {
    throw Error("shape_mismatch", "full_kernel needs signals of identical shape and channels");
  }
  const auto cx = self_chain(x, arch);
  const auto cy = self_chain(y, arch);
  KernelValues kv;
  kv.kxx = cx.kernel;
  kv.kyy = cy.kernel;
  kv.kxy = cross_kernel(x, cx, y, cy, arch);
  return kv;
}

double representation_distance(const Signal& x, const Signal& y,
                               const ArchitectureSpec& arch) {
  return full_kernel(x, y, arch).distance();
}

Signal cascade_pool(const Signal& x, const ArchitectureSpec& arch) {
  check_architecture(arch);
  Signal out = x;
  for (const auto& layer : arch.layers) {
    out = apply_pooling(pooling_operator(out.shape, layer.pooling_sigma, layer.subsample,
                                         layer.padding, arch.subsample_norm),
                        out);
  }
  return out;
}

Matrix kernel_matrix(const std::vector<Signal>& batch, const ArchitectureSpec& arch) {
  std::vector<SelfChain> chains;
  chains.reserve(batch.size());
  for (const auto& s : batch) chains.push_back(self_chain(s, arch));
  Matrix k(batch.size(), batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    k(i, i) = chains[i].kernel;
    for (std::size_t j = i + 1; j < batch.size(); ++j) {
      k(i, j) = k(j, i) = cross_kernel(batch[i], chains[i], batch[j], chains[j], arch);
    }
  }
  return k;
}

}  // namespace ckn
