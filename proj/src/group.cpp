#include "ckn/group.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ckn/error.hpp"
#include "ckn/pooling.hpp"

namespace ckn {

namespace {

long wrap(long i, long n) { return ((i % n) + n) % n; }

// Quarter-turn rotation R_{90 k} of (a, b).
void rotate_quarter(long k, long a, long b, long& ra, long& rb) {
  switch (wrap(k, 4)) {
    case 0: ra = a; rb = b; break;
    case 1: ra = -b; rb = a; break;
    case 2: ra = -a; rb = -b; break;
    default: ra = b; rb = -a; break;
  }
}

long quarter_index(long theta, std::size_t rotations) {
  return wrap(theta, long(rotations)) * 4 / long(rotations);
}

double angle_of(long theta, std::size_t rotations) {
  return 2.0 * std::numbers::pi * double(theta) / double(rotations);
}

void check_group_signal(const GroupSignal& x) {
  if (x.rotations == 0 || x.slices.size() != x.rotations) {
    throw Error("shape_mismatch", "group signal needs one slice per rotation");
  }
  for (const auto& s : x.slices) {
    if (s.dims() != 2) throw Error("shape_mismatch", "group slices must be 2D");
    if (s.shape != x.slices[0].shape || s.channels != x.slices[0].channels) {
      throw Error("shape_mismatch", "group slices differ in shape or channels");
    }
  }
}

}  // namespace

double GroupSignal::squared_norm() const {
  double s = 0.0;
  for (const auto& sl : slices) s += sl.squared_norm();
  return rotations ? s / double(rotations) : 0.0;
}

GroupSignal extend(const Signal& x, std::size_t rotations) {
  if (rotations < 1) throw Error("invalid_argument", "need at least one rotation");
  if (x.dims() != 2) throw Error("shape_mismatch", "group extension needs a 2D signal");
  GroupSignal g;
  g.rotations = rotations;
  Signal s = x;
  s.boundary = Boundary::circular;
  g.slices.assign(rotations, s);
  return g;
}

bool exact_rotation(long theta, std::size_t rotations) {
  return (wrap(theta, long(rotations)) * 4) % long(rotations) == 0;
}

GroupElement compose(const GroupElement& g, const GroupElement& h, std::size_t rotations) {
  if (!exact_rotation(g.theta, rotations)) {
    throw Error("invalid_argument", "composition needs quarter-turn rotations");
  }
  long a = 0, b = 0;
  rotate_quarter(quarter_index(g.theta, rotations), h.shift[0], h.shift[1], a, b);
  return {{g.shift[0] + a, g.shift[1] + b}, wrap(g.theta + h.theta, long(rotations))};
}

GroupElement inverse(const GroupElement& g, std::size_t rotations) {
  if (!exact_rotation(g.theta, rotations)) {
    throw Error("invalid_argument", "inverse needs quarter-turn rotations");
  }
  long a = 0, b = 0;
  rotate_quarter(-quarter_index(g.theta, rotations), g.shift[0], g.shift[1], a, b);
  return {{-a, -b}, wrap(-g.theta, long(rotations))};
}

Signal rotate_translate(const Signal& s, const std::vector<long>& shift, long theta,
                        std::size_t rotations) {
  if (s.dims() != 2 || shift.size() != 2) {
    throw Error("shape_mismatch", "roto-translation acts on 2D signals");
  }
  const long n0 = long(s.shape[0]), n1 = long(s.shape[1]);
  const bool exact = exact_rotation(theta, rotations);
  const long k = exact ? quarter_index(theta, rotations) : 1;
  if (k % 2 != 0 && n0 != n1) throw Error("shape_mismatch", "rotations need a square grid");
  Signal out = s;
  const std::size_t p = s.channels;
  const double phi = -angle_of(theta, rotations);
  const double cs = std::cos(phi), sn = std::sin(phi);
  for (long u0 = 0; u0 < n0; ++u0) {
    for (long u1 = 0; u1 < n1; ++u1) {
      const long w0 = u0 - shift[0], w1 = u1 - shift[1];
      const std::size_t dst = std::size_t(u0 * n1 + u1);
      if (exact) {
        long a = 0, b = 0;
        rotate_quarter(-k, w0, w1, a, b);
        const std::size_t src = std::size_t(wrap(a, n0) * n1 + wrap(b, n1));
        for (std::size_t c = 0; c < p; ++c) out.at(dst, c) = s.at(src, c);
        continue;
      }
      const double a = cs * double(w0) - sn * double(w1);
      const double b = sn * double(w0) + cs * double(w1);
      const double fa = std::floor(a), fb = std::floor(b);
      const double ta = a - fa, tb = b - fb;
      const long a0 = wrap(long(fa), n0), a1 = wrap(long(fa) + 1, n0);
      const long b0 = wrap(long(fb), n1), b1 = wrap(long(fb) + 1, n1);
      for (std::size_t c = 0; c < p; ++c) {
        out.at(dst, c) = (1 - ta) * (1 - tb) * s.at(a0 * n1 + b0, c) +
                         (1 - ta) * tb * s.at(a0 * n1 + b1, c) +
                         ta * (1 - tb) * s.at(a1 * n1 + b0, c) + ta * tb * s.at(a1 * n1 + b1, c);
      }
    }
  }
  return out;
}

GroupSignal group_action(const GroupElement& g, const GroupSignal& x) {
  check_group_signal(x);
  GroupSignal out;
  out.rotations = x.rotations;
  const long r = long(x.rotations);
  for (long eta = 0; eta < r; ++eta) {
    out.slices.push_back(
        rotate_translate(x.slices[wrap(eta - g.theta, r)], g.shift, g.theta, x.rotations));
  }
  return out;
}

std::vector<std::vector<long>> rotated_offsets(const std::vector<std::size_t>& patch, long eta,
                                               std::size_t rotations) {
  const auto base = patch_offsets(resolve_patch(patch, 2), PatchAlign::centered);
  std::vector<std::vector<long>> out;
  out.reserve(base.size());
  const bool exact = exact_rotation(eta, rotations);
  const double phi = angle_of(eta, rotations);
  for (const auto& v : base) {
    long a = 0, b = 0;
    if (exact) {
      rotate_quarter(quarter_index(eta, rotations), v[0], v[1], a, b);
    } else {
      a = std::lround(std::cos(phi) * v[0] - std::sin(phi) * v[1]);
      b = std::lround(std::sin(phi) * v[0] + std::cos(phi) * v[1]);
    }
    out.push_back({a, b});
  }
  return out;
}

std::vector<Matrix> group_patches(const GroupSignal& x, const std::vector<std::size_t>& patch) {
  check_group_signal(x);
  std::vector<Matrix> out;
  const long n0 = long(x.slices[0].shape[0]), n1 = long(x.slices[0].shape[1]);
  const std::size_t p = x.slices[0].channels;
  for (std::size_t eta = 0; eta < x.rotations; ++eta) {
    const auto offsets = rotated_offsets(patch, long(eta), x.rotations);
    const double scale = 1.0 / std::sqrt(double(offsets.size()));
    const Signal& s = x.slices[eta];
    Matrix m(n0 * n1, offsets.size() * p);
    for (long u0 = 0; u0 < n0; ++u0) {
      for (long u1 = 0; u1 < n1; ++u1) {
        for (std::size_t o = 0; o < offsets.size(); ++o) {
          const std::size_t src =
              std::size_t(wrap(u0 + offsets[o][0], n0) * n1 + wrap(u1 + offsets[o][1], n1));
          for (std::size_t c = 0; c < p; ++c) m(u0 * n1 + u1, o * p + c) = scale * s.at(src, c);
        }
      }
    }
    out.push_back(std::move(m));
  }
  return out;
}

namespace {

LayerSpec planar_spec(const GroupLayerSpec& g) {
  LayerSpec l;
  l.patch = resolve_patch(g.patch, 2);
  l.subsample = g.subsample;
  l.pooling_sigma = g.pooling_sigma;
  l.kernel = g.kernel;
  l.padding = Boundary::circular;
  return l;
}

Matrix stack(const std::vector<Matrix>& blocks) {
  std::size_t rows = 0;
  for (const auto& b : blocks) rows += b.rows();
  Matrix out(rows, blocks.front().cols());
  std::size_t r = 0;
  for (const auto& b : blocks) {
    out.middleRows(r, b.rows()) = b;
    r += b.rows();
  }
  return out;
}

}  // namespace

GroupSignal equivariant_layer(const GroupSignal& x, const GroupLayerSpec& spec,
                              const CknLayer& layer, bool subsample_norm) {
  check_group_signal(x);
  if (x.slices[0].channels != layer.in_channels) {
    throw Error("shape_mismatch", "group layer channel mismatch");
  }
  const auto patches = group_patches(x, spec.patch);
  const auto op = pooling_operator(x.slices[0].shape, spec.pooling_sigma, spec.subsample,
                                   Boundary::circular, subsample_norm);
  GroupSignal out;
  out.rotations = x.rotations;
  for (const auto& pm : patches) {
    const Matrix psi = kernel_block(pm, layer.anchors, spec.kernel) * layer.whitener.transpose();
    Signal s;
    s.shape = x.slices[0].shape;
    s.channels = layer.out_channels();
    s.boundary = Boundary::circular;
    s.values.assign(psi.data(), psi.data() + psi.size());
    out.slices.push_back(apply_pooling(op, s));
  }
  return out;
}

GroupModel fit_group_model(const GroupSignal& x, const std::vector<GroupLayerSpec>& specs,
                           std::size_t anchors, AnchorMethod method, std::uint64_t seed,
                           bool subsample_norm) {
  check_group_signal(x);
  if (specs.empty()) throw Error("invalid_argument", "group model needs layers");
  GroupModel model;
  model.subsample_norm = subsample_norm;
  model.specs = specs;
  GroupSignal cur = x;
  for (std::size_t l = 0; l < specs.size(); ++l) {
    check_kernel(specs[l].kernel);
    const Matrix all = stack(group_patches(cur, specs[l].patch));
    const std::size_t distinct = distinct_directions(all).rows();
    const std::size_t p = anchors == 0 ? 0 : std::min(anchors, distinct);
    CknLayer layer;
    layer.spec = planar_spec(specs[l]);
    layer.in_channels = cur.slices[0].channels;
    layer.anchors = sample_anchors(all, p, method, seed + l);
    layer.whitener = whiten(layer.anchors, specs[l].kernel);
    cur = equivariant_layer(cur, specs[l], layer, subsample_norm);
    model.layers.push_back(std::move(layer));
  }
  return model;
}

GroupSignal group_forward(const GroupModel& model, const GroupSignal& x) {
  GroupSignal cur = x;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    cur = equivariant_layer(cur, model.specs[l], model.layers[l], model.subsample_norm);
  }
  return cur;
}

Signal global_rotation_pool(const GroupSignal& x) {
  check_group_signal(x);
  Signal out = x.slices[0];
  std::fill(out.values.begin(), out.values.end(), 0.0);
  const double w = 1.0 / double(x.rotations);
  for (const auto& s : x.slices) {
    for (std::size_t i = 0; i < s.values.size(); ++i) out.values[i] += w * s.values[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Exact Grams

namespace {

Matrix stacked_values(const GroupSignal& x) {
  const std::size_t n = x.slices[0].positions(), p = x.slices[0].channels;
  Matrix m(x.rotations * n, p);
  for (std::size_t eta = 0; eta < x.rotations; ++eta) {
    for (std::size_t u = 0; u < n; ++u) {
      for (std::size_t c = 0; c < p; ++c) m(eta * n + u, c) = x.slices[eta].at(u, c);
    }
  }
  return m;
}

// index[o][eta * N + u] = eta * N + (u + R_eta v_o).
std::vector<std::vector<std::size_t>> group_patch_index(const std::vector<std::size_t>& shape,
                                                        const std::vector<std::size_t>& patch,
                                                        std::size_t rotations) {
  const long n0 = long(shape[0]), n1 = long(shape[1]);
  const std::size_t n = std::size_t(n0 * n1);
  std::vector<std::vector<std::size_t>> index;
  for (std::size_t eta = 0; eta < rotations; ++eta) {
    const auto offsets = rotated_offsets(patch, long(eta), rotations);
    if (index.empty()) index.assign(offsets.size(), std::vector<std::size_t>(rotations * n));
    for (std::size_t o = 0; o < offsets.size(); ++o) {
      for (long u0 = 0; u0 < n0; ++u0) {
        for (long u1 = 0; u1 < n1; ++u1) {
          index[o][eta * n + std::size_t(u0 * n1 + u1)] =
              eta * n + std::size_t(wrap(u0 + offsets[o][0], n0) * n1 + wrap(u1 + offsets[o][1], n1));
        }
      }
    }
  }
  return index;
}

Matrix group_patch_gram(const Matrix& g, const std::vector<std::vector<std::size_t>>& index) {
  const double inv_e = 1.0 / double(index.size());
  Matrix out(g.rows(), g.cols());
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    for (Eigen::Index j = 0; j < g.cols(); ++j) {
      double s = 0.0;
      for (const auto& idx : index) s += g(idx[i], idx[j]);
      out(i, j) = s * inv_e;
    }
  }
  return out;
}

Eigen::VectorXd diag_sqrt(const Matrix& g) {
  Eigen::VectorXd n(g.rows());
  for (Eigen::Index i = 0; i < g.rows(); ++i) n[i] = std::sqrt(std::max(0.0, g(i, i)));
  return n;
}

PoolingOperator block_pooling(const std::vector<std::size_t>& shape, const GroupLayerSpec& spec,
                              std::size_t rotations, bool subsample_norm) {
  const auto op = pooling_operator(shape, spec.pooling_sigma, spec.subsample, Boundary::circular,
                                   subsample_norm);
  PoolingOperator big;
  big.in_size = op.in_size * rotations;
  big.out_shape = op.out_shape;
  for (std::size_t eta = 0; eta < rotations; ++eta) {
    for (const auto& row : op.rows) {
      SparseRow r = row;
      for (auto& c : r.cols) c += eta * op.in_size;
      big.rows.push_back(std::move(r));
    }
  }
  return big;
}

// (1/R^2) sum over slice pairs of the Gram blocks.
Matrix rotation_average(const Matrix& g, std::size_t rotations, std::size_t n) {
  Matrix a = Matrix::Zero(n, n);
  for (std::size_t e1 = 0; e1 < rotations; ++e1) {
    for (std::size_t e2 = 0; e2 < rotations; ++e2) a += g.block(e1 * n, e2 * n, n, n);
  }
  return a / double(rotations * rotations);
}

}  // namespace

GroupGrams group_exact_grams(const GroupSignal& x, const GroupSignal& y,
                             const std::vector<GroupLayerSpec>& specs, bool subsample_norm) {
  check_group_signal(x);
  check_group_signal(y);
  if (x.rotations != y.rotations || x.slices[0].shape != y.slices[0].shape) {
    throw Error("shape_mismatch", "group signals differ in shape or rotations");
  }
  if (x.rotations > 4) throw Error("capacity", "exact group Grams are limited to R <= 4");
  const Matrix vx = stacked_values(x), vy = stacked_values(y);
  GroupGrams g;
  g.rotations = x.rotations;
  g.shape = x.slices[0].shape;
  g.gxx = vx * vx.transpose();
  g.gyy = vy * vy.transpose();
  g.gxy = vx * vy.transpose();
  for (const auto& spec : specs) {
    const auto index = group_patch_index(g.shape, spec.patch, g.rotations);
    g.gxx = group_patch_gram(g.gxx, index);
    g.gyy = group_patch_gram(g.gyy, index);
    g.gxy = group_patch_gram(g.gxy, index);
    const auto nx = diag_sqrt(g.gxx), ny = diag_sqrt(g.gyy);
    g.gxy = lift_gram(g.gxy, nx, ny, spec.kernel);
    g.gxx = lift_gram(g.gxx, nx, nx, spec.kernel);
    g.gyy = lift_gram(g.gyy, ny, ny, spec.kernel);
    for (Eigen::Index i = 0; i < g.gxx.rows(); ++i) {
      g.gxx(i, i) = nx[i] * nx[i];
      g.gyy(i, i) = ny[i] * ny[i];
    }
    const auto h = block_pooling(g.shape, spec, g.rotations, subsample_norm);
    g.gxx = pool_gram_matrix(g.gxx, h, h);
    g.gyy = pool_gram_matrix(g.gyy, h, h);
    g.gxy = pool_gram_matrix(g.gxy, h, h);
    g.shape = h.out_shape;
  }
  return g;
}

double exact_aligned_pool_distance(const GroupGrams& g, const GroupElement& elem,
                                   std::size_t total_stride) {
  const long n0 = long(g.shape[0]), n1 = long(g.shape[1]);
  const std::size_t n = std::size_t(n0 * n1);
  if (!exact_rotation(elem.theta, g.rotations)) {
    throw Error("invalid_argument", "aligned distance needs a quarter-turn rotation");
  }
  for (long c : elem.shift) {
    if (c % long(total_stride) != 0) {
      throw Error("invalid_argument", "shift must be a multiple of the total stride");
    }
  }
  const Matrix axx = rotation_average(g.gxx, g.rotations, n);
  const Matrix ayy = rotation_average(g.gyy, g.rotations, n);
  const Matrix axy = rotation_average(g.gxy, g.rotations, n);
  const long k = quarter_index(elem.theta, g.rotations);
  const long c0 = elem.shift[0] / long(total_stride), c1 = elem.shift[1] / long(total_stride);
  double d2 = 0.0;
  for (long u0 = 0; u0 < n0; ++u0) {
    for (long u1 = 0; u1 < n1; ++u1) {
      long a = 0, b = 0;
      rotate_quarter(-k, u0 - c0, u1 - c1, a, b);
      const std::size_t u = std::size_t(u0 * n1 + u1);
      const std::size_t src = std::size_t(wrap(a, n0) * n1 + wrap(b, n1));
      d2 += ayy(u, u) + axx(src, src) - 2.0 * axy(src, u);
    }
  }
  return std::sqrt(std::max(0.0, d2));
}

GroupReport group_test(const Signal& x, std::size_t rotations,
                       const std::vector<GroupLayerSpec>& specs, std::size_t anchors,
                       std::uint64_t seed) {
  if (x.dims() != 2 || x.shape[0] != x.shape[1]) {
    throw Error("shape_mismatch", "group test needs a square 2D signal");
  }
  std::size_t stride = 1;
  for (const auto& s : specs) stride *= s.subsample;
  {
    std::size_t n = x.shape[0];
    for (const auto& s : specs) {
      if (n % s.subsample != 0) {
        throw Error("shape_mismatch", "grid size must be divisible by every subsampling factor");
      }
      n /= s.subsample;
    }
  }
  const GroupSignal gx = extend(x, rotations);
  const GroupModel model =
      fit_group_model(gx, specs, anchors, AnchorMethod::spherical_kmeans, seed);
  const GroupSignal phix = group_forward(model, gx);
  const Signal pooled_x = global_rotation_pool(phix);

  GroupReport rep;
  rep.rotations = rotations;
  rep.grid = x.shape;
  const std::vector<long> shift{long(stride), 2 * long(stride)};
  const std::vector<long> out_shift{1, 2};
  for (long theta = 0; theta < long(rotations); ++theta) {
    rep.exact = rep.exact && exact_rotation(theta, rotations);
    const GroupSignal phiy = group_forward(model, group_action({shift, theta}, gx));
    const GroupSignal expect = group_action({out_shift, theta}, phix);
    for (std::size_t eta = 0; eta < rotations; ++eta) {
      for (std::size_t i = 0; i < expect.slices[eta].values.size(); ++i) {
        rep.equivariance_max_err =
            std::max(rep.equivariance_max_err,
                     std::abs(phiy.slices[eta].values[i] - expect.slices[eta].values[i]));
      }
    }
    const Signal pooled_y = global_rotation_pool(phiy);
    const Signal aligned = rotate_translate(pooled_x, out_shift, theta, rotations);
    for (std::size_t i = 0; i < aligned.values.size(); ++i) {
      rep.invariance_max_err =
          std::max(rep.invariance_max_err, std::abs(pooled_y.values[i] - aligned.values[i]));
    }
    const std::size_t p = pooled_x.channels, n = pooled_x.positions();
    for (std::size_t c = 0; c < p; ++c) {
      double mx = 0.0, my = 0.0;
      for (std::size_t u = 0; u < n; ++u) {
        mx += pooled_x.at(u, c);
        my += pooled_y.at(u, c);
      }
      rep.global_descriptor_err =
          std::max(rep.global_descriptor_err, std::abs(mx - my) / double(n));
    }
  }
  return rep;
}

}  // namespace ckn
