#include "ckn/nystrom.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "ckn/error.hpp"
#include "ckn/parallel.hpp"
#include "ckn/pooling.hpp"

namespace ckn {

AnchorMethod parse_anchor_method(const std::string& name) {
  if (name == "uniform") return AnchorMethod::uniform;
  if (name == "kmeans" || name == "spherical_kmeans") return AnchorMethod::spherical_kmeans;
  throw Error("invalid_argument", "unknown anchor method '" + name + "'");
}

Matrix extract_patches(const Signal& x, const LayerSpec& layer) {
  if (x.positions() == 0) throw Error("shape_underflow", "empty feature map");
  const auto patch = resolve_patch(layer.patch, x.dims());
  const auto offsets = patch_offsets(patch, layer.align);
  const std::size_t n = x.positions(), p = x.channels, e = offsets.size(), d = x.dims();
  const double scale = 1.0 / std::sqrt(double(e));
  Matrix out = Matrix::Zero(n, e * p);
  parallel_for(0, n, [&](std::size_t pos) {
    std::vector<long> idx(d);
    std::size_t rem = pos;
    for (std::size_t a = d; a-- > 0;) {
      idx[a] = static_cast<long>(rem % x.shape[a]);
      rem /= x.shape[a];
    }
    for (std::size_t o = 0; o < e; ++o) {
      long flat = 0;
      bool inside = true;
      for (std::size_t a = 0; a < d; ++a) {
        const long len = static_cast<long>(x.shape[a]);
        long j = idx[a] + offsets[o][a];
        if (layer.padding == Boundary::circular) {
          j = ((j % len) + len) % len;
        } else if (j < 0 || j >= len) {
          inside = false;
          break;
        }
        flat = flat * len + j;
      }
      if (!inside) continue;
      for (std::size_t c = 0; c < p; ++c) out(pos, o * p + c) = scale * x.at(flat, c);
    }
  });
  return out;
}

namespace {

// Unit-normalized copies of the non-zero rows.
Matrix normalized_rows(const Matrix& patches) {
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < patches.rows(); ++i) {
    if (patches.row(i).norm() > kZeroNorm) keep.push_back(i);
  }
  Matrix out(keep.size(), patches.cols());
  for (std::size_t r = 0; r < keep.size(); ++r) {
    out.row(r) = patches.row(keep[r]) / patches.row(keep[r]).norm();
  }
  return out;
}

Matrix take_rows(const Matrix& m, const std::vector<std::size_t>& rows) {
  Matrix out(rows.size(), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(r) = m.row(rows[r]);
  return out;
}

std::vector<std::size_t> draw_without_replacement(std::size_t n, std::size_t k,
                                                  std::mt19937_64& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  // Partial Fisher-Yates with an explicit modulus so the draw does not depend on
  // the standard library's distribution implementation.
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

}  // namespace

Matrix distinct_directions(const Matrix& patches) {
  const Matrix unit = normalized_rows(patches);
  std::map<std::vector<long long>, std::size_t> seen;
  std::vector<std::size_t> keep;
  for (Eigen::Index i = 0; i < unit.rows(); ++i) {
    std::vector<long long> key(unit.cols());
    for (Eigen::Index c = 0; c < unit.cols(); ++c) key[c] = std::llround(unit(i, c) * 1e10);
    if (seen.emplace(std::move(key), i).second) keep.push_back(i);
  }
  return take_rows(unit, keep);
}

Matrix sample_anchors(const Matrix& patches, std::size_t p, AnchorMethod method,
                      std::uint64_t seed, std::size_t kmeans_iterations) {
  const Matrix distinct = distinct_directions(patches);
  const std::size_t m = distinct.rows();
  if (p == 0) {
    if (m == 0) throw Error("degenerate", "no non-zero patches to use as anchors");
    return distinct;
  }
  if (m < p) {
    throw Error("degenerate", "requested " + std::to_string(p) + " anchors but only " +
                                  std::to_string(m) + " distinct non-zero patches exist");
  }
  std::mt19937_64 rng(seed);
  Matrix centers = take_rows(distinct, draw_without_replacement(m, p, rng));
  if (method == AnchorMethod::uniform) return centers;

  const Matrix points = normalized_rows(patches);
  const std::size_t n = points.rows();
  std::vector<std::size_t> assign(n);
  std::vector<double> best(n);
  for (std::size_t it = 0; it < kmeans_iterations; ++it) {
    const Matrix sims = points * centers.transpose();
    for (std::size_t i = 0; i < n; ++i) {
      Eigen::Index arg = 0;
      best[i] = sims.row(i).maxCoeff(&arg);
      assign[i] = static_cast<std::size_t>(arg);
    }
    Matrix sums = Matrix::Zero(p, points.cols());
    for (std::size_t i = 0; i < n; ++i) sums.row(assign[i]) += points.row(i);
    std::vector<bool> taken(n, false);
    for (std::size_t c = 0; c < p; ++c) {
      const double norm = sums.row(c).norm();
      if (norm > 1e-12) {
        centers.row(c) = sums.row(c) / norm;
        continue;
      }
      // Empty cluster: restart it at the point least similar to its center.
      std::size_t far = 0;
      double worst = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < n; ++i) {
        if (!taken[i] && best[i] < worst) {
          worst = best[i];
          far = i;
        }
      }
      taken[far] = true;
      best[far] = 1.0;
      centers.row(c) = points.row(far);
    }
  }
  return centers;
}

Matrix kernel_block(const Matrix& a, const Matrix& b, const DotProductKernel& k) {
  if (a.cols() != b.cols()) throw Error("shape_mismatch", "kernel_block dimension mismatch");
  const Eigen::VectorXd na = a.rowwise().norm();
  const Eigen::VectorXd nb = b.rowwise().norm();
  const Matrix g = a * b.transpose();
  Matrix out(a.rows(), b.rows());
  parallel_for(0, static_cast<std::size_t>(a.rows()), [&](std::size_t i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) out(i, j) = lift_entry(k, na[i], nb[j], g(i, j));
  });
  return out;
}

Matrix whiten(const Matrix& anchors, const DotProductKernel& k, double eps) {
  const Matrix kzz = kernel_block(anchors, anchors, k);
  if ((kzz - kzz.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
    throw Error("internal", "anchor kernel matrix is not symmetric");
  }
  const Eigen::MatrixXd kzz_dense = kzz;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(kzz_dense);
  const Eigen::VectorXd lambda = eig.eigenvalues();
  const double lmax = lambda.size() ? lambda.maxCoeff() : 0.0;
  Eigen::VectorXd inv_sqrt = Eigen::VectorXd::Zero(lambda.size());
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (lmax > 0.0 && lambda[i] > eps * lmax) inv_sqrt[i] = 1.0 / std::sqrt(lambda[i]);
  }
  const Eigen::MatrixXd& v = eig.eigenvectors();
  Matrix w = v * inv_sqrt.asDiagonal() * v.transpose();
  return 0.5 * (w + w.transpose());
}

Eigen::VectorXd project(const CknLayer& layer, std::span<const double> z) {
  if (z.size() != layer.patch_dim()) {
    throw Error("shape_mismatch", "patch of size " + std::to_string(z.size()) +
                                      " for a layer expecting " +
                                      std::to_string(layer.patch_dim()));
  }
  Eigen::VectorXd kz(layer.out_channels());
  for (std::size_t i = 0; i < layer.out_channels(); ++i) {
    kz[i] = homogeneous_eval(layer.spec.kernel,
                             {layer.anchors.row(i).data(), layer.patch_dim()}, z);
  }
  return layer.whitener * kz;
}

Signal map_layer(const CknLayer& layer, const Signal& x) {
  if (x.channels != layer.in_channels) {
    throw Error("shape_mismatch", "layer expects " + std::to_string(layer.in_channels) +
                                      " channels, got " + std::to_string(x.channels));
  }
  const Matrix patches = extract_patches(x, layer.spec);
  const Matrix psi = kernel_block(patches, layer.anchors, layer.spec.kernel) *
                     layer.whitener.transpose();
  Signal out;
  out.shape = x.shape;
  out.channels = layer.out_channels();
  out.boundary = layer.spec.padding;
  out.values.assign(psi.data(), psi.data() + psi.size());
  return out;
}

Signal forward_layer(const CknLayer& layer, const Signal& x, bool subsample_norm) {
  const Signal mapped = map_layer(layer, x);
  return apply_pooling(pooling_operator(mapped.shape, layer.spec.pooling_sigma,
                                        layer.spec.subsample, layer.spec.padding,
                                        subsample_norm),
                       mapped);
}

Signal forward(const CknModel& model, const Signal& x) {
  if (model.layers.empty()) throw Error("invalid_argument", "model has no layers");
  Signal cur = x;
  for (const auto& layer : model.layers) cur = forward_layer(layer, cur, model.subsample_norm);
  return cur;
}

CknModel fit_model(const ArchitectureSpec& arch, const std::vector<Signal>& data,
                   const FitOptions& options) {
  check_architecture(arch);
  if (data.empty()) throw Error("invalid_argument", "no training signals");
  if (options.anchors.empty() ||
      (options.anchors.size() != 1 && options.anchors.size() != arch.layers.size())) {
    throw Error("invalid_argument", "anchor counts must have 1 or one-per-layer entries");
  }
  CknModel model;
  model.subsample_norm = arch.subsample_norm;
  std::vector<Signal> current = data;
  for (std::size_t l = 0; l < arch.layers.size(); ++l) {
    CknLayer layer;
    layer.spec = arch.layers[l];
    layer.in_channels = current.front().channels;

    std::vector<Matrix> blocks;
    std::size_t rows = 0;
    for (const auto& s : current) {
      if (s.channels != layer.in_channels) {
        throw Error("shape_mismatch", "training signals have differing channel counts");
      }
      blocks.push_back(extract_patches(s, layer.spec));
      rows += blocks.back().rows();
    }
    Matrix all(rows, blocks.front().cols());
    std::size_t r = 0;
    for (const auto& b : blocks) {
      all.middleRows(r, b.rows()) = b;
      r += b.rows();
    }
    if (rows > options.max_patches) {
      std::mt19937_64 rng(options.seed ^ (0x9e3779b97f4a7c15ULL * (l + 1)));
      auto pick = draw_without_replacement(rows, options.max_patches, rng);
      std::sort(pick.begin(), pick.end());
      all = take_rows(all, pick);
    }

    const std::size_t p = options.anchors.size() == 1 ? options.anchors[0] : options.anchors[l];
    layer.anchors = sample_anchors(all, p, options.method, options.seed + l);
    layer.whitener = whiten(layer.anchors, layer.spec.kernel, options.eps);
    for (auto& s : current) s = forward_layer(layer, s, model.subsample_norm);
    model.layers.push_back(std::move(layer));
  }
  return model;
}

double feature_inner(const Signal& a, const Signal& b) {
  if (a.values.size() != b.values.size()) {
    throw Error("shape_mismatch", "feature maps have different sizes");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) s += a.values[i] * b.values[i];
  return s;
}

double ckn_kernel(const CknModel& model, const Signal& x, const Signal& y) {
  return feature_inner(forward(model, x), forward(model, y));
}

double approx_error(const CknModel& model, const Signal& x, const Signal& y,
                    const ArchitectureSpec& arch) {
  const auto exact = full_kernel(x, y, arch);
  const double approx = ckn_kernel(model, x, y);
  const double denom = std::max(exact.kxx, exact.kyy);
  if (!(denom > 0.0)) throw Error("degenerate", "both signals have zero representation");
  return std::abs(approx - exact.kxy) / denom;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr char kMagic[4] = {'C', 'K', 'N', '1'};

void put_u32(std::ostream& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::ostream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.put(static_cast<char>((bits >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(std::string bytes) : bytes_(std::move(bytes)) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(std::uint8_t(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(std::uint8_t(bytes_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return std::bit_cast<double>(v);
  }
  std::string raw(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) {
    if (pos_ + n > bytes_.size()) {
      throw Error("data_corruption", "model file truncated at byte " + std::to_string(pos_));
    }
  }
  std::string bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_model(const CknModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io_error", "cannot write " + path);
  out.write(kMagic, 4);
  put_u32(out, static_cast<std::uint32_t>(model.layers.size()));
  put_u32(out, model.subsample_norm ? 1 : 0);
  for (const auto& layer : model.layers) {
    const auto& s = layer.spec;
    put_u32(out, static_cast<std::uint32_t>(s.patch.size()));
    for (auto e : s.patch) put_u32(out, static_cast<std::uint32_t>(e));
    put_u32(out, static_cast<std::uint32_t>(s.subsample));
    put_f64(out, s.pooling_sigma);
    put_u32(out, static_cast<std::uint32_t>(s.kernel.variant));
    put_f64(out, s.kernel.param);
    put_u32(out, s.padding == Boundary::circular ? 1 : 0);
    put_u32(out, s.align == PatchAlign::causal ? 1 : 0);
    put_u32(out, static_cast<std::uint32_t>(layer.in_channels));
    put_u32(out, static_cast<std::uint32_t>(layer.anchors.rows()));
    put_u32(out, static_cast<std::uint32_t>(layer.anchors.cols()));
    for (Eigen::Index i = 0; i < layer.anchors.size(); ++i) put_f64(out, layer.anchors.data()[i]);
    for (Eigen::Index i = 0; i < layer.whitener.size(); ++i) put_f64(out, layer.whitener.data()[i]);
  }
  if (!out) throw Error("io_error", "write failed for " + path);
  out.close();

  std::ofstream side(path + ".json");
  if (!side) throw Error("io_error", "cannot write " + path + ".json");
  side << model_to_json(model) << "\n";
}

CknModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io_error", "cannot open " + path);
  Reader r(std::string(std::istreambuf_iterator<char>(in), {}));
  if (r.raw(4) != std::string(kMagic, 4)) throw Error("data_corruption", "bad model magic");
  CknModel model;
  const std::uint32_t n_layers = r.u32();
  model.subsample_norm = r.u32() != 0;
  for (std::uint32_t l = 0; l < n_layers; ++l) {
    CknLayer layer;
    auto& s = layer.spec;
    const std::uint32_t dims = r.u32();
    if (dims == 0 || dims > 2) throw Error("data_corruption", "bad patch rank in model");
    s.patch.resize(dims);
    for (auto& e : s.patch) e = r.u32();
    s.subsample = r.u32();
    s.pooling_sigma = r.f64();
    const std::uint32_t variant = r.u32();
    if (variant > static_cast<std::uint32_t>(KernelVariant::linear)) {
      throw Error("data_corruption", "unknown kernel variant in model");
    }
    s.kernel.variant = static_cast<KernelVariant>(variant);
    s.kernel.param = r.f64();
    s.padding = r.u32() ? Boundary::circular : Boundary::zero;
    s.align = r.u32() ? PatchAlign::causal : PatchAlign::centered;
    layer.in_channels = r.u32();
    const std::uint32_t p = r.u32(), d = r.u32();
    if (d != s.patch_volume() * layer.in_channels) {
      throw Error("data_corruption", "anchor dimension does not match patch and channels");
    }
    layer.anchors.resize(p, d);
    for (Eigen::Index i = 0; i < layer.anchors.size(); ++i) layer.anchors.data()[i] = r.f64();
    layer.whitener.resize(p, p);
    for (Eigen::Index i = 0; i < layer.whitener.size(); ++i) layer.whitener.data()[i] = r.f64();
    model.layers.push_back(std::move(layer));
  }
  if (!r.done()) throw Error("data_corruption", "trailing bytes in model file");
  for (std::size_t l = 1; l < model.layers.size(); ++l) {
    if (model.layers[l].in_channels != model.layers[l - 1].out_channels()) {
      throw Error("data_corruption", "layer channel counts do not chain");
    }
  }
  return model;
}

std::string model_to_json(const CknModel& model) {
  using nlohmann::json;
  json doc;
  doc["format"] = "CKN1";
  doc["subsample_norm"] = model.subsample_norm;
  doc["layers"] = json::array();
  for (const auto& layer : model.layers) {
    json jl;
    jl["patch"] = layer.spec.patch;
    jl["subsample"] = layer.spec.subsample;
    jl["pooling_sigma"] = layer.spec.pooling_sigma;
    jl["kernel"] = {{"variant", variant_name(layer.spec.kernel.variant)},
                    {"param", layer.spec.kernel.param}};
    jl["padding"] = layer.spec.padding == Boundary::zero ? "zero" : "circular";
    jl["in_channels"] = layer.in_channels;
    jl["anchors"] = json::array();
    for (Eigen::Index i = 0; i < layer.anchors.rows(); ++i) {
      jl["anchors"].push_back(std::vector<double>(layer.anchors.row(i).begin(),
                                                  layer.anchors.row(i).end()));
    }
    jl["whitener"] = json::array();
    for (Eigen::Index i = 0; i < layer.whitener.rows(); ++i) {
      jl["whitener"].push_back(std::vector<double>(layer.whitener.row(i).begin(),
                                                   layer.whitener.row(i).end()));
    }
    doc["layers"].push_back(jl);
  }
  return doc.dump(1);
}

}  // namespace ckn
