#include "ckn/stability.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "ckn/engine.hpp"
#include "ckn/error.hpp"
#include "ckn/pooling.hpp"

namespace ckn {

std::vector<Signal> synthetic_corpus(std::size_t count, std::uint64_t seed, std::size_t size) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double lo = 0.2 * double(size), hi = 0.8 * double(size);
  std::vector<Signal> out;
  out.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    std::vector<double> img(size * size, 0.0);
    const int strokes = 2 + static_cast<int>(rng() % 2);
    for (int s = 0; s < strokes; ++s) {
      // Quadratic Bezier curve through three random control points.
      double p[3][2];
      for (auto& q : p) {
        q[0] = lo + (hi - lo) * unit(rng);
        q[1] = lo + (hi - lo) * unit(rng);
      }
      const double width = 0.9 + 0.5 * unit(rng);
      const int steps = 80;
      for (int t = 0; t <= steps; ++t) {
        const double a = double(t) / steps, b = 1.0 - a;
        const double cy = b * b * p[0][0] + 2 * a * b * p[1][0] + a * a * p[2][0];
        const double cx = b * b * p[0][1] + 2 * a * b * p[1][1] + a * a * p[2][1];
        const long r0 = std::lround(cy), c0 = std::lround(cx);
        for (long r = r0 - 4; r <= r0 + 4; ++r) {
          for (long c = c0 - 4; c <= c0 + 4; ++c) {
            if (r < 0 || c < 0 || r >= long(size) || c >= long(size)) continue;
            const double d2 = (r - cy) * (r - cy) + (c - cx) * (c - cx);
            double& v = img[r * size + c];
            v = std::max(v, std::exp(-d2 / (2.0 * width * width)));
          }
        }
      }
    }
    out.push_back(make_signal({size, size}, 1, std::move(img), Boundary::zero));
  }
  return out;
}

std::vector<long> direction_shift(std::size_t i, long t, std::size_t dims) {
  if (dims == 1) return {(i % 2 == 0) ? t : -t};
  static const int dir[8][2] = {{1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1}};
  return {dir[i % 8][0] * t, dir[i % 8][1] * t};
}

std::vector<Signal> transformation_set(const Signal& x, double alpha, bool translate,
                                       std::uint64_t seed, const DeformationSettings& settings) {
  std::vector<Signal> out;
  out.reserve(settings.set_size);
  std::mt19937_64 rng(seed ^ 0x5bd1e995ULL);
  for (std::size_t i = 0; i < settings.set_size; ++i) {
    const auto tau = random_smooth_field(x.shape, settings.smoothing_scale,
                                         settings.base_grad_norm, seed * 1000003ULL + i);
    Signal y = apply_deformation(x, tau, alpha);
    const std::size_t dir = static_cast<std::size_t>(rng() % 8);
    if (translate) {
      const auto c = direction_shift(dir, settings.translation, x.dims());
      y = apply_translation(y, c);
    }
    out.push_back(std::move(y));
  }
  return out;
}

namespace {

std::vector<double> relative_distances(const Signal& x_ref, const std::vector<Signal>& set,
                                       const ArchitectureSpec& arch, const CknModel* model) {
  std::vector<double> d;
  d.reserve(set.size());
  if (model) {
    const Signal fx = forward(*model, x_ref);
    const double nx = feature_inner(fx, fx);
    if (!(nx > 0.0)) throw Error("degenerate", "reference representation has zero norm");
    for (const auto& y : set) {
      const Signal fy = forward(*model, y);
      double s = 0.0;
      for (std::size_t i = 0; i < fx.values.size(); ++i) {
        const double diff = fx.values[i] - fy.values[i];
        s += diff * diff;
      }
      d.push_back(std::sqrt(s / nx));
    }
    return d;
  }
  const auto cx = self_chain(x_ref, arch);
  if (!(cx.kernel > 0.0)) throw Error("degenerate", "K(x_ref, x_ref) <= 0");
  for (const auto& y : set) {
    if (y.shape != x_ref.shape) throw Error("shape_mismatch", "set signals differ in shape");
    const auto cy = self_chain(y, arch);
    const double kxy = cross_kernel(x_ref, cx, y, cy, arch);
    d.push_back(std::sqrt(std::max(0.0, cx.kernel + cy.kernel - 2.0 * kxy) / cx.kernel));
  }
  return d;
}

RelativeDistance summarize(const std::vector<double>& d) {
  RelativeDistance r;
  if (d.empty()) return r;
  for (double v : d) r.mean += v;
  r.mean /= double(d.size());
  double var = 0.0;
  for (double v : d) var += (v - r.mean) * (v - r.mean);
  r.stddev = std::sqrt(var / double(d.size()));
  return r;
}

StabilityRow make_row(const std::string& condition, double alpha, const ArchitectureSpec& arch,
                      const std::vector<double>& d, std::uint64_t seed) {
  const auto s = summarize(d);
  StabilityRow row;
  row.condition = condition;
  row.alpha = alpha;
  row.final_subsample = arch.layers.back().subsample;
  row.patch = arch.layers.front().patch.front();
  row.n_set = d.size();
  row.mean_rel_dist = s.mean;
  row.std_rel_dist = s.stddev;
  row.seed = seed;
  return row;
}

}  // namespace

RelativeDistance relative_distance(const Signal& x_ref, const std::vector<Signal>& set,
                                   const ArchitectureSpec& arch, const CknModel* model) {
  return summarize(relative_distances(x_ref, set, arch, model));
}

std::string stability_csv(const std::vector<StabilityRow>& rows) {
  std::ostringstream out;
  out.precision(12);
  out << "condition,alpha,final_subsample,patch,n_set,mean_rel_dist,std_rel_dist,seed\n";
  for (const auto& r : rows) {
    out << r.condition << ',' << r.alpha << ',' << r.final_subsample << ',' << r.patch << ','
        << r.n_set << ',' << r.mean_rel_dist << ',' << r.std_rel_dist << ',' << r.seed << '\n';
  }
  return out.str();
}

std::vector<StabilityRow> alpha_sweep(const Signal& x_ref, const std::vector<double>& alphas,
                                      const ArchitectureSpec& arch, std::uint64_t seed,
                                      const DeformationSettings& settings) {
  std::vector<StabilityRow> rows;
  for (double alpha : alphas) {
    const auto set = transformation_set(x_ref, alpha, false, seed, settings);
    rows.push_back(make_row("deformation", alpha, arch,
                            relative_distances(x_ref, set, arch, nullptr), seed));
  }
  return rows;
}

std::vector<StabilityRow> pooling_sweep(const Signal& x_ref, const ArchitectureSpec& base,
                                        const std::vector<std::size_t>& final_subsamples,
                                        double alpha, std::uint64_t seed,
                                        const DeformationSettings& settings) {
  check_architecture(base);
  const auto deformed = transformation_set(x_ref, alpha, false, seed, settings);
  const auto translated = transformation_set(x_ref, alpha, true, seed, settings);
  std::vector<StabilityRow> rows;
  for (std::size_t s : final_subsamples) {
    ArchitectureSpec arch = base;
    arch.layers.back().subsample = s;
    arch.layers.back().pooling_sigma = double(s) / std::sqrt(2.0);
    const auto dd = relative_distances(x_ref, deformed, arch, nullptr);
    const auto dt = relative_distances(x_ref, translated, arch, nullptr);
    std::vector<double> gap(dd.size());
    for (std::size_t i = 0; i < dd.size(); ++i) gap[i] = dt[i] - dd[i];
    rows.push_back(make_row("deformation", alpha, arch, dd, seed));
    rows.push_back(make_row("deformation+translation", alpha, arch, dt, seed));
    rows.push_back(make_row("gap", alpha, arch, gap, seed));
  }
  return rows;
}

std::vector<StabilityRow> patch_sweep(const Signal& x_ref, const ArchitectureSpec& base,
                                      const std::vector<std::size_t>& patch_sizes,
                                      double alpha, std::uint64_t seed,
                                      const DeformationSettings& settings) {
  check_architecture(base);
  const auto deformed = transformation_set(x_ref, alpha, false, seed, settings);
  const auto translated = transformation_set(x_ref, alpha, true, seed, settings);
  std::vector<StabilityRow> rows;
  for (std::size_t e : patch_sizes) {
    ArchitectureSpec arch = base;
    for (auto& layer : arch.layers) layer.patch.assign(x_ref.dims(), e);
    rows.push_back(make_row("deformation", alpha, arch,
                            relative_distances(x_ref, deformed, arch, nullptr), seed));
    rows.push_back(make_row("deformation+translation", alpha, arch,
                            relative_distances(x_ref, translated, arch, nullptr), seed));
  }
  return rows;
}

double translation_constant(std::size_t dims) {
  // ||h'||_1 = 2 h(0) = sqrt(2/pi) in 1D; int |grad h| = sqrt(pi/2) in 2D.
  if (dims == 1) return 2.0 * std::sqrt(2.0 / std::numbers::pi);
  if (dims == 2) return 4.0 * std::sqrt(std::numbers::pi / 2.0);
  throw Error("invalid_argument", "translation constant needs d = 1 or 2");
}

std::vector<TranslationCheck> translation_bound_check(const Signal& x, double sigma,
                                                      const std::vector<std::vector<long>>& shifts) {
  if (!(sigma > 0.0)) throw Error("invalid_argument", "sigma must be > 0");
  Signal xc = x;
  xc.boundary = Boundary::circular;
  const double norm = std::sqrt(xc.squared_norm());
  if (!(norm > 0.0)) throw Error("degenerate", "zero input signal");
  const Signal ax = pool_signal(xc, sigma, 1, false);
  const double c2 = translation_constant(x.dims());
  std::vector<TranslationCheck> out;
  for (const auto& c : shifts) {
    if (c.size() != x.dims()) throw Error("shape_mismatch", "shift rank differs from signal");
    const Signal shifted = apply_translation(ax, c);
    double diff = 0.0;
    for (std::size_t i = 0; i < ax.values.size(); ++i) {
      const double d = shifted.values[i] - ax.values[i];
      diff += d * d;
    }
    double len = 0.0;
    for (long v : c) len += double(v) * double(v);
    TranslationCheck t;
    t.shift = c;
    t.lhs = std::sqrt(diff) / norm;
    t.rhs = c2 / sigma * std::sqrt(len);
    t.holds = t.lhs <= t.rhs;
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace ckn
