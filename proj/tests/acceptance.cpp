// Acceptance checks 1-12. One PASS/FAIL line per criterion; the exit status is
// non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "ckn/complexity.hpp"
#include "ckn/engine.hpp"
#include "ckn/error.hpp"
#include "ckn/group.hpp"
#include "ckn/nystrom.hpp"
#include "ckn/pooling.hpp"
#include "ckn/recovery.hpp"
#include "ckn/stability.hpp"
#include "oracles.hpp"

using namespace ckn;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void run(int id, const std::string& name, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::printf("[%s] %d %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", id, name.c_str(),
              o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

LayerSpec layer(std::vector<std::size_t> patch, std::size_t s, double sigma, DotProductKernel k,
                Boundary pad) {
  LayerSpec l;
  l.patch = std::move(patch);
  l.subsample = s;
  l.pooling_sigma = sigma;
  l.kernel = k;
  l.padding = pad;
  return l;
}

Signal random_signal(std::mt19937_64& rng, std::vector<std::size_t> shape, std::size_t ch,
                     Boundary b = Boundary::zero) {
  std::normal_distribution<double> normal;
  std::size_t n = ch;
  for (auto s : shape) n *= s;
  std::vector<double> v(n);
  for (auto& x : v) x = normal(rng);
  return make_signal(std::move(shape), ch, std::move(v), b);
}

const std::vector<DotProductKernel> unit_slope_kernels{
    DotProductKernel::exponential(1.0), DotProductKernel::inverse_polynomial(),
    DotProductKernel::vovk3(), DotProductKernel::polynomial(2), DotProductKernel::arccos1()};

// ---------------------------------------------------------------------------

Outcome oracle_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(2024);
  const std::vector<DotProductKernel> kernels{DotProductKernel::exponential(1.0),
                                              DotProductKernel::inverse_polynomial(),
                                              DotProductKernel::vovk3()};
  const double sigmas[] = {0.0, 0.6, 1.0};
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 4 + rng() % 5, p = 1 + rng() % 2;
    const auto x = oracle::random_signal(rng, n, p);
    const auto y = oracle::random_signal(rng, n, p);
    const bool circular = rng() % 2;
    std::vector<oracle::Layer1D> ol(2);
    for (auto& l : ol) {
      l.patch = 1 + rng() % 3;
      l.subsample = 1 + rng() % 2;
      l.sigma = sigmas[rng() % 3];
      l.kernel = kernels[rng() % 3];
      l.circular = circular;
    }
    const bool norm = rng() % 2;
    ArchitectureSpec arch;
    arch.subsample_norm = norm;
    for (const auto& l : ol) {
      arch.layers.push_back(layer({l.patch}, l.subsample, l.sigma, l.kernel,
                                  circular ? Boundary::circular : Boundary::zero));
    }
    const Boundary b = circular ? Boundary::circular : Boundary::zero;
    const double got = full_kernel(oracle::to_signal(x, b), oracle::to_signal(y, b), arch).kxy;
    const double want = oracle::explicit_kernel_1d(x, y, ol, norm, 30);
    worst = std::max(worst, std::abs(got - want) / std::abs(want));
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-8 && secs < 60.0,
          fmt("50 pairs, max rel err %.3e (tol 1e-8), %.1fs (limit 60s)", worst, secs)};
}

Outcome kernel_properties() {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  auto kernels = kernel_zoo();
  kernels.push_back(DotProductKernel::exponential(1.0 / (0.65 * 0.65)));
  long expansions = 0, below = 0, pairs = 0;
  for (const auto& k : kernels) {
    const double rho2 = std::pow(std::max(1.0, std::sqrt(kappa_derivative(k, 1.0))), 2);
    const bool unit = std::abs(kappa_derivative(k, 1.0) - 1.0) < 1e-12;
    for (int t = 0; t < 10000; ++t) {
      const std::size_t d = 1 + rng() % 8;
      std::vector<double> a(d), b(d);
      for (auto& v : a) v = normal(rng);
      for (auto& v : b) v = normal(rng);
      double lin = 0.0, dist = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        lin += a[i] * b[i];
        dist += (a[i] - b[i]) * (a[i] - b[i]);
      }
      const double na = std::sqrt(oracle::dot(a, a)), nb = std::sqrt(oracle::dot(b, b));
      const double kab = homogeneous_eval(k, a, b);
      if (na * na + nb * nb - 2.0 * kab > rho2 * dist + 1e-9) ++expansions;
      if (unit && kab < lin - 1e-9) ++below;
      ++pairs;
    }
  }
  return {expansions == 0 && below == 0,
          fmt("%ld pairs over %zu kernels: %ld expansion violations, %ld linear-bound violations (tol 1e-9)",
              pairs, kernels.size(), expansions, below)};
}

Outcome psd() {
  std::mt19937_64 rng(11);
  ArchitectureSpec arch;
  arch.layers = {layer({3}, 2, 1.0, DotProductKernel::exponential(1.0), Boundary::zero),
                 layer({3}, 1, 0.8, DotProductKernel::inverse_polynomial(), Boundary::zero)};
  ArchitectureSpec arch2 = reference_architecture(2);
  double worst = std::numeric_limits<double>::infinity();  // min eigenvalue / trace
  for (int batch = 0; batch < 10; ++batch) {
    std::vector<Signal> xs;
    for (int i = 0; i < 5; ++i) {
      xs.push_back(batch % 2 ? random_signal(rng, {9, 9}, 1) : random_signal(rng, {12}, 2));
    }
    const Matrix km = kernel_matrix(xs, batch % 2 ? arch2 : arch);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(km)};
    worst = std::min(worst, es.eigenvalues().minCoeff() / km.trace());
  }
  return {worst >= -1e-8, fmt("10 batches of 5, min eig/trace %.3e (tol -1e-8)", worst)};
}

Outcome norm_preservation() {
  std::mt19937_64 rng(13);
  int violations = 0;
  double worst = 1e300;
  int sub_violations = 0;
  for (int t = 0; t < 20; ++t) {
    const bool two_d = t % 2;
    const auto x = two_d ? random_signal(rng, {7, 7}, 2, Boundary::circular)
                         : random_signal(rng, {14}, 2, Boundary::circular);
    ArchitectureSpec arch;
    for (int l = 0; l < 3; ++l) {
      const std::size_t e = 1 + rng() % 3;
      arch.layers.push_back(layer({e}, 1, 0.5 * double(rng() % 4),
                                  unit_slope_kernels[rng() % unit_slope_kernels.size()],
                                  Boundary::circular));
    }
    const double kxx = full_kernel(x, x, arch).kxx;
    const double lin = cascade_pool(x, arch).squared_norm();
    worst = std::min(worst, kxx - lin);
    if (kxx < lin - 1e-9) ++violations;

    // Same chain with subsampling at the last layer, reported only.
    ArchitectureSpec sub = arch;
    sub.layers.back().subsample = 2;
    if (full_kernel(x, x, sub).kxx < cascade_pool(x, sub).squared_norm() - 1e-9) ++sub_violations;
  }
  return {violations == 0,
          fmt("20 signals, 3 layers, circular stride 1: %d violations, min kxx-|Ax|^2 = %.3e "
              "(tol -1e-9); with final stride 2: %d violations (not gated)",
              violations, worst, sub_violations)};
}

Outcome homogeneity() {
  std::mt19937_64 rng(17);
  double worst = 0.0;
  for (int t = 0; t < 5; ++t) {
    const auto x = random_signal(rng, {8, 8}, 1);
    const auto y = random_signal(rng, {8, 8}, 1);
    const auto arch = reference_architecture(2);
    const double base = full_kernel(x, y, arch).kxy;
    for (double lam : {0.0, 0.5, 2.0}) {
      Signal sx = x;
      for (auto& v : sx.values) v *= lam;
      const double got = full_kernel(sx, y, arch).kxy;
      worst = std::max(worst, std::abs(got - lam * base) / std::abs(base));
    }
  }
  return {worst <= 1e-12, fmt("lambda in {0, 0.5, 2}, max rel err %.3e (tol 1e-12)", worst)};
}

Outcome translation_equivariance() {
  std::mt19937_64 rng(19);
  double worst = 0.0;
  for (int t = 0; t < 5; ++t) {
    const bool two_d = t % 2;
    const auto x = two_d ? random_signal(rng, {8, 7}, 2, Boundary::circular)
                         : random_signal(rng, {16}, 1, Boundary::circular);
    const auto y = two_d ? random_signal(rng, {8, 7}, 2, Boundary::circular)
                         : random_signal(rng, {16}, 1, Boundary::circular);
    ArchitectureSpec arch;
    arch.layers = {layer({3}, 1, 1.0, DotProductKernel::exponential(2.0), Boundary::circular),
                   layer({2}, 1, 1.5, DotProductKernel::arccos1(), Boundary::circular)};
    const auto base = full_kernel(x, y, arch);
    const std::vector<long> c = two_d ? std::vector<long>{3, -2} : std::vector<long>{5};
    const auto moved = full_kernel(apply_translation(x, c), apply_translation(y, c), arch);
    worst = std::max({worst, std::abs(moved.kxy - base.kxy) / std::abs(base.kxy),
                      std::abs(moved.kxx - base.kxx) / base.kxx,
                      std::abs(moved.kyy - base.kyy) / base.kyy});
  }
  return {worst <= 1e-10, fmt("max rel change %.3e (tol 1e-10)", worst)};
}

Outcome translation_bound() {
  int violations = 0, checks = 0;
  double max_ratio = 0.0;
  for (int t = 0; t < 10; ++t) {
    // Smooth random 1D signal: white noise through a Gaussian of scale 3.
    std::mt19937_64 rng(100 + t);
    std::normal_distribution<double> normal;
    const std::size_t n = 256;
    std::vector<double> w(n);
    for (auto& v : w) v = normal(rng);
    const auto s = pool_signal(make_signal({n}, 1, w, Boundary::circular), 3.0, 1, false);
    for (double sigma : {1.0, 2.0, 4.0, 8.0}) {
      std::vector<std::vector<long>> shifts;
      for (long c = 1; c <= long(sigma); ++c) {
        shifts.push_back({c});
        shifts.push_back({-c});
      }
      for (const auto& r : translation_bound_check(s, sigma, shifts)) {
        ++checks;
        if (!r.holds) ++violations;
        max_ratio = std::max(max_ratio, r.lhs / r.rhs);
      }
    }
  }
  return {violations == 0,
          fmt("%d checks, %d violations, max lhs/rhs %.3f, C2 = %.6f", checks, violations,
              max_ratio, translation_constant(1))};
}

Outcome stability_orderings() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto arch = reference_architecture(2);
  const std::vector<double> alphas{0.01, 0.03, 0.1, 0.3, 1.0, 3.0};
  const std::vector<std::size_t> subs{1, 3, 5};
  const std::vector<std::size_t> patches{3, 5, 7};
  const int seeds = 5;
  std::vector<std::vector<double>> a_vals(alphas.size()), gap_vals(subs.size()),
      p_vals(patches.size()), pt_vals(patches.size());
  const auto corpus = synthetic_corpus(seeds, 31);
  for (int sd = 0; sd < seeds; ++sd) {
    const Signal& x = corpus[sd];
    const auto a = alpha_sweep(x, alphas, arch, sd);
    for (std::size_t i = 0; i < alphas.size(); ++i) a_vals[i].push_back(a[i].mean_rel_dist);
    const auto p = pooling_sweep(x, arch, subs, 1.0, sd);
    for (std::size_t i = 0; i < subs.size(); ++i) gap_vals[i].push_back(p[3 * i + 2].mean_rel_dist);
    const auto q = patch_sweep(x, arch, patches, 1.0, sd);
    for (std::size_t i = 0; i < patches.size(); ++i) {
      p_vals[i].push_back(q[2 * i].mean_rel_dist);
      pt_vals[i].push_back(q[2 * i + 1].mean_rel_dist);
    }
  }
  std::vector<double> am, gm, pm, ptm;
  for (auto& v : a_vals) am.push_back(median(v));
  for (auto& v : gap_vals) gm.push_back(median(v));
  for (auto& v : p_vals) pm.push_back(median(v));
  for (auto& v : pt_vals) ptm.push_back(median(v));
  bool a_ok = true, g_ok = true, p_ok = true, pt_ok = true;
  for (std::size_t i = 1; i < am.size(); ++i) a_ok = a_ok && am[i] > am[i - 1];
  for (std::size_t i = 1; i < gm.size(); ++i) g_ok = g_ok && gm[i] < gm[i - 1];
  for (std::size_t i = 1; i < pm.size(); ++i) p_ok = p_ok && pm[i] >= pm[i - 1];
  for (std::size_t i = 1; i < ptm.size(); ++i) pt_ok = pt_ok && ptm[i] >= ptm[i - 1];
  const double secs = seconds_since(t0);
  std::string d = fmt("(a) alpha medians %.4f %.4f %.4f %.4f %.4f %.4f %s; ", am[0], am[1], am[2],
                      am[3], am[4], am[5], a_ok ? "increasing" : "NOT increasing");
  d += fmt("(b) gap medians s=1,3,5: %.4f %.4f %.4f %s; ", gm[0], gm[1], gm[2],
           g_ok ? "decreasing" : "NOT decreasing");
  d += fmt("(c) patch 3,5,7 deformation: %.4f %.4f %.4f %s (with translation: %.4f %.4f %.4f %s); ",
           pm[0], pm[1], pm[2], p_ok ? "nondecreasing" : "NOT nondecreasing", ptm[0], ptm[1],
           ptm[2], pt_ok ? "nondecreasing" : "not nondecreasing");
  d += fmt("%.0fs (limit 600s)", secs);
  return {a_ok && g_ok && p_ok && secs < 600.0, d};
}

Outcome nystrom() {
  std::mt19937_64 rng(23);
  ArchitectureSpec arch;
  arch.layers = {layer({3, 3}, 1, 1.0, DotProductKernel::exponential(1.0), Boundary::zero),
                 layer({3, 3}, 2, 1.0, DotProductKernel::exponential(1.0), Boundary::zero)};
  const auto x = random_signal(rng, {10, 10}, 1);
  const auto y = random_signal(rng, {10, 10}, 1);

  FitOptions all;
  all.anchors = {0};
  all.method = AnchorMethod::uniform;
  const auto exact_model = fit_model(arch, {x, y}, all);
  const double exact_err =
      std::max(approx_error(exact_model, x, y, arch), approx_error(exact_model, x, x, arch));

  const std::vector<std::size_t> ps{4, 16, 64};
  std::vector<double> med;
  for (std::size_t p : ps) {
    std::vector<double> errs;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      FitOptions opt;
      opt.anchors = {p};
      opt.seed = seed;
      errs.push_back(approx_error(fit_model(arch, {x, y}, opt), x, y, arch));
    }
    med.push_back(median(errs));
  }
  const bool mono = med[1] <= med[0] && med[2] <= med[1];
  return {exact_err <= 1e-6 && mono,
          fmt("all-patch anchors err %.3e (tol 1e-6); median err p=4,16,64: %.3e %.3e %.3e %s",
              exact_err, med[0], med[1], med[2], mono ? "nonincreasing" : "NOT nonincreasing")};
}

Outcome recovery() {
  double worst = 0.0;
  int cases = 0;
  bool rejected = true;
  std::mt19937_64 rng(29);
  std::normal_distribution<double> normal;
  for (std::size_t len : {16, 32, 64}) {
    for (double sigma : {0.5, 1.0, 2.0}) {
      const auto h = gaussian_taps(sigma);
      for (std::size_t s = 1; s <= 4; ++s) {
        std::vector<double> v(len * 2);
        for (auto& e : v) e = normal(rng);
        const auto sig = make_signal({len}, 2, v, Boundary::circular);
        double inf = 0.0;
        for (double e : v) inf = std::max(inf, std::abs(e));
        for (std::size_t e = s; e <= 4; ++e) {
          const auto r = recover(measure(sig, h, s, e), h);
          double err = 0.0;
          for (std::size_t i = 0; i < v.size(); ++i) err = std::max(err, std::abs(r.signal.values[i] - v[i]));
          worst = std::max(worst, err / inf);
          ++cases;
        }
        for (std::size_t e = 1; e < s; ++e) {
          try {
            measure(sig, h, s, e);
            rejected = false;
          } catch (const Error& ex) {
            rejected = rejected && ex.code() == "undersampled";
          }
        }
      }
    }
  }
  return {worst <= 1e-8 && rejected,
          fmt("%d cases, max err/|s|inf %.3e (tol 1e-8); undersampled rejected: %s", cases, worst,
              rejected ? "yes" : "NO")};
}

Outcome group() {
  GroupLayerSpec a;
  a.kernel = DotProductKernel::exponential(1.0 / (0.65 * 0.65));
  a.pooling_sigma = std::sqrt(2.0);
  a.subsample = 2;
  GroupLayerSpec b = a;
  b.pooling_sigma = 1.0;
  const auto x = synthetic_corpus(1, 5, 16)[0];
  const auto rep = group_test(x, 4, {a, b}, 16, 1);

  // Exact-Gram backend on a small grid.
  std::mt19937_64 rng(31);
  const auto small = random_signal(rng, {8, 8}, 1, Boundary::circular);
  const auto gx = extend(small, 4);
  double exact_err = 0.0;
  for (long theta = 0; theta < 4; ++theta) {
    const GroupElement g{{4, 4}, theta};
    const auto grams = group_exact_grams(gx, group_action(g, gx), {a, b});
    const double d = exact_aligned_pool_distance(grams, g, 4);
    exact_err = std::max(exact_err, d * d / grams.gxx.trace());
  }
  const bool ok = rep.exact && rep.equivariance_max_err <= 1e-12 && rep.invariance_max_err <= 1e-10 &&
                  exact_err <= 1e-14;
  return {ok, fmt("C4 equivariance err %.3e (tol 1e-12); rotation-pooled invariance err %.3e "
                  "(aligned), global descriptor err %.3e, exact-Gram relative d^2 %.3e (tol 1e-14)",
                  rep.equivariance_max_err, rep.invariance_max_err, rep.global_descriptor_err,
                  exact_err)};
}

Outcome complexity() {
  std::string d;
  bool ok = true;

  // kappa_match: C^2(l2) = kappa(l2).
  double km_excess = 0.0;
  const std::vector<DotProductKernel> ks{DotProductKernel::exponential(1.0),
                                         DotProductKernel::inverse_polynomial(),
                                         DotProductKernel::vovk3(), DotProductKernel::polynomial(3)};
  for (const auto& k : ks) {
    for (double l2 : {0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0}) {
      if (k.variant == KernelVariant::inverse_polynomial && l2 >= 1.0) continue;
      const auto v = c_sigma_sq(ActivationSpec::kappa_match(k), k, l2);
      const double want = kappa_eval(k, l2);
      km_excess = std::max(km_excess, std::abs(v.value - want) - v.tail_bound - 1e-13 * want);
    }
  }
  ok = ok && km_excess <= 0.0;
  d += fmt("kappa_match excess over tail %.2e; ", std::max(0.0, km_excess));

  // Linear kernel and identity activation.
  std::mt19937_64 rng(37);
  std::normal_distribution<double> normal;
  auto random_bank = [&](std::size_t po, std::size_t pi, std::size_t e) {
    FilterBank f{po, pi, e, std::vector<double>(po * pi * e)};
    for (auto& v : f.data) v = normal(rng);
    return f;
  };
  auto slice_spectral_sq = [](const FilterBank& f) {
    double s = 0.0;
    for (std::size_t v = 0; v < f.e; ++v) {
      Eigen::MatrixXd m(f.p_out, f.p_in);
      for (std::size_t i = 0; i < f.p_out; ++i)
        for (std::size_t j = 0; j < f.p_in; ++j) m(i, j) = f.at(i, j, v);
      const double top = Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0);
      s += top * top;
    }
    return s / double(f.e);
  };
  double lin_err = 0.0;
  for (int t = 0; t < 10; ++t) {
    CnnWeights w;
    w.layers = {random_bank(3, 2, 3), random_bank(4, 3, 5), random_bank(2, 4, 2)};
    w.p_n = 2;
    w.n_grid = 6;
    w.final_weights.resize(12);
    for (auto& v : w.final_weights) v = normal(rng);
    double wf = 0.0, fro = 0.0;
    for (double v : w.final_weights) wf += v * v;
    for (double v : w.layers[0].data) fro += v * v;
    fro /= double(w.layers[0].e);
    const double want = std::sqrt(wf) * std::sqrt(slice_spectral_sq(w.layers[2])) *
                        std::sqrt(slice_spectral_sq(w.layers[1])) * std::sqrt(fro);
    const double got = prop5_bound(w, ActivationSpec::identity(), DotProductKernel::linear());
    lin_err = std::max(lin_err, std::abs(got - want) / want);

    // Scale into the unit-norm regime: |W_1|_F <= 1, |W_k|_2 <= 1, |w_{n+1}| <= 1.
    auto scale_to = [](FilterBank& f, double norm_sq) {
      for (auto& v : f.data) v /= std::sqrt(norm_sq) * 1.01;
    };
    scale_to(w.layers[0], fro);
    scale_to(w.layers[1], slice_spectral_sq(w.layers[1]));
    scale_to(w.layers[2], slice_spectral_sq(w.layers[2]));
    for (auto& v : w.final_weights) v /= std::sqrt(wf);
    const auto k = DotProductKernel::exponential(1.0);
    const double bound = prop5_bound(w, ActivationSpec::kappa_match(k), k);
    if (!(bound <= 1.0)) {
      ok = false;
      d += fmt("unit-norm stack bound %.6f > 1; ", bound);
    }
  }
  ok = ok && lin_err <= 1e-10;
  d += fmt("linear/identity prop5 rel err %.2e (tol 1e-10); unit-norm stacks <= 1; ", lin_err);

  double svd_err = 0.0;
  for (int t = 0; t < 5; ++t) {
    const auto f = random_bank(64, 64, 1);
    Eigen::MatrixXd m(64, 64);
    for (int i = 0; i < 64; ++i)
      for (int j = 0; j < 64; ++j) m(i, j) = f.at(i, j, 0);
    const double want = Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0);
    svd_err = std::max(svd_err, std::abs(operator_spectral_norm(f) - want));
  }
  ok = ok && svd_err <= 1e-8;
  d += fmt("64x64 power iteration vs SVD %.2e (tol 1e-8); ", svd_err);

  const double rad = rademacher_margin_bound(1.0, std::vector<double>(100, 1.0), 1.0, 0.5, 0.0).rademacher;
  ok = ok && std::abs(rad - 0.1) <= 1e-15;
  d += fmt("rademacher %.17g (want 0.1)", rad);
  return {ok, d};
}

}  // namespace

int main() {
  run(1, "oracle equivalence", oracle_equivalence);
  run(2, "kernel property suite", kernel_properties);
  run(3, "kernel matrix PSD", psd);
  run(4, "norm preservation", norm_preservation);
  run(5, "homogeneity", homogeneity);
  run(6, "translation equivariance", translation_equivariance);
  run(7, "translation bound", translation_bound);
  run(8, "deformation stability orderings", stability_orderings);
  run(9, "nystrom exactness and anchor monotonicity", nystrom);
  run(10, "recovery round trip", recovery);
  run(11, "group equivariance and invariance", group);
  run(12, "complexity calculators", complexity);
  std::printf("%d of 12 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
