// Command-line front end for the ckn library.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ckn/architecture.hpp"
#include "ckn/complexity.hpp"
#include "ckn/engine.hpp"
#include "ckn/error.hpp"
#include "ckn/group.hpp"
#include "ckn/kernels.hpp"
#include "ckn/nystrom.hpp"
#include "ckn/parallel.hpp"
#include "ckn/pooling.hpp"
#include "ckn/recovery.hpp"
#include "ckn/signal.hpp"
#include "ckn/stability.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void print_error(const std::string& code, const std::string& message) {
  std::cerr << json{{"code", code}, {"message", message}}.dump() << std::endl;
}

ckn::ArchitectureSpec arch_or_reference(const std::string& path, std::size_t dims) {
  return path.empty() ? ckn::reference_architecture(dims) : ckn::load_architecture(path);
}

// A single file (PGM, CSV, IDX) or a directory of PGM/CSV files in name order.
std::vector<ckn::Signal> load_data(const std::string& path) {
  if (fs::is_directory(path)) {
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(path)) {
      const auto ext = entry.path().extension().string();
      if (entry.is_regular_file() && (ext == ".pgm" || ext == ".csv")) {
        files.push_back(entry.path().string());
      }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw ckn::Error("io_error", "no .pgm or .csv files in " + path);
    std::vector<ckn::Signal> out;
    for (const auto& f : files) out.push_back(ckn::load_signal(f, ckn::format_from_path(f)));
    return out;
  }
  const auto format = ckn::format_from_path(path);
  if (format == ckn::SignalFormat::idx) return ckn::load_idx(path);
  return {ckn::load_signal(path, format)};
}

ckn::Signal load_one(const std::string& path, std::size_t index) {
  const auto all = load_data(path);
  if (index >= all.size()) {
    throw ckn::Error("invalid_argument", "index " + std::to_string(index) + " out of range for " +
                                             path + " (" + std::to_string(all.size()) + " signals)");
  }
  return all[index];
}

std::vector<double> parse_doubles(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ckn::Error("parse_error", "bad number '" + item + "'");
    }
  }
  return out;
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
  std::vector<std::size_t> out;
  for (double v : parse_doubles(text)) {
    if (v < 0 || v != std::floor(v)) throw ckn::Error("parse_error", "expected non-negative integers");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw ckn::Error("io_error", "cannot write " + path);
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multilayer convolutional kernels: exact evaluation, CKN approximation, "
               "stability experiments, norm bounds, recovery and group equivariance."};
  app.require_subcommand(1);
  unsigned threads = 1;
  app.add_option("--threads", threads, "Worker threads")->capture_default_str();

  // validate-kernels
  auto* validate = app.add_subcommand("validate-kernels", "Check kappa(1), kappa'(1) and b_j >= 0 for the kernel zoo");

  // kernel
  auto* kernel = app.add_subcommand("kernel", "Exact kernel between two signals");
  std::string k_arch, k_x, k_y;
  std::size_t k_xi = 0, k_yi = 0;
  double k_gauss = 0.0;
  kernel->add_option("--arch", k_arch, "Architecture JSON (default: reference 2-layer model)");
  kernel->add_option("--x", k_x, "First signal (pgm, csv, idx)")->required();
  kernel->add_option("--y", k_y, "Second signal (pgm, csv, idx)")->required();
  kernel->add_option("--x-index", k_xi, "Image index inside an IDX file")->capture_default_str();
  kernel->add_option("--y-index", k_yi, "Image index inside an IDX file")->capture_default_str();
  kernel->add_option("--gaussian-alpha", k_gauss,
                     "Also print exp(-alpha/2 distance^2) when > 0")->capture_default_str();

  // stability
  auto* stab = app.add_subcommand("stability", "Relative-distance sweeps (alpha, pooling, patch)");
  std::string s_mode, s_arch, s_out, s_data;
  std::uint64_t s_seed = 0;
  std::size_t s_index = 0, s_set = 20;
  std::string s_alphas = "0.01,0.03,0.1,0.3,1,3", s_subs = "1,3,5", s_patches = "3,5,7";
  double s_alpha = 1.0, s_scale = 4.0, s_grad = 0.1;
  long s_shift = 2;
  stab->add_option("mode", s_mode, "alpha | pooling | patch")
      ->required()
      ->check(CLI::IsMember({"alpha", "pooling", "patch"}));
  stab->add_option("--arch", s_arch, "Architecture JSON (default: reference 2-layer model)");
  stab->add_option("--out", s_out, "Output CSV (default: stdout)");
  stab->add_option("--seed", s_seed, "Seed for corpus and deformations")->capture_default_str();
  stab->add_option("--data", s_data, "Reference image source (pgm, idx, or directory); synthetic corpus when empty");
  stab->add_option("--index", s_index, "Reference image index")->capture_default_str();
  stab->add_option("--set-size", s_set, "Transformations per set")->capture_default_str();
  stab->add_option("--alphas", s_alphas, "alpha values for the alpha sweep")->capture_default_str();
  stab->add_option("--subsamples", s_subs, "Final-layer subsampling factors for the pooling sweep")->capture_default_str();
  stab->add_option("--patches", s_patches, "Patch sizes for the patch sweep")->capture_default_str();
  stab->add_option("--alpha", s_alpha, "alpha for the pooling and patch sweeps")->capture_default_str();
  stab->add_option("--smoothing", s_scale, "Smoothing scale of the random deformation fields")->capture_default_str();
  stab->add_option("--grad-norm", s_grad, "||grad tau||_inf of the fields at alpha = 1")->capture_default_str();
  stab->add_option("--shift", s_shift, "Translation length in pixels")->capture_default_str();

  // ckn-fit
  auto* fit = app.add_subcommand("ckn-fit", "Learn a Nystrom (CKN) model");
  std::string f_arch, f_data, f_out, f_anchors = "64", f_method = "kmeans";
  std::uint64_t f_seed = 0;
  double f_eps = 1e-8;
  std::size_t f_max = 200000;
  fit->add_option("--arch", f_arch, "Architecture JSON (default: reference 2-layer model)");
  fit->add_option("--data", f_data, "Training signals (file or directory)")->required();
  fit->add_option("--anchors", f_anchors, "Anchors per layer (one value or comma list; 0 = all distinct patches)")->capture_default_str();
  fit->add_option("--method", f_method, "uniform | kmeans")->capture_default_str();
  fit->add_option("--seed", f_seed, "Seed")->capture_default_str();
  fit->add_option("--eps", f_eps, "Relative eigenvalue floor of the whitening")->capture_default_str();
  fit->add_option("--max-patches", f_max, "Patches collected per layer")->capture_default_str();
  fit->add_option("--out", f_out, "Model file (a .json mirror is written next to it)")->required();

  // ckn-apply
  auto* apply = app.add_subcommand("ckn-apply", "Compute CKN features of a signal");
  std::string a_model, a_x, a_out;
  std::size_t a_index = 0;
  apply->add_option("--model", a_model, "Model file")->required();
  apply->add_option("--x", a_x, "Input signal")->required();
  apply->add_option("--index", a_index, "Image index inside an IDX file")->capture_default_str();
  apply->add_option("--out", a_out, "Output CSV (default: stdout)");

  // ckn-error
  auto* cerr_cmd = app.add_subcommand("ckn-error", "Relative error of the CKN kernel against the exact kernel");
  std::string e_model, e_arch, e_x, e_y;
  cerr_cmd->add_option("--model", e_model, "Model file")->required();
  cerr_cmd->add_option("--arch", e_arch, "Architecture JSON (default: the model's own layers)");
  cerr_cmd->add_option("--x", e_x, "First signal")->required();
  cerr_cmd->add_option("--y", e_y, "Second signal")->required();

  // bound
  auto* bound = app.add_subcommand("bound", "RKHS norm bounds and stability prefactor of CNN weights");
  std::string b_weights, b_kernel = "exponential:1", b_act = "kappa_match";
  double b_rho = 1.0;
  std::size_t b_terms = 128;
  bound->add_option("--weights", b_weights, "Weights file (CKNW binary or JSON)")->required();
  bound->add_option("--kernel", b_kernel, "Kernel, e.g. exponential:1, inverse_polynomial, polynomial:2")->capture_default_str();
  bound->add_option("--activation", b_act, "identity | square | exp_like | kappa_match | srelu | custom:a0,a1,...")->capture_default_str();
  bound->add_option("--rho", b_rho, "Lipschitz constant of the generic activation")->capture_default_str();
  bound->add_option("--terms", b_terms, "Series truncation J")->capture_default_str();

  // recover
  auto* rec = app.add_subcommand("recover", "Round-trip a 1D signal through subsampled measurements");
  std::string r_signal;
  double r_sigma = 1.0;
  std::size_t r_sub = 2, r_patch = 3;
  rec->add_option("--signal", r_signal, "CSV signal")->required();
  rec->add_option("--sigma", r_sigma, "Gaussian filter scale")->capture_default_str();
  rec->add_option("--sub", r_sub, "Subsampling factor")->capture_default_str();
  rec->add_option("--patch", r_patch, "Patch size (must be >= sub)")->capture_default_str();

  // group-test
  auto* grp = app.add_subcommand("group-test", "Roto-translation equivariance and invariance report");
  std::string g_x;
  std::size_t g_rot = 4, g_layers = 2, g_anchors = 16, g_sub = 1, g_patch = 3;
  double g_sigma = 1.0;
  std::string g_kernel = "exponential:1";
  std::uint64_t g_seed = 0;
  grp->add_option("--x", g_x, "Square 2D image")->required();
  grp->add_option("--rotations", g_rot, "Number of discrete rotations R")->capture_default_str();
  grp->add_option("--layers", g_layers, "Equivariant layers")->capture_default_str();
  grp->add_option("--anchors", g_anchors, "Anchors per layer")->capture_default_str();
  grp->add_option("--patch", g_patch, "Patch size")->capture_default_str();
  grp->add_option("--sigma", g_sigma, "Pooling scale")->capture_default_str();
  grp->add_option("--subsample", g_sub, "Subsampling per layer")->capture_default_str();
  grp->add_option("--kernel", g_kernel, "Kernel")->capture_default_str();
  grp->add_option("--seed", g_seed, "Seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("usage", e.what());
    return 2;
  }

  try {
    if (threads == 0) throw CLI::ValidationError("--threads", "must be positive");
    ckn::set_num_threads(threads);

    if (validate->parsed()) {
      std::cout << "kernel,kappa_at_one,derivative_at_one,min_coefficient,lipschitz,satisfies_a1\n";
      for (const auto& k : ckn::kernel_zoo()) {
        const auto r = ckn::validate(k);
        std::cout << ckn::describe(k) << ',' << num(r.kappa_at_one) << ','
                  << num(r.derivative_at_one) << ',' << num(r.min_coefficient) << ','
                  << num(r.lipschitz) << ',' << (r.satisfies_a1 ? "true" : "false") << '\n';
      }
      const auto ref = ckn::validate(ckn::DotProductKernel::exponential(1.0 / (0.65 * 0.65)));
      std::cout << ckn::describe(ref.kernel) << ',' << num(ref.kappa_at_one) << ','
                << num(ref.derivative_at_one) << ',' << num(ref.min_coefficient) << ','
                << num(ref.lipschitz) << ',' << (ref.satisfies_a1 ? "true" : "false") << '\n';
    } else if (kernel->parsed()) {
      const auto x = load_one(k_x, k_xi);
      const auto y = load_one(k_y, k_yi);
      const auto arch = arch_or_reference(k_arch, x.dims());
      const auto kv = ckn::full_kernel(x, y, arch);
      std::cout << "x_id,y_id,kxx,kyy,kxy,distance" << (k_gauss > 0 ? ",gaussian" : "") << '\n';
      std::cout << k_x << ':' << k_xi << ',' << k_y << ':' << k_yi << ',' << num(kv.kxx) << ','
                << num(kv.kyy) << ',' << num(kv.kxy) << ',' << num(kv.distance());
      if (k_gauss > 0) {
        std::cout << ',' << num(std::exp(-0.5 * k_gauss * kv.distance() * kv.distance()));
      }
      std::cout << '\n';
    } else if (stab->parsed()) {
      const ckn::Signal x = s_data.empty() ? ckn::synthetic_corpus(s_index + 1, s_seed).at(s_index)
                                           : load_one(s_data, s_index);
      const auto arch = arch_or_reference(s_arch, x.dims());
      ckn::DeformationSettings settings;
      settings.set_size = s_set;
      settings.smoothing_scale = s_scale;
      settings.base_grad_norm = s_grad;
      settings.translation = s_shift;
      std::vector<ckn::StabilityRow> rows;
      if (s_mode == "alpha") {
        rows = ckn::alpha_sweep(x, parse_doubles(s_alphas), arch, s_seed, settings);
      } else if (s_mode == "pooling") {
        rows = ckn::pooling_sweep(x, arch, parse_sizes(s_subs), s_alpha, s_seed, settings);
      } else {
        rows = ckn::patch_sweep(x, arch, parse_sizes(s_patches), s_alpha, s_seed, settings);
      }
      write_text(s_out, ckn::stability_csv(rows));
    } else if (fit->parsed()) {
      const auto data = load_data(f_data);
      const auto arch = arch_or_reference(f_arch, data.front().dims());
      ckn::FitOptions opt;
      opt.anchors = parse_sizes(f_anchors);
      opt.method = ckn::parse_anchor_method(f_method);
      opt.seed = f_seed;
      opt.eps = f_eps;
      opt.max_patches = f_max;
      const auto model = ckn::fit_model(arch, data, opt);
      ckn::save_model(model, f_out);
      json summary{{"model", f_out}, {"layers", json::array()}};
      for (const auto& l : model.layers) {
        summary["layers"].push_back({{"anchors", l.out_channels()}, {"patch_dim", l.patch_dim()}});
      }
      std::cout << summary.dump() << '\n';
    } else if (apply->parsed()) {
      const auto model = ckn::load_model(a_model);
      const auto f = ckn::forward(model, load_one(a_x, a_index));
      std::ostringstream out;
      out << "position";
      for (std::size_t c = 0; c < f.channels; ++c) out << ",c" << c;
      out << '\n';
      for (std::size_t u = 0; u < f.positions(); ++u) {
        out << u;
        for (std::size_t c = 0; c < f.channels; ++c) out << ',' << num(f.at(u, c));
        out << '\n';
      }
      write_text(a_out, out.str());
    } else if (cerr_cmd->parsed()) {
      const auto model = ckn::load_model(e_model);
      ckn::ArchitectureSpec arch;
      if (e_arch.empty()) {
        arch.subsample_norm = model.subsample_norm;
        for (const auto& l : model.layers) arch.layers.push_back(l.spec);
      } else {
        arch = ckn::load_architecture(e_arch);
      }
      const auto x = load_one(e_x, 0), y = load_one(e_y, 0);
      const auto exact = ckn::full_kernel(x, y, arch);
      const double approx = ckn::ckn_kernel(model, x, y);
      json out{{"exact_kxy", exact.kxy},
               {"ckn_kxy", approx},
               {"approx_error", ckn::approx_error(model, x, y, arch)}};
      std::cout << out.dump() << '\n';
    } else if (bound->parsed()) {
      const auto w = ckn::load_weights(b_weights);
      const auto k = ckn::parse_kernel(b_kernel);
      const auto act = ckn::parse_activation(b_act, k);
      json out{{"kernel", ckn::describe(k)},
               {"activation", act.name()},
               {"bound_prop4", ckn::prop4_bound(w, act, k, b_terms)},
               {"bound_prop5", ckn::prop5_bound(w, act, k, b_terms)},
               {"stability_prefactor", ckn::generic_stability_factor(w, b_rho)}};
      std::cout << out.dump() << '\n';
    } else if (rec->parsed()) {
      const auto s = ckn::load_signal(r_signal, ckn::SignalFormat::csv1d);
      const auto h = ckn::gaussian_taps(r_sigma);
      const auto y = ckn::measure(s, h, r_sub, r_patch);
      const auto r = ckn::recover(y, h);
      double err = 0.0, sup = 0.0;
      for (std::size_t i = 0; i < s.values.size(); ++i) {
        err = std::max(err, std::abs(r.signal.values[i] - s.values[i]));
        sup = std::max(sup, std::abs(s.values[i]));
      }
      json out{{"length", s.shape[0]},
               {"max_abs_error", err},
               {"relative_error", sup > 0 ? err / sup : 0.0},
               {"min_dft_magnitude", r.min_dft_magnitude}};
      std::cout << out.dump() << '\n';
    } else if (grp->parsed()) {
      const auto x = load_one(g_x, 0);
      ckn::GroupLayerSpec spec;
      spec.patch = {g_patch, g_patch};
      spec.kernel = ckn::parse_kernel(g_kernel);
      spec.pooling_sigma = g_sigma;
      spec.subsample = g_sub;
      const std::vector<ckn::GroupLayerSpec> specs(g_layers, spec);
      const auto rep = ckn::group_test(x, g_rot, specs, g_anchors, g_seed);
      json out{{"R", rep.rotations},
               {"grid", rep.grid},
               {"exact_rotations", rep.exact},
               {"equivariance_max_err", rep.equivariance_max_err},
               {"invariance_max_err", rep.invariance_max_err},
               {"global_descriptor_err", rep.global_descriptor_err}};
      std::cout << out.dump() << '\n';
    }
  } catch (const CLI::ValidationError& e) {
    print_error("usage", e.what());
    return 2;
  } catch (const ckn::Error& e) {
    print_error(e.code(), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return 1;
  }
  return 0;
}
