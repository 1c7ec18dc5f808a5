#include "ckn/complexity.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include <Eigen/Dense>
#include <json.hpp>

#include "ckn/error.hpp"

namespace ckn {

double ActivationSpec::coefficient(std::size_t j) const {
  switch (kind) {
    case ActivationKind::identity:
      return j == 1 ? 1.0 : 0.0;
    case ActivationKind::square:
      return j == 2 ? 1.0 : 0.0;
    case ActivationKind::exp_like:
      return j == 0 ? 0.0 : std::exp(-std::lgamma(double(j) + 1.0));
    case ActivationKind::kappa_match:
      return maclaurin_coefficient(matched, j);
    case ActivationKind::custom:
    case ActivationKind::srelu:
      return j < coeffs.size() ? coeffs[j] : 0.0;
  }
  return 0.0;
}

std::optional<std::size_t> ActivationSpec::support() const {
  switch (kind) {
    case ActivationKind::identity:
      return 1;
    case ActivationKind::square:
      return 2;
    case ActivationKind::exp_like:
      return std::nullopt;
    case ActivationKind::kappa_match:
      switch (matched.variant) {
        case KernelVariant::linear:
          return 1;
        case KernelVariant::vovk3:
          return 2;
        case KernelVariant::polynomial:
          return static_cast<std::size_t>(matched.param);
        default:
          return std::nullopt;
      }
    case ActivationKind::custom:
    case ActivationKind::srelu: {
      std::size_t last = 0;
      for (std::size_t j = 0; j < coeffs.size(); ++j) {
        if (coeffs[j] != 0.0) last = j;
      }
      return last;
    }
  }
  return std::nullopt;
}

std::string ActivationSpec::name() const {
  switch (kind) {
    case ActivationKind::identity:
      return "identity";
    case ActivationKind::square:
      return "square";
    case ActivationKind::exp_like:
      return "exp_like";
    case ActivationKind::kappa_match:
      return "kappa_match(" + describe(matched) + ")";
    case ActivationKind::custom:
      return "custom";
    case ActivationKind::srelu:
      return "srelu";
  }
  return "unknown";
}

ActivationSpec srelu_fit(const DotProductKernel& k, std::size_t degree) {
  std::vector<std::size_t> powers;
  for (std::size_t j = 0; j <= degree; ++j) {
    if (maclaurin_coefficient(k, j) > 0.0) powers.push_back(j);
  }
  if (powers.empty()) throw Error("invalid_argument", "kernel has no usable powers for srelu");
  const std::size_t samples = 401;
  Eigen::MatrixXd a(samples, powers.size());
  Eigen::VectorXd y(samples);
  for (std::size_t s = 0; s < samples; ++s) {
    const double u = -1.0 + 2.0 * double(s) / double(samples - 1);
    for (std::size_t c = 0; c < powers.size(); ++c) a(s, c) = std::pow(u, double(powers[c]));
    y[s] = std::max(0.0, u);
  }
  const Eigen::VectorXd sol = a.colPivHouseholderQr().solve(y);
  ActivationSpec act;
  act.kind = ActivationKind::srelu;
  act.coeffs.assign(degree + 1, 0.0);
  for (std::size_t c = 0; c < powers.size(); ++c) act.coeffs[powers[c]] = sol[c];
  return act;
}

ActivationSpec parse_activation(const std::string& spec, const DotProductKernel& k) {
  if (spec == "identity") return ActivationSpec::identity();
  if (spec == "square") return ActivationSpec::square();
  if (spec == "exp_like") return ActivationSpec::exp_like();
  if (spec == "kappa_match") return ActivationSpec::kappa_match(k);
  if (spec == "srelu") return srelu_fit(k);
  if (spec.rfind("custom:", 0) == 0) {
    std::vector<double> a;
    std::stringstream ss(spec.substr(7));
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        std::size_t used = 0;
        a.push_back(std::stod(item, &used));
        if (used != item.size()) throw std::invalid_argument(item);
      } catch (const std::exception&) {
        throw Error("parse_error", "bad activation coefficient '" + item + "'");
      }
    }
    if (a.empty()) throw Error("parse_error", "custom activation needs coefficients");
    return ActivationSpec::custom(std::move(a));
  }
  throw Error("invalid_argument", "unknown activation '" + spec + "'");
}

SeriesValue c_sigma_sq(const ActivationSpec& act, const DotProductKernel& k, double lambda_sq,
                       std::size_t J) {
  if (!(lambda_sq >= 0.0) || !std::isfinite(lambda_sq)) {
    throw Error("invalid_argument", "lambda^2 must be finite and >= 0");
  }
  // Finite sequences are summed exactly, whatever J is.
  const auto support = act.support();
  const std::size_t top = support ? *support : J;
  SeriesValue out;
  double prev_term = 0.0, last_term = 0.0;
  std::size_t prev_j = 0, last_j = 0;
  int nonzero = 0;
  for (std::size_t j = 0; j <= top; ++j) {
    const double a = act.coefficient(j);
    const double b = maclaurin_coefficient(k, j);
    if (a == 0.0) continue;
    if (b == 0.0) {
      throw Error("invalid_argument", "activation coefficient a_" + std::to_string(j) +
                                          " is non-zero where the kernel's b_" +
                                          std::to_string(j) + " is zero");
    }
    const double term = a * (a / b) * std::pow(lambda_sq, double(j));
    out.value += term;
    if (!std::isfinite(out.value) || out.value > 1e12) {
      throw Error("divergence", "C_sigma^2 infinite at lambda^2 = " + std::to_string(lambda_sq));
    }
    if (term > 0.0) {
      prev_term = last_term;
      prev_j = last_j;
      last_term = term;
      last_j = j;
      ++nonzero;
    }
  }
  if (support || nonzero < 2) return out;
  const double ratio = std::pow(last_term / prev_term, 1.0 / double(last_j - prev_j));
  if (!(ratio < 1.0)) {
    throw Error("divergence", "C_sigma^2 series not summable at lambda^2 = " +
                                  std::to_string(lambda_sq) + " (term ratio " +
                                  std::to_string(ratio) + ")");
  }
  out.tail_bound = last_term * ratio / (1.0 - ratio);
  return out;
}

// ---------------------------------------------------------------------------
// Weights

void check_weights(const CnnWeights& w) {
  if (w.layers.empty()) throw Error("invalid_argument", "weights have no layers");
  for (std::size_t k = 0; k < w.layers.size(); ++k) {
    const auto& l = w.layers[k];
    if (l.p_out == 0 || l.p_in == 0 || l.e == 0) {
      throw Error("shape_mismatch", "layer " + std::to_string(k + 1) + " has a zero dimension");
    }
    if (l.data.size() != l.p_out * l.p_in * l.e) {
      throw Error("shape_mismatch", "layer " + std::to_string(k + 1) + " has " +
                                        std::to_string(l.data.size()) + " entries, expected " +
                                        std::to_string(l.p_out * l.p_in * l.e));
    }
    if (k > 0 && l.p_in != w.layers[k - 1].p_out) {
      throw Error("shape_mismatch", "layer " + std::to_string(k + 1) +
                                        " input channels do not match the previous layer");
    }
    for (double v : l.data) {
      if (!std::isfinite(v)) throw Error("invalid_argument", "non-finite filter weight");
    }
  }
  if (w.p_n != w.layers.back().p_out) {
    throw Error("shape_mismatch", "final layer channels do not match the last filter bank");
  }
  if (w.final_weights.size() != w.p_n * w.n_grid) {
    throw Error("shape_mismatch", "final weights have the wrong size");
  }
  for (double v : w.final_weights) {
    if (!std::isfinite(v)) throw Error("invalid_argument", "non-finite final weight");
  }
}

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::ostream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.put(static_cast<char>((bits >> (8 * i)) & 0xff));
}

struct ByteReader {
  const std::string& bytes;
  std::size_t pos = 0;

  void need(std::size_t n) {
    if (pos + n > bytes.size()) {
      throw Error("parse_error", "weights file truncated at byte " + std::to_string(pos));
    }
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(std::uint8_t(bytes[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(std::uint8_t(bytes[pos + i])) << (8 * i);
    pos += 8;
    return std::bit_cast<double>(v);
  }
};

}  // namespace

CnnWeights load_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io_error", "cannot open " + path);
  const std::string bytes(std::istreambuf_iterator<char>(in), {});
  if (bytes.size() >= 1 && (bytes[0] == '{' || bytes[0] == ' ' || bytes[0] == '\n')) {
    return parse_weights_json(bytes);
  }
  if (bytes.size() < 4 || bytes.compare(0, 4, "CKNW") != 0) {
    throw Error("parse_error", "weights file lacks the CKNW magic at byte 0");
  }
  ByteReader r{bytes, 4};
  CnnWeights w;
  const std::uint32_t n = r.u32();
  for (std::uint32_t k = 0; k < n; ++k) {
    FilterBank l;
    l.p_out = r.u32();
    l.p_in = r.u32();
    l.e = r.u32();
    const std::size_t count = l.p_out * l.p_in * l.e;
    r.need(count * 8);
    l.data.resize(count);
    for (auto& v : l.data) v = r.f64();
    w.layers.push_back(std::move(l));
  }
  w.p_n = r.u32();
  w.n_grid = r.u32();
  r.need(w.p_n * w.n_grid * 8);
  w.final_weights.resize(w.p_n * w.n_grid);
  for (auto& v : w.final_weights) v = r.f64();
  if (r.pos != bytes.size()) {
    throw Error("parse_error", "trailing data in weights file at byte " + std::to_string(r.pos));
  }
  check_weights(w);
  return w;
}

void save_weights(const CnnWeights& w, const std::string& path) {
  check_weights(w);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io_error", "cannot write " + path);
  out.write("CKNW", 4);
  put_u32(out, static_cast<std::uint32_t>(w.layers.size()));
  for (const auto& l : w.layers) {
    put_u32(out, static_cast<std::uint32_t>(l.p_out));
    put_u32(out, static_cast<std::uint32_t>(l.p_in));
    put_u32(out, static_cast<std::uint32_t>(l.e));
    for (double v : l.data) put_f64(out, v);
  }
  put_u32(out, static_cast<std::uint32_t>(w.p_n));
  put_u32(out, static_cast<std::uint32_t>(w.n_grid));
  for (double v : w.final_weights) put_f64(out, v);
  if (!out) throw Error("io_error", "write failed for " + path);
}

CnnWeights parse_weights_json(const std::string& text) {
  using nlohmann::json;
  CnnWeights w;
  try {
    const json doc = json::parse(text);
    for (const auto& jl : doc.at("layers")) {
      FilterBank l;
      l.p_out = jl.at("p_out").get<std::size_t>();
      l.p_in = jl.at("p_in").get<std::size_t>();
      l.e = jl.at("e").get<std::size_t>();
      l.data = jl.at("data").get<std::vector<double>>();
      w.layers.push_back(std::move(l));
    }
    const auto& jf = doc.at("final");
    w.p_n = jf.at("p_n").get<std::size_t>();
    w.n_grid = jf.at("n_grid").get<std::size_t>();
    w.final_weights = jf.at("data").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw Error("parse_error", std::string("weights JSON: ") + e.what());
  }
  check_weights(w);
  return w;
}

// ---------------------------------------------------------------------------
// Norms

namespace {

Eigen::MatrixXd slice(const FilterBank& w, std::size_t v) {
  Eigen::MatrixXd m(w.p_out, w.p_in);
  for (std::size_t i = 0; i < w.p_out; ++i) {
    for (std::size_t j = 0; j < w.p_in; ++j) m(i, j) = w.at(i, j, v);
  }
  return m;
}

}  // namespace

double filter_sq_norm(const FilterBank& w, std::size_t i) {
  double s = 0.0;
  for (std::size_t j = 0; j < w.p_in; ++j) s += filter_pair_sq_norm(w, i, j);
  return s;
}

double filter_pair_sq_norm(const FilterBank& w, std::size_t i, std::size_t j) {
  double s = 0.0;
  for (std::size_t v = 0; v < w.e; ++v) s += w.at(i, j, v) * w.at(i, j, v);
  return s / double(w.e);
}

double mixed_frobenius_sq(const FilterBank& w) {
  double s = 0.0;
  for (double v : w.data) s += v * v;
  return s / double(w.e);
}

double mixed_spectral_sq(const FilterBank& w) {
  double s = 0.0;
  for (std::size_t v = 0; v < w.e; ++v) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(slice(w, v));
    const double top = svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
    s += top * top;
  }
  return s / double(w.e);
}

double operator_spectral_norm(const FilterBank& w, double tol, std::size_t max_iter) {
  const std::size_t cols = w.e * w.p_in;
  Eigen::MatrixXd m(w.p_out, cols);
  const double scale = 1.0 / std::sqrt(double(w.e));
  for (std::size_t i = 0; i < w.p_out; ++i) {
    for (std::size_t v = 0; v < w.e; ++v) {
      for (std::size_t j = 0; j < w.p_in; ++j) m(i, v * w.p_in + j) = scale * w.at(i, j, v);
    }
  }
  if (m.squaredNorm() == 0.0) return 0.0;
  const Eigen::MatrixXd gram = m.transpose() * m;
  // Deterministic start with every component non-zero.
  Eigen::VectorXd x(cols);
  for (std::size_t c = 0; c < cols; ++c) x[c] = 1.0 + 0.01 * double(c % 7);
  x.normalize();
  double gap = 0.0;
  // Stops on the eigen-residual |G x - lambda x| <= tol * lambda, which bounds
  // the eigenvalue error quadratically.
  for (std::size_t it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd y = gram * x;
    const double lambda = x.dot(y);
    gap = (y - lambda * x).norm();
    if (gap <= tol * lambda) return std::sqrt(lambda);
    const double norm = y.norm();
    if (norm == 0.0) return 0.0;
    x = y / norm;
  }
  throw Error("no_convergence", "power iteration did not converge; last residual " +
                                    std::to_string(gap));
}

double final_sq_norm(const CnnWeights& w) {
  double s = 0.0;
  for (double v : w.final_weights) s += v * v;
  return s;
}

namespace {

double c_value(const ActivationSpec& act, const DotProductKernel& k, double lambda_sq,
               std::size_t J) {
  const auto v = c_sigma_sq(act, k, lambda_sq, J);
  return v.value + v.tail_bound;
}

}  // namespace

double prop4_bound(const CnnWeights& w, const ActivationSpec& act, const DotProductKernel& k,
                   std::size_t J) {
  check_weights(w);
  std::vector<double> b(w.layers[0].p_out);
  for (std::size_t i = 0; i < b.size(); ++i) {
    b[i] = c_value(act, k, filter_sq_norm(w.layers[0], i), J);
  }
  for (std::size_t l = 1; l < w.layers.size(); ++l) {
    const auto& layer = w.layers[l];
    std::vector<double> next(layer.p_out);
    for (std::size_t i = 0; i < layer.p_out; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < layer.p_in; ++j) s += filter_pair_sq_norm(layer, i, j) * b[j];
      next[i] = c_value(act, k, double(layer.p_in) * s, J);
    }
    b = std::move(next);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < w.p_n; ++i) {
    double wi = 0.0;
    for (std::size_t u = 0; u < w.n_grid; ++u) {
      const double v = w.final_weights[i * w.n_grid + u];
      wi += v * v;
    }
    total += wi * b[i];
  }
  return std::sqrt(double(w.p_n) * total);
}

double prop5_bound(const CnnWeights& w, const ActivationSpec& act, const DotProductKernel& k,
                   std::size_t J) {
  check_weights(w);
  double v = c_value(act, k, mixed_frobenius_sq(w.layers[0]), J);
  for (std::size_t l = 1; l < w.layers.size(); ++l) {
    v = c_value(act, k, mixed_spectral_sq(w.layers[l]) * v, J);
  }
  return std::sqrt(final_sq_norm(w) * v);
}

double generic_stability_factor(const CnnWeights& w, double rho) {
  check_weights(w);
  double f = std::pow(rho, double(w.layers.size())) * std::sqrt(final_sq_norm(w));
  for (const auto& l : w.layers) f *= operator_spectral_norm(l);
  return f;
}

MarginBound rademacher_margin_bound(double lambda, const std::vector<double>& kernel_diagonal,
                                    double gamma, double delta, double empirical_margin_loss) {
  if (kernel_diagonal.empty()) throw Error("invalid_argument", "empty kernel diagonal");
  if (!(lambda >= 0.0)) throw Error("invalid_argument", "lambda must be >= 0");
  if (!(gamma > 0.0)) throw Error("invalid_argument", "gamma must be > 0");
  if (!(delta > 0.0 && delta < 1.0)) throw Error("invalid_argument", "delta must be in (0, 1)");
  const double n = double(kernel_diagonal.size());
  double mean = 0.0;
  for (double d : kernel_diagonal) mean += d;
  mean /= n;
  MarginBound out;
  out.rademacher = lambda * std::sqrt(mean) / std::sqrt(n);
  out.margin_bound = empirical_margin_loss + 2.0 * out.rademacher / gamma +
                     std::sqrt(std::log(1.0 / delta) / (2.0 * n));
  return out;
}

}  // namespace ckn
