#include "ckn/signal.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "ckn/error.hpp"
#include "ckn/pooling.hpp"

namespace ckn {

std::size_t Signal::positions() const {
  std::size_t n = 1;
  for (auto s : shape) n *= s;
  return n;
}

double Signal::squared_norm() const {
  double s = 0.0;
  for (double v : values) s += v * v;
  return s;
}

Signal make_signal(std::vector<std::size_t> shape, std::size_t channels,
                   std::vector<double> values, Boundary boundary) {
  if (shape.empty() || shape.size() > 2) {
    throw Error("invalid_argument", "signals must have 1 or 2 dimensions");
  }
  if (channels == 0) throw Error("invalid_argument", "channels must be positive");
  std::size_t n = channels;
  for (auto s : shape) {
    if (s == 0) throw Error("invalid_argument", "shape entries must be positive");
    n *= s;
  }
  if (values.size() != n) {
    throw Error("invalid_argument", "value count " + std::to_string(values.size()) +
                                        " does not match shape x channels " +
                                        std::to_string(n));
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw Error("invalid_argument", "signal values must be finite");
  }
  Signal x;
  x.shape = std::move(shape);
  x.channels = channels;
  x.values = std::move(values);
  x.boundary = boundary;
  return x;
}

Signal zeros_like(const Signal& x, std::size_t channels) {
  Signal out;
  out.shape = x.shape;
  out.channels = channels;
  out.boundary = x.boundary;
  out.values.assign(x.positions() * channels, 0.0);
  return out;
}

// ---------------------------------------------------------------------------
// File formats

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io_error", "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

[[noreturn]] void parse_fail(const std::string& what, std::size_t offset) {
  throw Error("parse_error", what + " at byte offset " + std::to_string(offset));
}

// Cursor over a PGM header: whitespace and '#' comments are skipped.
struct PgmCursor {
  const std::string& s;
  std::size_t pos = 0;

  void skip_space() {
    while (pos < s.size()) {
      if (s[pos] == '#') {
        while (pos < s.size() && s[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(s[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  }

  unsigned long number() {
    skip_space();
    const std::size_t start = pos;
    unsigned long v = 0;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
      v = v * 10 + static_cast<unsigned long>(s[pos] - '0');
      ++pos;
    }
    if (pos == start) parse_fail("expected an unsigned integer", start);
    return v;
  }
};

}  // namespace

Signal parse_pgm(const std::string& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '5')) {
    parse_fail("missing P2/P5 magic", 0);
  }
  const bool binary = bytes[1] == '5';
  PgmCursor cur{bytes, 2};
  const auto width = cur.number();
  const auto height = cur.number();
  const std::size_t maxval_offset = cur.pos;
  const auto maxval = cur.number();
  if (width == 0 || height == 0) parse_fail("zero image dimension", maxval_offset);
  if (maxval == 0 || maxval > 65535) parse_fail("invalid maxval", maxval_offset);

  std::vector<double> values(width * height);
  if (binary) {
    // Exactly one whitespace byte separates the header from the raster.
    if (cur.pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[cur.pos]))) {
      parse_fail("expected whitespace after maxval", cur.pos);
    }
    std::size_t pos = cur.pos + 1;
    const std::size_t bpp = maxval > 255 ? 2 : 1;
    if (bytes.size() < pos + values.size() * bpp) {
      parse_fail("truncated raster", bytes.size());
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
      unsigned v = static_cast<unsigned char>(bytes[pos]);
      if (bpp == 2) v = (v << 8) | static_cast<unsigned char>(bytes[pos + 1]);
      pos += bpp;
      values[i] = double(v) / double(maxval);
    }
  } else {
    for (auto& v : values) {
      cur.skip_space();
      if (cur.pos >= bytes.size()) parse_fail("truncated raster", cur.pos);
      const std::size_t at = cur.pos;
      const auto raw = cur.number();
      if (raw > maxval) parse_fail("pixel exceeds maxval", at);
      v = double(raw) / double(maxval);
    }
  }
  return make_signal({height, width}, 1, std::move(values));
}

Signal parse_csv1d(const std::string& text) {
  std::vector<double> values;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const char ch = text[pos];
    if (ch == ',' || std::isspace(static_cast<unsigned char>(ch))) {
      ++pos;
      continue;
    }
    const std::size_t start = pos;
    while (pos < text.size() && text[pos] != ',' &&
           !std::isspace(static_cast<unsigned char>(text[pos]))) {
      ++pos;
    }
    const std::string token = text.substr(start, pos - start);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != token.size() || !std::isfinite(v)) {
      parse_fail("invalid number '" + token + "'", start);
    }
    values.push_back(v);
  }
  if (values.empty()) parse_fail("no values", 0);
  const std::size_t n = values.size();
  return make_signal({n}, 1, std::move(values));
}

std::vector<Signal> parse_idx(const std::string& bytes) {
  if (bytes.size() < 4) parse_fail("truncated magic", bytes.size());
  if (bytes[0] != 0 || bytes[1] != 0) parse_fail("invalid magic prefix", 0);
  if (static_cast<unsigned char>(bytes[2]) != 0x08) {
    parse_fail("unsupported element type (expected unsigned byte)", 2);
  }
  const unsigned ndim = static_cast<unsigned char>(bytes[3]);
  if (ndim != 1 && ndim != 3) parse_fail("unsupported dimension count", 3);
  if (bytes.size() < 4 + 4 * ndim) parse_fail("truncated dimension header", bytes.size());
  std::vector<std::size_t> dims(ndim);
  for (unsigned d = 0; d < ndim; ++d) {
    std::size_t v = 0;
    for (int b = 0; b < 4; ++b) v = (v << 8) | static_cast<unsigned char>(bytes[4 + 4 * d + b]);
    if (v == 0) parse_fail("zero dimension", 4 + 4 * d);
    dims[d] = v;
  }
  const std::size_t header = 4 + 4 * ndim;
  std::size_t total = 1;
  for (auto d : dims) total *= d;
  if (bytes.size() < header + total) parse_fail("truncated payload", bytes.size());

  std::vector<Signal> out;
  if (ndim == 1) {
    std::vector<double> v(total);
    for (std::size_t i = 0; i < total; ++i) {
      v[i] = static_cast<unsigned char>(bytes[header + i]) / 255.0;
    }
    out.push_back(make_signal({total}, 1, std::move(v)));
    return out;
  }
  const std::size_t per = dims[1] * dims[2];
  out.reserve(dims[0]);
  for (std::size_t k = 0; k < dims[0]; ++k) {
    std::vector<double> v(per);
    for (std::size_t i = 0; i < per; ++i) {
      v[i] = static_cast<unsigned char>(bytes[header + k * per + i]) / 255.0;
    }
    out.push_back(make_signal({dims[1], dims[2]}, 1, std::move(v)));
  }
  return out;
}

SignalFormat format_from_path(const std::string& path) {
  auto ends_with = [&](const std::string& suffix) {
    return path.size() >= suffix.size() &&
           path.compare(path.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  if (ends_with(".pgm")) return SignalFormat::pgm;
  if (ends_with(".csv") || ends_with(".txt")) return SignalFormat::csv1d;
  if (ends_with("ubyte") || ends_with(".idx")) return SignalFormat::idx;
  throw Error("invalid_argument", "cannot infer signal format from " + path);
}

Signal load_signal(const std::string& path, SignalFormat format) {
  const std::string bytes = read_file(path);
  switch (format) {
    case SignalFormat::pgm:
      return parse_pgm(bytes);
    case SignalFormat::csv1d:
      return parse_csv1d(bytes);
    case SignalFormat::idx:
      return parse_idx(bytes).front();
  }
  throw Error("invalid_argument", "unknown format");
}

std::vector<Signal> load_idx(const std::string& path) {
  return parse_idx(read_file(path));
}

void save_pgm(const Signal& x, const std::string& path) {
  if (x.dims() != 2 || x.channels != 1) {
    throw Error("invalid_argument", "PGM output needs a single-channel 2D signal");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io_error", "cannot write " + path);
  out << "P5\n" << x.shape[1] << ' ' << x.shape[0] << "\n255\n";
  for (double v : x.values) {
    const double c = std::clamp(v, 0.0, 1.0);
    out.put(static_cast<char>(static_cast<unsigned char>(std::lround(c * 255.0))));
  }
}

// ---------------------------------------------------------------------------
// Differential operators and transformations

namespace {

// Strides of a row-major grid.
std::vector<std::size_t> strides_of(const std::vector<std::size_t>& shape) {
  std::vector<std::size_t> st(shape.size(), 1);
  for (std::size_t a = shape.size(); a-- > 1;) st[a - 1] = st[a] * shape[a];
  return st;
}

std::vector<std::size_t> unravel(std::size_t p, const std::vector<std::size_t>& shape) {
  std::vector<std::size_t> idx(shape.size());
  for (std::size_t a = shape.size(); a-- > 0;) {
    idx[a] = p % shape[a];
    p /= shape[a];
  }
  return idx;
}

}  // namespace

Signal gradient(const Signal& x) {
  const std::size_t d = x.dims();
  const std::size_t p = x.channels;
  Signal g = zeros_like(x, d * p);
  const auto st = strides_of(x.shape);
  for (std::size_t pos = 0; pos < x.positions(); ++pos) {
    const auto idx = unravel(pos, x.shape);
    for (std::size_t a = 0; a < d; ++a) {
      const long n = static_cast<long>(x.shape[a]);
      const long i = static_cast<long>(idx[a]);
      if (n == 1) continue;
      auto neighbour = [&](long j) {
        return pos + static_cast<std::size_t>(j - i) * st[a];  // wraps correctly in size_t
      };
      for (std::size_t c = 0; c < p; ++c) {
        double v;
        if (x.boundary == Boundary::circular) {
          const long lo = (i - 1 + n) % n;
          const long hi = (i + 1) % n;
          v = 0.5 * (x.at(neighbour(hi), c) - x.at(neighbour(lo), c));
        } else if (i == 0) {
          v = x.at(neighbour(1), c) - x.at(pos, c);
        } else if (i == n - 1) {
          v = x.at(pos, c) - x.at(neighbour(n - 2), c);
        } else {
          v = 0.5 * (x.at(neighbour(i + 1), c) - x.at(neighbour(i - 1), c));
        }
        g.at(pos, a * p + c) = v;
      }
    }
  }
  return g;
}

Signal apply_deformation(const Signal& x, const DeformationField& tau, double alpha) {
  if (tau.shape != x.shape) {
    throw Error("shape_mismatch", "deformation field shape differs from signal shape");
  }
  const std::size_t d = x.dims();
  const std::size_t p = x.channels;
  const Signal g = gradient(x);
  Signal out = x;
  for (std::size_t pos = 0; pos < x.positions(); ++pos) {
    for (std::size_t c = 0; c < p; ++c) {
      double dot = 0.0;
      for (std::size_t a = 0; a < d; ++a) {
        dot += tau.vectors[pos * d + a] * g.at(pos, a * p + c);
      }
      out.at(pos, c) -= alpha * dot;
    }
  }
  return out;
}

Signal apply_translation(const Signal& x, std::span<const long> offset) {
  if (offset.size() != x.dims()) {
    throw Error("shape_mismatch", "translation offset must have one entry per dimension");
  }
  Signal out = zeros_like(x, x.channels);
  const auto st = strides_of(x.shape);
  for (std::size_t pos = 0; pos < x.positions(); ++pos) {
    const auto idx = unravel(pos, x.shape);
    std::size_t src = 0;
    bool inside = true;
    for (std::size_t a = 0; a < x.dims(); ++a) {
      const long n = static_cast<long>(x.shape[a]);
      long j = static_cast<long>(idx[a]) - offset[a];
      if (x.boundary == Boundary::circular) {
        j = ((j % n) + n) % n;
      } else if (j < 0 || j >= n) {
        inside = false;
        break;
      }
      src += static_cast<std::size_t>(j) * st[a];
    }
    if (!inside) continue;
    for (std::size_t c = 0; c < x.channels; ++c) out.at(pos, c) = x.at(src, c);
  }
  return out;
}

double jacobian_sup_norm(const DeformationField& tau) {
  const std::size_t d = tau.dims();
  const auto st = strides_of(tau.shape);
  double sup = 0.0;
  const std::size_t n_pos = tau.vectors.size() / d;
  for (std::size_t pos = 0; pos < n_pos; ++pos) {
    const auto idx = unravel(pos, tau.shape);
    // J[a][b] = d tau_a / d u_b, forward difference (backward at the last index).
    double jac[2][2] = {{0, 0}, {0, 0}};
    for (std::size_t b = 0; b < d; ++b) {
      const std::size_t n = tau.shape[b];
      if (n == 1) continue;
      std::size_t lo = pos, hi = pos + st[b];
      if (idx[b] + 1 == n) {
        lo = pos - st[b];
        hi = pos;
      }
      for (std::size_t a = 0; a < d; ++a) {
        jac[a][b] = tau.vectors[hi * d + a] - tau.vectors[lo * d + a];
      }
    }
    double norm;
    if (d == 1) {
      norm = std::abs(jac[0][0]);
    } else {
      // Largest singular value of a 2x2 matrix in closed form.
      const double a = jac[0][0], b = jac[0][1], c = jac[1][0], e = jac[1][1];
      const double s1 = a * a + b * b + c * c + e * e;
      const double det = a * e - b * c;
      const double disc = std::sqrt(std::max(0.0, s1 * s1 - 4.0 * det * det));
      norm = std::sqrt(0.5 * (s1 + disc));
    }
    sup = std::max(sup, norm);
  }
  return sup;
}

DeformationField random_smooth_field(const std::vector<std::size_t>& shape,
                                     double smoothing_scale, double target_grad_norm,
                                     std::uint64_t seed) {
  if (!(target_grad_norm > 0.0)) {
    throw Error("invalid_argument", "target_grad_norm must be positive");
  }
  if (!(smoothing_scale > 0.0)) {
    throw Error("invalid_argument", "smoothing_scale must be positive");
  }
  if (shape.empty() || shape.size() > 2) {
    throw Error("invalid_argument", "deformation fields are 1D or 2D");
  }
  const std::size_t d = shape.size();
  std::size_t n = 1;
  for (auto s : shape) n *= s;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Signal noise;
  noise.shape = shape;
  noise.channels = d;
  noise.boundary = Boundary::circular;
  noise.values.resize(n * d);
  for (auto& v : noise.values) v = normal(rng);
  const Signal smooth = pool_signal(noise, smoothing_scale, 1, false);

  DeformationField tau;
  tau.shape = shape;
  tau.smoothing_scale = smoothing_scale;
  tau.vectors = smooth.values;
  const double measured = jacobian_sup_norm(tau);
  if (!(measured > 0.0)) {
    throw Error("degenerate", "smoothed field has zero Jacobian; cannot rescale");
  }
  tau.unscaled_jacobian_norm = measured;
  const double scale = target_grad_norm / measured;
  for (auto& v : tau.vectors) v *= scale;
  tau.jacobian_norm = jacobian_sup_norm(tau);
  double sup = 0.0;
  for (std::size_t pos = 0; pos < n; ++pos) {
    double s = 0.0;
    for (std::size_t a = 0; a < d; ++a) s += tau.vectors[pos * d + a] * tau.vectors[pos * d + a];
    sup = std::max(sup, std::sqrt(s));
  }
  tau.sup_norm = sup;
  return tau;
}

}  // namespace ckn
