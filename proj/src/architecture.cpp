#include "ckn/architecture.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ckn/error.hpp"

namespace ckn {

using nlohmann::json;

std::size_t LayerSpec::patch_volume() const {
  std::size_t v = 1;
  for (auto e : patch) v *= e;
  return v;
}

std::vector<long> patch_offsets(std::size_t size, PatchAlign align) {
  std::vector<long> off(size);
  const long start = align == PatchAlign::centered ? -static_cast<long>(size / 2) : 0;
  for (std::size_t i = 0; i < size; ++i) off[i] = start + static_cast<long>(i);
  return off;
}

std::vector<std::vector<long>> patch_offsets(const std::vector<std::size_t>& patch,
                                             PatchAlign align) {
  std::vector<std::vector<long>> out{{}};
  for (auto e : patch) {
    const auto axis = patch_offsets(e, align);
    std::vector<std::vector<long>> next;
    next.reserve(out.size() * axis.size());
    for (const auto& prefix : out) {
      for (long o : axis) {
        auto v = prefix;
        v.push_back(o);
        next.push_back(std::move(v));
      }
    }
    out = std::move(next);
  }
  return out;
}

std::vector<std::size_t> resolve_patch(const std::vector<std::size_t>& patch,
                                       std::size_t dims) {
  if (patch.size() == dims) return patch;
  if (patch.size() == 1) return std::vector<std::size_t>(dims, patch[0]);
  throw Error("shape_mismatch", "patch has " + std::to_string(patch.size()) +
                                    " entries for a " + std::to_string(dims) + "D signal");
}

void check_architecture(const ArchitectureSpec& arch) {
  if (arch.layers.empty()) throw Error("invalid_argument", "architecture has no layers");
  for (const auto& layer : arch.layers) {
    if (layer.patch.empty()) throw Error("invalid_argument", "layer patch is empty");
    for (auto e : layer.patch) {
      if (e == 0) throw Error("invalid_argument", "patch sizes must be positive");
    }
    if (layer.subsample == 0) throw Error("invalid_argument", "subsample must be positive");
    if (!(layer.pooling_sigma >= 0.0) || !std::isfinite(layer.pooling_sigma)) {
      throw Error("invalid_argument", "pooling_sigma must be finite and >= 0");
    }
    check_kernel(layer.kernel);
  }
}

namespace {

Boundary parse_boundary(const std::string& s) {
  if (s == "zero") return Boundary::zero;
  if (s == "circular") return Boundary::circular;
  throw Error("invalid_argument", "unknown padding '" + s + "'");
}

PatchAlign parse_align(const std::string& s) {
  if (s == "centered") return PatchAlign::centered;
  if (s == "causal") return PatchAlign::causal;
  throw Error("invalid_argument", "unknown patch_align '" + s + "'");
}

}  // namespace

ArchitectureSpec parse_architecture(const std::string& json_text) {
  ArchitectureSpec arch;
  try {
    const json doc = json::parse(json_text);
    arch.subsample_norm = doc.value("subsample_norm", true);
    const std::string default_align = doc.value("patch_align", std::string("centered"));
    for (const auto& jl : doc.at("layers")) {
      LayerSpec layer;
      const auto& jp = jl.at("patch");
      if (jp.is_array()) {
        layer.patch = jp.get<std::vector<std::size_t>>();
      } else {
        layer.patch = {jp.get<std::size_t>()};
      }
      layer.subsample = jl.value("subsample", std::size_t{1});
      layer.pooling_sigma = jl.contains("pooling_sigma")
                                ? jl.at("pooling_sigma").get<double>()
                                : double(layer.subsample) / std::sqrt(2.0);
      if (jl.contains("kernel")) {
        const auto& jk = jl.at("kernel");
        layer.kernel.variant = parse_variant(jk.at("variant").get<std::string>());
        if (jk.contains("param")) {
          layer.kernel.param = jk.at("param").get<double>();
        } else if (layer.kernel.variant == KernelVariant::polynomial) {
          layer.kernel.param = 2.0;
        }
      }
      layer.padding = parse_boundary(jl.value("padding", std::string("zero")));
      layer.align = parse_align(jl.value("patch_align", default_align));
      arch.layers.push_back(std::move(layer));
    }
  } catch (const json::exception& e) {
    throw Error("parse_error", std::string("architecture JSON: ") + e.what());
  }
  check_architecture(arch);
  return arch;
}

ArchitectureSpec load_architecture(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("io_error", "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_architecture(ss.str());
}

std::string architecture_to_json(const ArchitectureSpec& arch) {
  json doc;
  doc["subsample_norm"] = arch.subsample_norm;
  doc["layers"] = json::array();
  for (const auto& layer : arch.layers) {
    json jl;
    jl["patch"] = layer.patch;
    jl["subsample"] = layer.subsample;
    jl["pooling_sigma"] = layer.pooling_sigma;
    jl["kernel"] = {{"variant", variant_name(layer.kernel.variant)},
                    {"param", layer.kernel.param}};
    jl["padding"] = layer.padding == Boundary::zero ? "zero" : "circular";
    jl["patch_align"] = layer.align == PatchAlign::centered ? "centered" : "causal";
    doc["layers"].push_back(jl);
  }
  return doc.dump(2);
}

ArchitectureSpec reference_architecture(std::size_t dims) {
  ArchitectureSpec arch;
  const auto kernel = DotProductKernel::exponential(1.0 / (0.65 * 0.65));
  for (std::size_t s : {std::size_t{2}, std::size_t{5}}) {
    LayerSpec layer;
    layer.patch = std::vector<std::size_t>(dims, 3);
    layer.subsample = s;
    layer.pooling_sigma = double(s) / std::sqrt(2.0);
    layer.kernel = kernel;
    layer.padding = Boundary::zero;
    arch.layers.push_back(layer);
  }
  return arch;
}

}  // namespace ckn
