#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ckn/kernels.hpp"
#include "ckn/signal.hpp"

namespace ckn {

// Where a patch of size e sits relative to its anchor position n.
// centered: offsets -floor(e/2) .. e-1-floor(e/2) (one extra on the left for
// even e); causal: offsets 0 .. e-1.
enum class PatchAlign { centered, causal };

struct LayerSpec {
  std::vector<std::size_t> patch{3};  // e_k per dimension
  std::size_t subsample = 1;          // s_k
  double pooling_sigma = 0.0;         // sigma_k; 0 means no filtering
  DotProductKernel kernel;
  Boundary padding = Boundary::zero;
  PatchAlign align = PatchAlign::centered;

  std::size_t patch_volume() const;
};

struct ArchitectureSpec {
  bool subsample_norm = true;
  std::vector<LayerSpec> layers;
};

// Offsets of a patch along one axis.
std::vector<long> patch_offsets(std::size_t size, PatchAlign align);

// Row-major list of d-dimensional patch offsets.
std::vector<std::vector<long>> patch_offsets(const std::vector<std::size_t>& patch,
                                             PatchAlign align);

// Broadcasts a single-entry patch to `dims` entries; throws on mismatch.
std::vector<std::size_t> resolve_patch(const std::vector<std::size_t>& patch,
                                       std::size_t dims);

// Throws unless every layer is well formed (positive sizes, sigma >= 0, valid
// kernel) and the architecture is non-empty.
void check_architecture(const ArchitectureSpec& arch);

ArchitectureSpec parse_architecture(const std::string& json_text);
ArchitectureSpec load_architecture(const std::string& path);
std::string architecture_to_json(const ArchitectureSpec& arch);

// Two-layer reference model: (3, 2) then (3, 5) layers, exponential kernel with
// rho = 1/0.65^2, sigma = s/sqrt(2), zero padding.
ArchitectureSpec reference_architecture(std::size_t dims = 2);

}  // namespace ckn
