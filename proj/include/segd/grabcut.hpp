#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "segd/exec.hpp"
#include "segd/gmm.hpp"
#include "segd/scribbles.hpp"
#include "segd/volume.hpp"

namespace segd {

class KeyValues;

struct GrabCutConfig {
  int gmm_k = 5;
  double lambda = 50.0;
  int n_g = 10;              // frames per chunk, stride 1
  int iters = 5;             // max relabel rounds per chunk
  bool soft_wrap = false;    // R_w voxels unknown (initialized background) instead of hard
  std::uint64_t seed = 0;
  int em_iterations = 10;
  double variance_floor = 1.0;
  double energy_tolerance = 1e-3;  // relative change that stops iterating

  void apply(const KeyValues& kv);
  void validate() const;
};

// Per-voxel role inside a chunk.
enum class CutRole : std::uint8_t { HardBg, HardFg, Fg, Bg };

inline bool is_fg(CutRole r) { return r == CutRole::HardFg || r == CutRole::Fg; }
inline bool is_unknown(CutRole r) { return r == CutRole::Fg || r == CutRole::Bg; }

struct ChunkResult {
  std::vector<std::uint8_t> fg;  // final foreground flag per chunk voxel
  std::vector<double> energy;    // energy after each relabel
  Gmm1D fg_model, bg_model;      // models used for the last relabel
};

// Iterated GMM fit + min cut over one block of frames. `hu` and `roles` are the
// block's voxels, x fastest; dims.nz is the block's frame count.
ChunkResult grabcut_chunk(std::span<const Hu> hu, Dims dims, std::span<const CutRole> roles,
                          const GrabCutConfig& cfg, std::uint64_t seed);

// GrabCut energy of a labeling: data terms of unknown voxels plus the weights of
// n-links with at least one unknown endpoint whose endpoints disagree.
double chunk_energy(std::span<const Hu> hu, Dims dims, std::span<const CutRole> roles,
                    std::span<const std::uint8_t> fg, const Gmm1D& fg_model, const Gmm1D& bg_model,
                    double lambda, double beta);

// beta = 1 / (2 mean dHU^2) over all 6-connected pairs; 0 when every pair is flat.
double contrast_beta(std::span<const Hu> hu, Dims dims);

// BODY -> Fg, BANDAGE -> HardBg (Bg with soft_wrap), everything else HardBg.
// Scribbles override BANDAGE/BODY voxels only.
std::vector<CutRole> cut_roles(const LabelVolume& labels, const HardLabelMap* scribbles, bool soft_wrap,
                               int z0, int z1);

// Chunk start frames: 0..nz-n_g, or a single chunk when nz <= n_g.
std::vector<int> chunk_starts(int nz, int n_g);

// Chunked refinement with per-voxel vote averaging. Only BANDAGE/BODY voxels change.
LabelVolume grabcut_volume(const Volume& v, const LabelVolume& labels, const HardLabelMap* scribbles,
                           const GrabCutConfig& cfg, Exec exec = Exec::Parallel, const ProgressFn& progress = {});

}  // namespace segd
