#pragma once

#include <cstdint>
#include <vector>

#include "segd/volume.hpp"

namespace segd {

// HU palette of the synthetic wrapped body.
namespace palette {
inline constexpr int kAir = -1000;
inline constexpr int kBandage = -350;
inline constexpr int kBandageSpread = 80;
inline constexpr int kTissue = -50;
inline constexpr int kTissueSpread = 60;
inline constexpr int kBone = 700;
inline constexpr int kBoneSpread = 200;
inline constexpr int kMetal = 3071;
}  // namespace palette

enum class BoneKind { None, Core, Shell };
enum class SupportShape { None, Slab, Cradle };

// One tapered ellipsoid of the body chain. All coordinates are fractions of the
// volume extent: z in [0,1] along the frame axis, centers relative to the frame center.
struct BodyPrimitive {
  double z0 = 0.0, z1 = 1.0;
  double cx = 0.0, cy = 0.0;
  double ax0 = 0.1, ay0 = 0.1;  // semi-axes at z0 (fraction of nx, ny)
  double ax1 = 0.1, ay1 = 0.1;  // semi-axes at z1
  BoneKind bone = BoneKind::None;
  double bone_dx = 0.0, bone_dy = 0.0;  // bone core offset as a fraction of the semi-axes
  double bone_scale = 0.35;
};

struct PhantomSpec {
  std::uint64_t seed = 1;
  Dims dims{256, 256, 120};
  Spacing spacing{0.9f, 0.9f, 2.5f};
  std::vector<BodyPrimitive> body = default_body();
  int shell_min = 8;   // bandage thickness range, voxels
  int shell_max = 14;
  double hollow_probability = 0.3;
  int metal_count = 3;
  int metal_hu = palette::kMetal;
  int metal_radius = 3;
  SupportShape support = SupportShape::Slab;
  int support_hu_lo = -500;
  int support_hu_hi = -400;
  double streak_amplitude = 800.0;
  double noise_sigma = 30.0;
  int distractor_count = 0;
  std::vector<int> open_frames;  // frames whose bandage shell is cut open

  static std::vector<BodyPrimitive> default_body();
  // Same geometry with noise and metal streaks disabled.
  static PhantomSpec noiseless(std::uint64_t seed = 1);
  // Default settings plus spurious tissue-density blobs inside the wrap.
  static PhantomSpec with_distractors(std::uint64_t seed = 1, int count = 24);
};

struct PixelBox {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // inclusive
  double center_x() const { return 0.5 * (x0 + x1); }
  double center_y() const { return 0.5 * (y0 + y1); }
  bool operator==(const PixelBox&) const = default;
};

struct MetalDisc {
  double cx = 0, cy = 0;
  int z0 = 0, z1 = 0;  // inclusive frame range
  int radius = 0;
};

struct Distractor {
  int x = 0, y = 0, z0 = 0, z1 = 0, radius = 0;
};

struct Phantom {
  Volume volume;
  LabelVolume truth;
  std::vector<MetalDisc> metal;
  std::vector<Distractor> distractors;
  std::vector<PixelBox> support_boxes;  // per frame; empty box list when no support
  Image<Label> support_template;        // footprint (SUPPORT) with an EXTERIOR_AIR margin
};

// Deterministic for a given spec; throws InvalidArgument for dims below 32 per axis.
Phantom generate_phantom(const PhantomSpec& spec);

// Template file helpers: a single-frame label volume.
LabelVolume template_to_volume(const Image<Label>& tmpl);
Image<Label> volume_to_template(const LabelVolume& v);

}  // namespace segd
