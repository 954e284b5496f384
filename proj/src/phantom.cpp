#include "segd/phantom.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <numbers>
#include <random>
#include <string>

#include "segd/error.hpp"

namespace segd {

std::vector<BodyPrimitive> PhantomSpec::default_body() {
  std::vector<BodyPrimitive> body;
  for (double side : {-1.0, 1.0}) {
    BodyPrimitive leg;
    leg.z0 = 0.05;
    leg.z1 = 0.47;
    leg.cx = side * 0.085;
    leg.cy = -0.05;
    leg.ax0 = 0.055;
    leg.ay0 = 0.06;
    leg.ax1 = 0.085;
    leg.ay1 = 0.085;
    leg.bone = BoneKind::Core;
    leg.bone_scale = 0.32;
    body.push_back(leg);
  }
  BodyPrimitive torso;
  torso.z0 = 0.42;
  torso.z1 = 0.83;
  torso.cy = -0.05;
  torso.ax0 = 0.2;
  torso.ay0 = 0.13;
  torso.ax1 = 0.22;
  torso.ay1 = 0.14;
  torso.bone = BoneKind::Core;
  torso.bone_dy = 0.55;
  torso.bone_scale = 0.2;
  body.push_back(torso);

  BodyPrimitive head;
  head.z0 = 0.79;
  head.z1 = 0.96;
  head.cy = -0.05;
  head.ax0 = head.ax1 = 0.08;
  head.ay0 = head.ay1 = 0.09;
  head.bone = BoneKind::Shell;
  body.push_back(head);
  return body;
}

PhantomSpec PhantomSpec::noiseless(std::uint64_t seed) {
  PhantomSpec spec;
  spec.seed = seed;
  spec.noise_sigma = 0.0;
  spec.streak_amplitude = 0.0;
  return spec;
}

PhantomSpec PhantomSpec::with_distractors(std::uint64_t seed, int count) {
  PhantomSpec spec;
  spec.seed = seed;
  spec.distractor_count = count;
  return spec;
}

namespace {

constexpr double kPi = std::numbers::pi;

struct Ellipse {
  double cx, cy, a, b;
  bool contains(double x, double y) const {
    double dx = (x - cx) / a, dy = (y - cy) / b;
    return dx * dx + dy * dy <= 1.0;
  }
};

// Smooth band-limited texture in [-1, 1].
struct Texture {
  std::array<std::array<double, 4>, 3> waves{};  // kx, ky, kz, phase

  static Texture random(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> wavelength(10.0, 40.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Texture t;
    for (auto& w : t.waves) {
      double theta = 2 * kPi * unit(rng);
      double phi = kPi * unit(rng);
      double k = 2 * kPi / wavelength(rng);
      w = {k * std::cos(theta) * std::sin(phi), k * std::sin(theta) * std::sin(phi), k * std::cos(phi),
           2 * kPi * unit(rng)};
    }
    return t;
  }

  double operator()(int x, int y, int z) const {
    double s = 0;
    for (const auto& w : waves) s += std::sin(w[0] * x + w[1] * y + w[2] * z + w[3]);
    return s / 3.0;
  }
};

struct PrimitiveSection {
  Ellipse outer;
  std::optional<Ellipse> bone;
  std::optional<Ellipse> bone_inner;  // shell bones: inside of the ring is tissue
};

// Cross-section of a primitive in frame z, with the z-extent optionally widened by `pad` frames.
std::optional<PrimitiveSection> section(const BodyPrimitive& p, const Dims& d, int z, double pad = 0.0) {
  double t = d.nz > 1 ? static_cast<double>(z) / (d.nz - 1) : 0.0;
  double pad_t = d.nz > 1 ? pad / (d.nz - 1) : 0.0;
  double z0 = p.z0 - pad_t, z1 = p.z1 + pad_t;
  if (t < z0 || t > z1 || z1 <= z0) return std::nullopt;
  double u = (2 * t - z0 - z1) / (z1 - z0);
  double s = std::sqrt(std::max(0.0, 1.0 - u * u * u * u));
  double q = std::clamp((t - p.z0) / (p.z1 - p.z0), 0.0, 1.0);
  double a = (p.ax0 + (p.ax1 - p.ax0) * q) * d.nx * s;
  double b = (p.ay0 + (p.ay1 - p.ay0) * q) * d.ny * s;
  if (a < 1.0 || b < 1.0) return std::nullopt;
  PrimitiveSection sec;
  sec.outer = {d.nx / 2.0 + p.cx * d.nx, d.ny / 2.0 + p.cy * d.ny, a, b};
  if (p.bone == BoneKind::Core) {
    double ba = a * p.bone_scale, bb = b * p.bone_scale;
    if (ba >= 1.0 && bb >= 1.0) {
      sec.bone = Ellipse{sec.outer.cx + p.bone_dx * a, sec.outer.cy + p.bone_dy * b, ba, bb};
    }
  } else if (p.bone == BoneKind::Shell) {
    sec.bone = Ellipse{sec.outer.cx, sec.outer.cy, a * 0.88, b * 0.88};
    sec.bone_inner = Ellipse{sec.outer.cx, sec.outer.cy, a * 0.75, b * 0.75};
  }
  return sec;
}

struct HollowPocket {
  std::size_t primitive;
  int z0, z1;
  double angle0, span, width;
};

bool in_angle(double angle, double start, double span) {
  double d = std::fmod(angle - start, 2 * kPi);
  if (d < 0) d += 2 * kPi;
  return d <= span;
}

void fill_rows_and_columns(Mask& m) {
  for (int y = 0; y < m.height; ++y) {
    int lo = -1, hi = -1;
    for (int x = 0; x < m.width; ++x)
      if (m.at(x, y)) {
        if (lo < 0) lo = x;
        hi = x;
      }
    for (int x = lo; lo >= 0 && x <= hi; ++x) m.at(x, y) = 1;
  }
  for (int x = 0; x < m.width; ++x) {
    int lo = -1, hi = -1;
    for (int y = 0; y < m.height; ++y)
      if (m.at(x, y)) {
        if (lo < 0) lo = y;
        hi = y;
      }
    for (int y = lo; lo >= 0 && y <= hi; ++y) m.at(x, y) = 1;
  }
}

int round_half_up(double v) { return static_cast<int>(std::floor(v + 0.5)); }

Hu clamp_hu(double v) { return static_cast<Hu>(std::clamp(round_half_up(v), kMinHu, kMaxHu)); }

void validate(const PhantomSpec& spec) {
  const Dims& d = spec.dims;
  if (d.nx < 32 || d.ny < 32 || d.nz < 32) {
    throw InvalidArgument("phantom dims must be at least 32 voxels per axis");
  }
  validate_spacing(spec.spacing);
  if (spec.shell_min < 1 || spec.shell_max < spec.shell_min) throw InvalidArgument("invalid bandage shell range");
  if (spec.hollow_probability < 0 || spec.hollow_probability > 1) {
    throw InvalidArgument("hollow probability must lie in [0, 1]");
  }
  if (spec.metal_count < 0 || spec.metal_radius < 1) throw InvalidArgument("invalid metal settings");
  if (spec.noise_sigma < 0 || spec.streak_amplitude < 0 || spec.distractor_count < 0) {
    throw InvalidArgument("noise, streak and distractor settings must be non-negative");
  }
  if (spec.support_hu_hi < spec.support_hu_lo) throw InvalidArgument("support HU range is inverted");
  if (spec.body.empty()) throw InvalidArgument("phantom needs at least one body primitive");
}

}  // namespace

Phantom generate_phantom(const PhantomSpec& spec) {
  validate(spec);
  const Dims d = spec.dims;
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Texture bandage_tex = Texture::random(rng);
  Texture tissue_tex = Texture::random(rng);
  Texture bone_tex = Texture::random(rng);
  Texture support_tex = Texture::random(rng);
  double shell_phase = 2 * kPi * unit(rng);
  const int hollow_max = 4;

  Phantom out;
  out.volume = Volume(d, spec.spacing, static_cast<Hu>(palette::kAir));
  out.truth = LabelVolume(d, spec.spacing, Label::ExteriorAir);

  // Per-frame geometry.
  std::vector<std::vector<std::optional<PrimitiveSection>>> sections(d.nz);
  std::vector<Mask> wrap(d.nz);
  int body_zmin = d.nz, body_zmax = -1;
  for (int z = 0; z < d.nz; ++z) {
    double shell = spec.shell_min + (spec.shell_max - spec.shell_min) *
                                        (0.5 + 0.5 * std::sin(4 * kPi * z / d.nz + shell_phase));
    Mask w(d.nx, d.ny, 0);
    bool any_wrap = false;
    for (const auto& p : spec.body) {
      auto sec = section(p, d, z);
      auto ext = section(p, d, z, 3.0);
      sections[z].push_back(sec);
      if (sec) {
        body_zmin = std::min(body_zmin, z);
        body_zmax = std::max(body_zmax, z);
      }
      if (!ext) continue;
      double a = std::max(ext->outer.a, sec ? sec->outer.a : 0.0) + shell + hollow_max;
      double b = std::max(ext->outer.b, sec ? sec->outer.b : 0.0) + shell + hollow_max;
      Ellipse e{ext->outer.cx, ext->outer.cy, a, b};
      for (int y = 0; y < d.ny; ++y)
        for (int x = 0; x < d.nx; ++x)
          if (e.contains(x, y)) {
            w.at(x, y) = 1;
            any_wrap = true;
          }
    }
    if (any_wrap) fill_rows_and_columns(w);
    wrap[z] = std::move(w);
  }
  if (body_zmax < 0) throw InvalidArgument("body primitives produce no voxels");

  // Wrap bounding box over all frames, for support placement.
  int wx0 = d.nx, wx1 = -1, wy0 = d.ny, wy1 = -1;
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x)
        if (wrap[z].at(x, y)) {
          wx0 = std::min(wx0, x);
          wx1 = std::max(wx1, x);
          wy0 = std::min(wy0, y);
          wy1 = std::max(wy1, y);
        }
  if (wx0 < 2 || wy0 < 2 || wx1 > d.nx - 3 || wy1 > d.ny - 3) {
    throw InvalidArgument("dims too small to contain the requested bandage shell");
  }

  // Hollow pockets between body and bandage.
  std::vector<HollowPocket> pockets;
  {
    int body_frames = body_zmax - body_zmin + 1;
    int n = static_cast<int>(std::floor(spec.hollow_probability * body_frames / 5.0 + 0.5));
    std::uniform_int_distribution<std::size_t> pick_prim(0, spec.body.size() - 1);
    for (int i = 0; i < n; ++i) {
      HollowPocket hp;
      hp.primitive = pick_prim(rng);
      int len = 3 + static_cast<int>(unit(rng) * 6);
      hp.z0 = body_zmin + static_cast<int>(unit(rng) * std::max(1, body_frames - len));
      hp.z1 = std::min(body_zmax, hp.z0 + len - 1);
      hp.angle0 = 2 * kPi * unit(rng);
      hp.span = (60.0 + 90.0 * unit(rng)) * kPi / 180.0;
      hp.width = 2.0 + 2.0 * unit(rng);
      pockets.push_back(hp);
    }
  }

  // Ground truth: BANDAGE inside wrap, then HOLLOW, BODY, bone texture class, metal later.
  std::vector<std::uint8_t> bone(d.count(), 0);
  for (int z = 0; z < d.nz; ++z) {
    for (int y = 0; y < d.ny; ++y) {
      for (int x = 0; x < d.nx; ++x) {
        std::size_t idx = out.truth.index(x, y, z);
        if (!wrap[z].at(x, y)) continue;
        Label label = Label::Bandage;
        for (std::size_t k = 0; k < spec.body.size(); ++k) {
          const auto& sec = sections[z][k];
          if (!sec || !sec->outer.contains(x, y)) continue;
          label = Label::Body;
          if (sec->bone && sec->bone->contains(x, y) && !(sec->bone_inner && sec->bone_inner->contains(x, y))) {
            bone[idx] = 1;
          }
        }
        if (label == Label::Bandage) {
          for (const auto& hp : pockets) {
            if (z < hp.z0 || z > hp.z1) continue;
            const auto& sec = sections[z][hp.primitive];
            if (!sec) continue;
            Ellipse grown{sec->outer.cx, sec->outer.cy, sec->outer.a + hp.width, sec->outer.b + hp.width};
            double ang = std::atan2((y - sec->outer.cy) / sec->outer.b, (x - sec->outer.cx) / sec->outer.a);
            if (grown.contains(x, y) && in_angle(ang, hp.angle0, hp.span)) {
              label = Label::Hollow;
              break;
            }
          }
        }
        out.truth.data()[idx] = label;
      }
    }
  }

  // Deliberately opened frames: a channel of exterior air from the wrap top down to the body.
  for (int z : spec.open_frames) {
    if (z < 0 || z >= d.nz) throw InvalidArgument("open frame index out of range");
    int cx = d.nx / 2;
    int top = -1;
    for (int y = 0; y < d.ny && top < 0; ++y)
      if (wrap[z].at(cx, y)) top = y;
    if (top < 0) continue;
    for (int y = top; y < d.ny; ++y) {
      bool hit_body = false;
      for (int x = cx - 2; x <= cx + 2; ++x)
        if (out.truth.at(x, y, z) == Label::Body) hit_body = true;
      if (hit_body) break;
      for (int x = cx - 2; x <= cx + 2; ++x) out.truth.at(x, y, z) = Label::ExteriorAir;
    }
  }

  // Metal discs on the body surface, kept apart so each is its own 26-connected component.
  for (int i = 0, attempts = 0; i < spec.metal_count; ++attempts) {
    if (attempts > 10000) throw InvalidArgument("cannot place the requested number of metal discs");
    int z = body_zmin + 3 + static_cast<int>(unit(rng) * std::max(1, body_zmax - body_zmin - 6));
    if (z + 1 >= d.nz) continue;
    std::size_t k = static_cast<std::size_t>(unit(rng) * spec.body.size()) % spec.body.size();
    const auto& sec = sections[z][k];
    if (!sec || !sections[z + 1][k]) continue;
    double ang = 2 * kPi * unit(rng);
    MetalDisc disc{sec->outer.cx + sec->outer.a * std::cos(ang), sec->outer.cy + sec->outer.b * std::sin(ang), z,
                   z + 1, spec.metal_radius};
    bool clear = true;
    for (const auto& other : out.metal) {
      double dxy = std::hypot(disc.cx - other.cx, disc.cy - other.cy);
      bool z_near = disc.z0 <= other.z1 + 2 && other.z0 <= disc.z1 + 2;
      if (z_near && dxy < 2.0 * spec.metal_radius + 4.0) clear = false;
    }
    if (!clear) continue;
    out.metal.push_back(disc);
    ++i;
  }
  for (const auto& disc : out.metal) {
    for (int z = disc.z0; z <= disc.z1; ++z)
      for (int y = 0; y < d.ny; ++y)
        for (int x = 0; x < d.nx; ++x)
          if (std::hypot(x - disc.cx, y - disc.cy) <= disc.radius) out.truth.at(x, y, z) = Label::Metal;
  }

  // Spurious tissue-density blobs lodged in the bandage; their ground truth stays BANDAGE.
  std::vector<std::uint8_t> distractor(d.count(), 0);
  for (int i = 0, attempts = 0; i < spec.distractor_count && attempts < 200000; ++attempts) {
    int radius = 4 + static_cast<int>(unit(rng) * 2);
    int z0 = static_cast<int>(unit(rng) * d.nz);
    int z1 = std::min(d.nz - 1, z0 + static_cast<int>(unit(rng) * 2));
    int x = static_cast<int>(unit(rng) * d.nx), y = static_cast<int>(unit(rng) * d.ny);
    int reach = radius + 2;
    bool ok = x - reach >= 0 && y - reach >= 0 && x + reach < d.nx && y + reach < d.ny;
    for (int z = z0; ok && z <= z1; ++z)
      for (int yy = y - reach; ok && yy <= y + reach; ++yy)
        for (int xx = x - reach; ok && xx <= x + reach; ++xx)
          if ((xx - x) * (xx - x) + (yy - y) * (yy - y) <= reach * reach && out.truth.at(xx, yy, z) != Label::Bandage)
            ok = false;
    for (int z = z0; ok && z <= z1; ++z)
      for (int yy = y - reach; ok && yy <= y + reach; ++yy)
        for (int xx = x - reach; ok && xx <= x + reach; ++xx)
          if (distractor[out.truth.index(xx, yy, z)]) ok = false;
    if (!ok) continue;
    for (int z = z0; z <= z1; ++z)
      for (int yy = y - radius; yy <= y + radius; ++yy)
        for (int xx = x - radius; xx <= x + radius; ++xx)
          if ((xx - x) * (xx - x) + (yy - y) * (yy - y) <= radius * radius) distractor[out.truth.index(xx, yy, z)] = 1;
    out.distractors.push_back({x, y, z0, z1, radius});
    ++i;
  }

  // Support below the wrap, separated from it by exterior air.
  Mask support_footprint(d.nx, d.ny, 0);
  if (spec.support != SupportShape::None) {
    int thickness = std::max(6, d.ny / 20);
    int x0 = std::max(2, wx0 - 12), x1 = std::min(d.nx - 3, wx1 + 12);
    int y0 = wy1 + 5, y1 = y0 + thickness - 1;
    if (y1 > d.ny - 3) throw InvalidArgument("dims too small to place the support below the wrap");
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) support_footprint.at(x, y) = 1;
    if (spec.support == SupportShape::Cradle) {
      int arm_h = std::max(4, d.ny / 10);
      int arm_w = 6;
      for (int y = std::max(0, y0 - arm_h); y < y0; ++y)
        for (int x = 0; x < arm_w; ++x) {
          support_footprint.at(x0 + x, y) = 1;
          support_footprint.at(x1 - x, y) = 1;
        }
    }
    PixelBox box{x0, y0, x1, y1};
    if (spec.support == SupportShape::Cradle) box.y0 = std::max(0, y0 - std::max(4, d.ny / 10));
    out.support_boxes.assign(d.nz, box);

    const int margin = 4;
    Image<Label> tmpl(box.x1 - box.x0 + 1 + 2 * margin, box.y1 - box.y0 + 1 + 2 * margin, Label::ExteriorAir);
    for (int y = box.y0; y <= box.y1; ++y)
      for (int x = box.x0; x <= box.x1; ++x)
        if (support_footprint.at(x, y)) tmpl.at(x - box.x0 + margin, y - box.y0 + margin) = Label::Support;
    out.support_template = std::move(tmpl);
    for (int z = 0; z < d.nz; ++z)
      for (int y = 0; y < d.ny; ++y)
        for (int x = 0; x < d.nx; ++x)
          if (support_footprint.at(x, y)) out.truth.at(x, y, z) = Label::Support;
  }

  // Radiodensity.
  double support_mid = 0.5 * (spec.support_hu_lo + spec.support_hu_hi);
  double support_half = 0.5 * (spec.support_hu_hi - spec.support_hu_lo);
  std::vector<double> hu(d.count());
  for (int z = 0; z < d.nz; ++z) {
    for (int y = 0; y < d.ny; ++y) {
      for (int x = 0; x < d.nx; ++x) {
        std::size_t idx = out.truth.index(x, y, z);
        double v = palette::kAir;
        switch (out.truth.data()[idx]) {
          case Label::Bandage:
            v = distractor[idx] ? palette::kTissue + palette::kTissueSpread * tissue_tex(x, y, z)
                                : palette::kBandage + palette::kBandageSpread * bandage_tex(x, y, z);
            break;
          case Label::Body:
            v = bone[idx] ? palette::kBone + palette::kBoneSpread * bone_tex(x, y, z)
                          : palette::kTissue + palette::kTissueSpread * tissue_tex(x, y, z);
            break;
          case Label::Support: v = support_mid + support_half * support_tex(x, y, z); break;
          case Label::Metal: v = spec.metal_hu; break;
          default: v = palette::kAir; break;
        }
        hu[idx] = v;
      }
    }
  }

  // Radial sinusoidal streaks around each metal disc, within its frames.
  if (spec.streak_amplitude > 0) {
    const double decay = 5.0;
    const double lobes = 9.0;
    for (const auto& disc : out.metal) {
      double phase = 2 * kPi * unit(rng);
      for (int z = disc.z0; z <= disc.z1; ++z)
        for (int y = 0; y < d.ny; ++y)
          for (int x = 0; x < d.nx; ++x) {
            std::size_t idx = out.truth.index(x, y, z);
            if (out.truth.data()[idx] == Label::Metal) continue;
            double r = std::hypot(x - disc.cx, y - disc.cy);
            double amp = spec.streak_amplitude * std::exp(-std::max(0.0, r - disc.radius) / decay);
            hu[idx] += amp * std::sin(lobes * std::atan2(y - disc.cy, x - disc.cx) + phase);
          }
    }
  }

  std::normal_distribution<double> noise(0.0, spec.noise_sigma > 0 ? spec.noise_sigma : 1.0);
  for (std::size_t i = 0; i < hu.size(); ++i) {
    double v = hu[i];
    if (spec.noise_sigma > 0) v += noise(rng);
    if (out.truth.data()[i] != Label::Metal) v = std::min(v, static_cast<double>(spec.metal_hu) - 600.0);
    out.volume.data()[i] = clamp_hu(v);
  }
  return out;
}

LabelVolume template_to_volume(const Image<Label>& tmpl) {
  if (tmpl.width <= 0 || tmpl.height <= 0) throw InvalidArgument("empty support template");
  LabelVolume v(Dims{tmpl.width, tmpl.height, 1}, Spacing{}, Label::ExteriorAir);
  v.set_frame(0, tmpl);
  return v;
}

Image<Label> volume_to_template(const LabelVolume& v) {
  if (v.dims().nz != 1) throw FormatError("support template must be a single-frame label volume");
  return v.frame_image(0);
}

}  // namespace segd
