#include "segd/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "segd/error.hpp"

namespace segd {

namespace {

std::string shortest(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

double mean_or_nan(double sum, int n) { return n > 0 ? sum / n : std::numeric_limits<double>::quiet_NaN(); }

void put(RgbImage& img, int x, int y, Rgb c) {
  if (img.contains(x, y)) img.at(x, y) = c;
}

void draw_line(RgbImage& img, int x0, int y0, int x1, int y1, Rgb c) {
  int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
  int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  while (true) {
    put(img, x0, y0, c);
    if (x0 == x1 && y0 == y1) break;
    int e2 = 2 * err;
    if (e2 >= dy) err += dy, x0 += sx;
    if (e2 <= dx) err += dx, y0 += sy;
  }
}

}  // namespace

double iou(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt) {
  if (pred.size() != gt.size()) throw DimensionMismatch("masks differ in size");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    bool p = pred[i] != 0, g = gt[i] != 0;
    inter += p && g;
    uni += p || g;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double iou(const Mask& pred, const Mask& gt) {
  if (pred.width != gt.width || pred.height != gt.height) throw DimensionMismatch("masks differ in size");
  return iou(std::span<const std::uint8_t>(pred.pixels), std::span<const std::uint8_t>(gt.pixels));
}

int band_of(int z, int nz) { return static_cast<int>((3LL * z) / nz); }

EvalReport evaluate(const LabelVolume& pred, const LabelVolume& gt, Label label, std::string variant, Exec exec) {
  if (!(pred.dims() == gt.dims())) throw DimensionMismatch("prediction and ground truth dimensions differ");
  const Dims d = gt.dims();
  EvalReport r;
  r.variant = std::move(variant);
  r.label = label;
  r.frame_iou.assign(d.nz, 1.0);
  r.counted.assign(d.nz, 0);
  for_each_index(exec, d.nz, [&](int z) {
    Mask p = pred.class_mask(z, label);
    Mask g = gt.class_mask(z, label);
    r.frame_iou[z] = iou(p, g);
    r.counted[z] = std::any_of(g.pixels.begin(), g.pixels.end(), [](std::uint8_t v) { return v != 0; });
  });
  double band_sum[3] = {0, 0, 0};
  int band_n[3] = {0, 0, 0};
  double total = 0.0;
  for (int z = 0; z < d.nz; ++z) {
    if (!r.counted[z]) continue;
    int b = band_of(z, d.nz);
    band_sum[b] += r.frame_iou[z];
    ++band_n[b];
    total += r.frame_iou[z];
    ++r.frames_counted;
  }
  r.legs = mean_or_nan(band_sum[0], band_n[0]);
  r.mid_body = mean_or_nan(band_sum[1], band_n[1]);
  r.head = mean_or_nan(band_sum[2], band_n[2]);
  r.overall = mean_or_nan(total, r.frames_counted);
  return r;
}

std::string format_report_csv(const EvalReport& r) {
  std::string out = "frame,iou\n";
  for (std::size_t z = 0; z < r.frame_iou.size(); ++z) {
    out += std::to_string(z) + "," + shortest(r.frame_iou[z]);
    if (!r.counted[z]) out += ",excluded";
    out += "\n";
  }
  out += "\n# summary\n";
  out += "variant," + r.variant + "\n";
  out += "class," + std::string(label_name(r.label)) + "\n";
  out += "frames_counted," + std::to_string(r.frames_counted) + "\n";
  out += "legs," + shortest(r.legs) + "\n";
  out += "mid_body," + shortest(r.mid_body) + "\n";
  out += "head," + shortest(r.head) + "\n";
  out += "overall," + shortest(r.overall) + "\n";
  return out;
}

RgbImage plot_reports(std::span<const EvalReport> reports, int width, int height) {
  if (width < 64 || height < 64) throw InvalidArgument("plot is too small");
  const Rgb white{255, 255, 255}, axis{40, 40, 40}, grid{215, 215, 215};
  static constexpr Rgb palette[] = {{31, 119, 180}, {214, 39, 40}, {44, 160, 44}, {148, 103, 189}, {255, 127, 14}};
  RgbImage img(width, height, white);
  const int left = 32, right = width - 12, top = 12, bottom = height - 24;
  std::size_t frames = 0;
  for (const auto& r : reports) frames = std::max(frames, r.frame_iou.size());

  auto px = [&](double z) {
    double span = frames > 1 ? static_cast<double>(frames - 1) : 1.0;
    return left + static_cast<int>(std::lround(z / span * (right - left)));
  };
  auto py = [&](double v) { return bottom - static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * (bottom - top))); };

  for (int k = 0; k <= 10; ++k) draw_line(img, left, py(k / 10.0), right, py(k / 10.0), grid);
  // Band boundaries, dashed.
  for (int b = 1; b < 3 && frames > 0; ++b) {
    int x = px(std::ceil(b * static_cast<double>(frames) / 3.0) - 0.5);
    for (int y = top; y <= bottom; ++y)
      if ((y / 4) % 2 == 0) put(img, x, y, axis);
  }
  draw_line(img, left, top, left, bottom, axis);
  draw_line(img, left, bottom, right, bottom, axis);
  for (int k = 0; k <= 10; ++k) draw_line(img, left - (k % 5 == 0 ? 6 : 3), py(k / 10.0), left, py(k / 10.0), axis);

  for (std::size_t i = 0; i < reports.size(); ++i) {
    const EvalReport& r = reports[i];
    Rgb c = palette[i % std::size(palette)];
    int prev = -1;
    for (std::size_t z = 0; z < r.frame_iou.size(); ++z) {
      if (!r.counted[z]) {
        prev = -1;
        continue;
      }
      int x = px(static_cast<double>(z)), y = py(r.frame_iou[z]);
      if (prev >= 0) {
        draw_line(img, px(static_cast<double>(z - 1)), py(r.frame_iou[z - 1]), x, y, c);
        draw_line(img, px(static_cast<double>(z - 1)), py(r.frame_iou[z - 1]) + 1, x, y + 1, c);
      } else {
        put(img, x, y, c);
      }
      prev = static_cast<int>(z);
    }
  }
  return img;
}

}  // namespace segd
