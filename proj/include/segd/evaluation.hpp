#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "segd/exec.hpp"
#include "segd/slice.hpp"
#include "segd/volume.hpp"

namespace segd {

// |P ∩ G| / |P ∪ G| over nonzero entries; 1 when both are empty.
double iou(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt);
double iou(const Mask& pred, const Mask& gt);

struct EvalReport {
  std::string variant;  // free-form tag, e.g. "w/o tracking"
  Label label = Label::Body;
  std::vector<double> frame_iou;
  std::vector<std::uint8_t> counted;  // 1 where the ground truth has the class
  // Means over counted frames; NaN for a band without counted frames.
  double legs = 0.0;      // lower third of the frame range
  double mid_body = 0.0;  // middle third
  double head = 0.0;      // upper third
  double overall = 0.0;
  int frames_counted = 0;
};

// Band 0, 1 or 2 for frame z of nz: equal thirds, floor(3 z / nz).
int band_of(int z, int nz);

EvalReport evaluate(const LabelVolume& pred, const LabelVolume& gt, Label label = Label::Body,
                    std::string variant = "", Exec exec = Exec::Parallel);

// "frame,iou" rows, then a summary block. Values use the shortest exact decimal form.
std::string format_report_csv(const EvalReport& report);

// Per-frame IOU curves, one color per report, with band separators.
RgbImage plot_reports(std::span<const EvalReport> reports, int width = 720, int height = 320);

}  // namespace segd
