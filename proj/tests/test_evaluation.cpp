#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "segd/error.hpp"
#include "segd/evaluation.hpp"
#include "segd/png_image.hpp"

using namespace segd;

namespace {

LabelVolume random_labels(std::uint64_t seed, Dims d, double p_body) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution body(p_body);
  LabelVolume l(d, Spacing{}, Label::Bandage);
  for (Label& x : l.data()) x = body(rng) ? Label::Body : Label::Bandage;
  return l;
}

}  // namespace

TEST(Iou, Examples) {
  Mask a(4, 4, 1);
  EXPECT_EQ(iou(a, a), 1.0);
  Mask left(4, 4, 0), right(4, 4, 0);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 2; ++x) {
      left.at(x, y) = 1;
      right.at(x + 2, y) = 1;
    }
  EXPECT_EQ(iou(left, right), 0.0);
  EXPECT_EQ(iou(left, a), 0.5);
  EXPECT_EQ(iou(Mask(3, 3, 0), Mask(3, 3, 0)), 1.0);
  EXPECT_THROW(iou(Mask(3, 3), Mask(3, 4)), DimensionMismatch);
}

TEST(Iou, SymmetricAndOneIffEqual) {
  std::mt19937_64 rng(1);
  std::bernoulli_distribution on(0.5);
  for (int trial = 0; trial < 100; ++trial) {
    Mask a(5, 5), b(5, 5);
    for (auto& p : a.pixels) p = on(rng);
    for (auto& p : b.pixels) p = on(rng);
    double ab = iou(a, b);
    EXPECT_EQ(ab, iou(b, a));
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 1.0);
    EXPECT_EQ(ab == 1.0, a == b);
  }
}

TEST(Evaluate, PerfectPrediction) {
  LabelVolume gt = random_labels(2, Dims{8, 8, 9}, 0.3);
  EvalReport r = evaluate(gt, gt, Label::Body, "self");
  for (double v : r.frame_iou) EXPECT_EQ(v, 1.0);
  EXPECT_EQ(r.legs, 1.0);
  EXPECT_EQ(r.mid_body, 1.0);
  EXPECT_EQ(r.head, 1.0);
  EXPECT_EQ(r.overall, 1.0);
  EXPECT_EQ(r.variant, "self");
}

TEST(Evaluate, BandsRecomputeFromSeries) {
  Dims d{10, 10, 14};
  LabelVolume gt = random_labels(3, d, 0.4);
  LabelVolume pred = random_labels(4, d, 0.4);
  // Frame 5 without ground-truth body: excluded from averages.
  for (int y = 0; y < d.ny; ++y)
    for (int x = 0; x < d.nx; ++x) gt.at(x, y, 5) = Label::Bandage;
  EvalReport r = evaluate(pred, gt);
  EXPECT_EQ(r.counted[5], 0);
  EXPECT_EQ(r.frames_counted, 13);
  double sum[3] = {0, 0, 0}, total = 0;
  int n[3] = {0, 0, 0};
  for (int z = 0; z < d.nz; ++z) {
    EXPECT_GE(r.frame_iou[z], 0.0);
    EXPECT_LE(r.frame_iou[z], 1.0);
    if (z == 5) continue;
    int b = z * 3 / d.nz;
    sum[b] += r.frame_iou[z];
    ++n[b];
    total += r.frame_iou[z];
  }
  EXPECT_DOUBLE_EQ(r.legs, sum[0] / n[0]);
  EXPECT_DOUBLE_EQ(r.mid_body, sum[1] / n[1]);
  EXPECT_DOUBLE_EQ(r.head, sum[2] / n[2]);
  EXPECT_DOUBLE_EQ(r.overall, total / 13);
  // Serial and parallel agree bit for bit.
  EvalReport s = evaluate(pred, gt, Label::Body, "", Exec::Serial);
  EXPECT_EQ(s.frame_iou, r.frame_iou);
}

TEST(Evaluate, BandBoundaries) {
  EXPECT_EQ(band_of(0, 120), 0);
  EXPECT_EQ(band_of(39, 120), 0);
  EXPECT_EQ(band_of(40, 120), 1);
  EXPECT_EQ(band_of(80, 120), 2);
  EXPECT_EQ(band_of(119, 120), 2);
}

TEST(Evaluate, EmptyBandIsNan) {
  Dims d{4, 4, 3};
  LabelVolume gt(d, Spacing{}, Label::Bandage);
  gt.at(1, 1, 0) = Label::Body;
  EvalReport r = evaluate(gt, gt);
  EXPECT_EQ(r.legs, 1.0);
  EXPECT_TRUE(std::isnan(r.mid_body));
  EXPECT_TRUE(std::isnan(r.head));
}

TEST(Evaluate, DimensionMismatch) {
  EXPECT_THROW(evaluate(LabelVolume(Dims{2, 2, 2}, Spacing{}), LabelVolume(Dims{2, 2, 3}, Spacing{})),
               DimensionMismatch);
}

TEST(ReportCsv, Layout) {
  Dims d{2, 1, 3};
  LabelVolume gt(d, Spacing{}, Label::Bandage), pred(d, Spacing{}, Label::Bandage);
  gt.at(0, 0, 0) = gt.at(1, 0, 0) = Label::Body;
  pred.at(0, 0, 0) = Label::Body;
  gt.at(0, 0, 2) = pred.at(0, 0, 2) = Label::Body;
  EvalReport r = evaluate(pred, gt, Label::Body, "w/o tracking");
  EXPECT_EQ(format_report_csv(r),
            "frame,iou\n0,0.5\n1,1,excluded\n2,1\n\n# summary\nvariant,w/o tracking\nclass,BODY\n"
            "frames_counted,2\nlegs,0.5\nmid_body,nan\nhead,1\noverall,0.75\n");
}

TEST(Plot, SizeAndCurvesDrawn) {
  LabelVolume gt = random_labels(5, Dims{6, 6, 30}, 0.5);
  EvalReport a = evaluate(gt, gt, Label::Body, "a");
  EvalReport b = evaluate(random_labels(6, gt.dims(), 0.5), gt, Label::Body, "b");
  std::vector<EvalReport> both = {a, b};
  RgbImage img = plot_reports(both);
  EXPECT_EQ(img.width, 720);
  EXPECT_EQ(img.height, 320);
  int first = 0, second = 0;
  for (const Rgb& p : img.pixels) {
    first += p == Rgb{31, 119, 180};
    second += p == Rgb{214, 39, 40};
  }
  EXPECT_GT(first, 100);
  EXPECT_GT(second, 100);
  DecodedPng png = decode_png(encode_png(img));
  EXPECT_EQ(png.channels, 3);
  EXPECT_THROW(plot_reports(both, 10, 10), InvalidArgument);
}
