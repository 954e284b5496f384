#include "segd/pipeline.hpp"

#include <cmath>

#include "segd/config.hpp"
#include "segd/error.hpp"
#include "segd/evaluation.hpp"
#include "segd/png_image.hpp"
#include "segd/volume_io.hpp"

namespace segd {

namespace {

std::string preprocess_report(const PreprocessResult& r) {
  std::string out = "air_threshold," + std::to_string(r.air_threshold) + "\n";
  out += "metal_components," + std::to_string(r.metal.size()) + "\n";
  out += "# frame,x0,y0,x1,y1\n";
  for (std::size_t z = 0; z < r.support_boxes.size(); ++z) {
    if (!r.support_boxes[z]) continue;
    const PixelBox& b = *r.support_boxes[z];
    out += std::to_string(z) + "," + std::to_string(b.x0) + "," + std::to_string(b.y0) + "," + std::to_string(b.x1) +
           "," + std::to_string(b.y1) + "\n";
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace

std::string_view stage_name(Stage s) {
  switch (s) {
    case Stage::Preprocess: return "preprocess";
    case Stage::Geodesic: return "geodesic";
    case Stage::GrabCut: return "grabcut";
    case Stage::Track: return "track";
  }
  return "?";
}

std::optional<Stage> parse_stage(std::string_view name) {
  for (Stage s : kStages)
    if (stage_name(s) == name) return s;
  return std::nullopt;
}

std::optional<Stage> stage_prerequisite(Stage s) {
  switch (s) {
    case Stage::Preprocess: return std::nullopt;
    case Stage::Geodesic: return Stage::Preprocess;
    case Stage::GrabCut: return Stage::Geodesic;
    case Stage::Track: return Stage::GrabCut;
  }
  return std::nullopt;
}

std::string stage_file(Stage s) { return std::string(stage_name(s)) + ".mvol"; }

PipelineConfig PipelineConfig::from(const KeyValues& kv) {
  PipelineConfig c;
  c.preprocess.apply(kv);
  c.geodesic.apply(kv);
  c.grabcut.apply(kv);
  c.tracking.apply(kv);
  kv.reject_unconsumed();
  c.validate();
  return c;
}

void PipelineConfig::validate() const {
  preprocess.validate();
  geodesic.validate();
  grabcut.validate();
  tracking.validate();
}

std::vector<SeedPoint> seeds_from_scribbles(const std::vector<ScribbleRecord>& records) {
  std::vector<SeedPoint> out;
  for (const auto& r : records) {
    if (r.cls != ScribbleClass::Fg || r.points.empty()) continue;
    out.push_back(SeedPoint{r.frame, static_cast<int>(std::lround(r.points[0].x)),
                            static_cast<int>(std::lround(r.points[0].y))});
  }
  return out;
}

StageOutput run_stage(Stage s, const Volume& v, const LabelVolume* previous, const PipelineConfig& cfg,
                      const std::vector<ScribbleRecord>& scribbles, const std::vector<SeedPoint>& seeds, Exec exec,
                      const ProgressFn& progress) {
  if (s != Stage::Preprocess) {
    if (!previous) throw PrerequisiteError(std::string(stage_name(s)) + " needs the output of " +
                                           std::string(stage_name(*stage_prerequisite(s))));
    if (!(previous->dims() == v.dims())) throw DimensionMismatch("stage input labels do not match the volume");
  }
  StageOutput out{LabelVolume(Dims{1, 1, 1}, Spacing{}), {}, {}};
  switch (s) {
    case Stage::Preprocess: {
      PreprocessResult r = run_preprocess(v, cfg.preprocess, exec, progress);
      out.report = preprocess_report(r);
      out.labels = std::move(r.labels);
      break;
    }
    case Stage::Geodesic:
      out.labels = geodesic_stage(v, *previous, cfg.geodesic, exec, progress);
      break;
    case Stage::GrabCut: {
      RasterizedScribbles raster = rasterize_scribbles(scribbles, v.dims());
      out.warnings = std::move(raster.warnings);
      bool any = raster.map.count(HardLabel::Fg) + raster.map.count(HardLabel::Bg) > 0;
      out.labels = grabcut_volume(v, *previous, any ? &raster.map : nullptr, cfg.grabcut, exec, progress);
      break;
    }
    case Stage::Track: {
      std::vector<SeedPoint> all = seeds;
      for (const SeedPoint& p : seeds_from_scribbles(scribbles)) all.push_back(p);
      TrackingResult r = run_tracking(*previous, all, cfg.tracking);
      out.report = format_track_report(r.tracks);
      out.warnings = std::move(r.warnings);
      out.labels = std::move(r.labels);
      if (progress) progress(1.0);
      break;
    }
  }
  return out;
}

PipelineResult run_pipeline(const Volume& v, const PipelineConfig& cfg, const std::vector<ScribbleRecord>& scribbles,
                            const std::vector<SeedPoint>& seeds, bool with_tracking, Exec exec,
                            const ProgressFn& progress) {
  // Rough share of wall time per stage, so the reported fraction moves evenly.
  static constexpr double kWeight[4] = {0.02, 0.35, 0.62, 0.01};
  PipelineResult result;
  result.stages.reserve(kStages.size());  // `previous` points into this vector
  double done = 0.0;
  const LabelVolume* previous = nullptr;
  for (Stage s : kStages) {
    if (s == Stage::Track && !with_tracking) break;
    double w = kWeight[static_cast<int>(s)];
    ProgressFn scaled;
    if (progress) scaled = [&, base = done, w](double f) { progress(std::min(1.0, base + w * f)); };
    result.stages.emplace_back(s, run_stage(s, v, previous, cfg, scribbles, seeds, exec, scaled));
    previous = &result.stages.back().second.labels;
    done += w;
  }
  if (progress) progress(1.0);
  return result;
}

void write_pipeline_outputs(const std::filesystem::path& dir, const PipelineResult& result, const LabelVolume* gt,
                            const std::string& variant) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  for (const auto& [stage, out] : result.stages) {
    save_labels(out.labels, dir / stage_file(stage));
    if (!out.report.empty()) write_text(dir / (std::string(stage_name(stage)) + ".txt"), out.report);
  }
  save_labels(result.final_labels(), dir / "labels.mvol");
  if (!gt) return;
  EvalReport report = evaluate(result.final_labels(), *gt, Label::Body, variant);
  write_text(dir / "report.csv", format_report_csv(report));
  write_png(plot_reports(std::span(&report, 1)), dir / "iou.png");
}

}  // namespace segd
