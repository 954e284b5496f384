// Batch entry point: one subcommand per stage plus phantom generation, warping,
// evaluation, slice export and the interactive service.

#include <csignal>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "segd/config.hpp"
#include "segd/error.hpp"
#include "segd/evaluation.hpp"
#include "segd/exec.hpp"
#include "segd/geodesic.hpp"
#include "segd/phantom.hpp"
#include "segd/pipeline.hpp"
#include "segd/png_image.hpp"
#include "segd/service.hpp"
#include "segd/slice.hpp"
#include "segd/tps.hpp"
#include "segd/volume_io.hpp"

namespace {

using namespace segd;

struct Globals {
  int jobs = 0;
  std::string config;
  std::optional<std::uint64_t> seed;
};

PipelineConfig load_config(const Globals& g) {
  KeyValues kv;
  if (!g.config.empty()) kv = KeyValues::load(g.config);
  PipelineConfig cfg = PipelineConfig::from(kv);
  if (g.seed) cfg.grabcut.seed = *g.seed;
  return cfg;
}

void load_template(PipelineConfig& cfg, const std::string& path) {
  if (!path.empty()) cfg.preprocess.support_template = volume_to_template(load_labels(path));
}

void write_text(const std::string& path, const std::string& text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::pair<double, double> parse_window(const std::string& s) {
  auto comma = s.find(',');
  if (comma == std::string::npos) throw InvalidArgument("window must be center,width");
  return {std::stod(s.substr(0, comma)), std::stod(s.substr(comma + 1))};
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

void print_summary(const EvalReport& r) {
  std::printf("%s legs %.4f mid-body %.4f head %.4f overall %.4f (%d frames)\n",
              r.variant.empty() ? "body" : r.variant.c_str(), r.legs, r.mid_body, r.head, r.overall,
              r.frames_counted);
}

Service* g_service = nullptr;

extern "C" void on_signal(int) {
  if (g_service) g_service->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wrapped-body CT segmentation toolkit"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  app.fallthrough();  // global options may follow the subcommand
  Globals g;
  app.add_option("--jobs", g.jobs, "Parallel frame/chunk workers (default: all cores)");
  app.add_option("--config", g.config, "key=value settings file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Seed for every random choice (default 0)");

  // phantom
  auto* ph = app.add_subcommand("phantom", "Generate a synthetic volume with ground truth");
  std::string ph_out, ph_gt, ph_tmpl;
  int ph_distractors = 0;
  bool ph_noiseless = false;
  std::vector<int> ph_dims;
  ph->add_option("--out", ph_out, "Volume MVOL")->required();
  ph->add_option("--gt", ph_gt, "Ground-truth label MVOL");
  ph->add_option("--template", ph_tmpl, "Support template MVOL");
  ph->add_option("--distractors", ph_distractors, "Spurious tissue blobs inside the wrap");
  ph->add_flag("--noiseless", ph_noiseless, "Disable noise and metal streaks");
  ph->add_option("--dims", ph_dims, "nx ny nz")->expected(3);

  // preprocess
  auto* pre = app.add_subcommand("preprocess", "Label exterior air, support, metal and hollow space");
  std::string pre_in, pre_out, pre_tmpl, pre_report;
  pre->add_option("--in", pre_in, "Volume MVOL")->required();
  pre->add_option("--out", pre_out, "Label MVOL")->required();
  pre->add_option("--template", pre_tmpl, "Support template MVOL");
  pre->add_option("--report", pre_report, "Air threshold and support boxes");

  // geodesic, grabcut, track
  auto* geo = app.add_subcommand("geodesic", "Split unknown voxels into bandage and body");
  std::string geo_in, geo_labels, geo_out, geo_heat;
  int geo_frame = -1;
  geo->add_option("--in", geo_in, "Volume MVOL")->required();
  geo->add_option("--labels", geo_labels, "Preprocess label MVOL")->required();
  geo->add_option("--out", geo_out, "Label MVOL")->required();
  geo->add_option("--heatmap", geo_heat, "PNG of one frame's geodesic distances (needs --frame)");
  geo->add_option("--frame", geo_frame, "Frame for --heatmap");

  auto* gc = app.add_subcommand("grabcut", "Refine the body with chunked volumetric GrabCut");
  std::string gc_in, gc_labels, gc_out, gc_scribbles;
  gc->add_option("--in", gc_in, "Volume MVOL")->required();
  gc->add_option("--labels", gc_labels, "Geodesic label MVOL")->required();
  gc->add_option("--out", gc_out, "Label MVOL")->required();
  gc->add_option("--scribbles", gc_scribbles, "Scribble file")->check(CLI::ExistingFile);

  auto* trk = app.add_subcommand("track", "Keep only body segments followed by a track");
  std::string trk_labels, trk_out, trk_seeds, trk_scribbles, trk_report;
  bool trk_auto = false;
  trk->add_option("--labels", trk_labels, "GrabCut label MVOL")->required();
  trk->add_option("--out", trk_out, "Label MVOL")->required();
  trk->add_option("--seeds", trk_seeds, "Seed file")->check(CLI::ExistingFile);
  trk->add_option("--scribbles", trk_scribbles, "Scribble file; FG strokes seed tracks")->check(CLI::ExistingFile);
  trk->add_flag("--auto-init", trk_auto, "Start tracks on large unclaimed segments");
  trk->add_option("--report", trk_report, "Track report");

  // pipeline
  auto* pl = app.add_subcommand("pipeline", "Run every stage and write labels, report and plot");
  std::string pl_in, pl_gt, pl_out, pl_tmpl, pl_seeds, pl_scribbles, pl_variant;
  bool pl_auto = false, pl_no_track = false;
  pl->add_option("--in", pl_in, "Volume MVOL")->required();
  pl->add_option("--gt", pl_gt, "Ground-truth label MVOL");
  pl->add_option("--out", pl_out, "Output directory")->required();
  pl->add_option("--template", pl_tmpl, "Support template MVOL");
  pl->add_option("--seeds", pl_seeds, "Seed file")->check(CLI::ExistingFile);
  pl->add_option("--scribbles", pl_scribbles, "Scribble file")->check(CLI::ExistingFile);
  pl->add_flag("--auto-init", pl_auto, "Start tracks on large unclaimed segments");
  pl->add_flag("--no-tracking", pl_no_track, "Stop after GrabCut");
  pl->add_option("--variant", pl_variant, "Tag written into the report");

  // warp
  auto* wp = app.add_subcommand("warp", "Thin-plate-spline warp a volume and its labels");
  std::string wp_in, wp_gt, wp_out, wp_gt_out, wp_points, wp_points_out, wp_set = "single";
  double wp_shift = 8.0;
  wp->add_option("--in", wp_in, "Volume MVOL")->required();
  wp->add_option("--gt", wp_gt, "Label MVOL warped with the same geometry");
  wp->add_option("--out", wp_out, "Warped volume MVOL")->required();
  wp->add_option("--gt-out", wp_gt_out, "Warped label MVOL");
  wp->add_option("--points", wp_points, "Control points x,y,x',y' (default: seeded 3x4 grid)")
      ->check(CLI::ExistingFile);
  wp->add_option("--max-shift", wp_shift, "Perturbation bound of the default grid, px");
  wp->add_option("--write-points", wp_points_out, "Save the control points used");
  wp->add_option("--set", wp_set, "single, or per-frame set 1..4")
      ->check(CLI::IsMember({"single", "1", "2", "3", "4"}));

  // eval
  auto* ev = app.add_subcommand("eval", "Per-frame and per-band body IOU");
  std::string ev_pred, ev_gt, ev_csv, ev_png, ev_variant;
  ev->add_option("--pred", ev_pred, "Predicted label MVOL")->required();
  ev->add_option("--gt", ev_gt, "Ground-truth label MVOL")->required();
  ev->add_option("--csv", ev_csv, "Report CSV");
  ev->add_option("--png", ev_png, "Per-frame IOU plot");
  ev->add_option("--variant", ev_variant, "Tag written into the report");

  // serve
  auto* sv = app.add_subcommand("serve", "Interactive session service");
  std::string sv_project, sv_in, sv_tmpl, sv_host = "127.0.0.1";
  int sv_port = kDefaultPort;
  bool sv_auto = false;
  sv->add_option("--project", sv_project, "Project directory")->required();
  sv->add_option("--in", sv_in, "Volume MVOL (default: <project>/volume.mvol)");
  sv->add_option("--template", sv_tmpl, "Support template MVOL");
  sv->add_option("--host", sv_host, "Bind address");
  sv->add_option("--port", sv_port, "TCP port");
  sv->add_flag("--auto-init", sv_auto, "Tracking starts tracks on large unclaimed segments");

  // export
  auto* ex = app.add_subcommand("export", "Write one slice as PNG");
  std::string ex_in, ex_labels, ex_out, ex_axis = "axial", ex_window = "0,2000";
  int ex_index = 0;
  ex->add_option("--in", ex_in, "Volume MVOL")->required();
  ex->add_option("--labels", ex_labels, "Label MVOL drawn over the slice");
  ex->add_option("--out", ex_out, "PNG path")->required();
  ex->add_option("--axis", ex_axis, "axial, coronal or sagittal");
  ex->add_option("--index", ex_index, "Slice index");
  ex->add_option("--window", ex_window, "center,width in HU");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    set_max_jobs(g.jobs);
    const std::uint64_t seed = g.seed.value_or(0);

    if (*ph) {
      PhantomSpec spec = ph_noiseless ? PhantomSpec::noiseless(seed) : PhantomSpec{};
      spec.seed = seed;
      spec.distractor_count = ph_distractors;
      if (!ph_dims.empty()) spec.dims = Dims{ph_dims[0], ph_dims[1], ph_dims[2]};
      Phantom p = generate_phantom(spec);
      save_volume(p.volume, ph_out);
      if (!ph_gt.empty()) save_labels(p.truth, ph_gt);
      if (!ph_tmpl.empty()) save_labels(template_to_volume(p.support_template), ph_tmpl);
    } else if (*pre) {
      PipelineConfig cfg = load_config(g);
      load_template(cfg, pre_tmpl);
      StageOutput out = run_stage(Stage::Preprocess, load_volume(pre_in), nullptr, cfg, {}, {});
      save_labels(out.labels, pre_out);
      if (!pre_report.empty()) write_text(pre_report, out.report);
    } else if (*geo) {
      PipelineConfig cfg = load_config(g);
      Volume v = load_volume(geo_in);
      LabelVolume prev = load_labels(geo_labels);
      StageOutput out = run_stage(Stage::Geodesic, v, &prev, cfg, {}, {});
      save_labels(out.labels, geo_out);
      if (!geo_heat.empty()) {
        if (geo_frame < 0 || geo_frame >= v.dims().nz) throw RangeError("--heatmap needs a valid --frame");
        write_png(geodesic_heatmap(geodesic_frame(v.frame_image(geo_frame), prev.frame_image(geo_frame), cfg.geodesic)),
                  geo_heat);
      }
    } else if (*gc) {
      PipelineConfig cfg = load_config(g);
      Volume v = load_volume(gc_in);
      LabelVolume prev = load_labels(gc_labels);
      std::vector<ScribbleRecord> scribbles;
      if (!gc_scribbles.empty()) scribbles = load_scribbles(gc_scribbles);
      StageOutput out = run_stage(Stage::GrabCut, v, &prev, cfg, scribbles, {});
      print_warnings(out.warnings);
      save_labels(out.labels, gc_out);
    } else if (*trk) {
      PipelineConfig cfg = load_config(g);
      if (trk_auto) cfg.tracking.auto_init = true;
      LabelVolume prev = load_labels(trk_labels);
      std::vector<SeedPoint> seeds;
      std::vector<ScribbleRecord> scribbles;
      if (!trk_seeds.empty()) seeds = load_seeds(trk_seeds);
      if (!trk_scribbles.empty()) scribbles = load_scribbles(trk_scribbles);
      // Tracking only reads labels; the volume argument just supplies matching dims.
      Volume shape(prev.dims(), prev.spacing());
      StageOutput out = run_stage(Stage::Track, shape, &prev, cfg, scribbles, seeds);
      print_warnings(out.warnings);
      save_labels(out.labels, trk_out);
      if (!trk_report.empty()) write_text(trk_report, out.report);
    } else if (*pl) {
      PipelineConfig cfg = load_config(g);
      load_template(cfg, pl_tmpl);
      if (pl_auto) cfg.tracking.auto_init = true;
      Volume v = load_volume(pl_in);
      std::optional<LabelVolume> gt;
      if (!pl_gt.empty()) gt = load_labels(pl_gt);
      if (gt && !(gt->dims() == v.dims())) throw DimensionMismatch("ground truth does not match the volume");
      std::vector<SeedPoint> seeds;
      std::vector<ScribbleRecord> scribbles;
      if (!pl_seeds.empty()) seeds = load_seeds(pl_seeds);
      if (!pl_scribbles.empty()) scribbles = load_scribbles(pl_scribbles);
      PipelineResult result = run_pipeline(v, cfg, scribbles, seeds, !pl_no_track);
      for (const auto& [stage, out] : result.stages) print_warnings(out.warnings);
      std::string variant = pl_variant.empty() ? (pl_no_track ? "w/o tracking" : "with tracking") : pl_variant;
      write_pipeline_outputs(pl_out, result, gt ? &*gt : nullptr, variant);
      if (gt) print_summary(evaluate(result.final_labels(), *gt, Label::Body, variant));
    } else if (*wp) {
      Volume v = load_volume(wp_in);
      ControlPoints cp = wp_points.empty() ? default_control_points(v.dims().nx, v.dims().ny, seed, wp_shift)
                                           : load_control_points(wp_points);
      if (!wp_points_out.empty()) write_text(wp_points_out, format_control_points(cp));
      int set = *parse_warp_set(wp_set);
      std::vector<WarpFunction> warps;
      if (set == 0) warps.push_back(fit_tps(cp.source, cp.target));
      else warps = make_warp_set(cp.source, cp.target, v.dims().nz, set).functions;
      save_volume(warp_volume(v, warps), wp_out);
      if (!wp_gt.empty()) {
        if (wp_gt_out.empty()) throw InvalidArgument("--gt needs --gt-out");
        save_labels(warp_volume(load_labels(wp_gt), warps), wp_gt_out);
      }
    } else if (*ev) {
      EvalReport r = evaluate(load_labels(ev_pred), load_labels(ev_gt), Label::Body, ev_variant);
      if (!ev_csv.empty()) write_text(ev_csv, format_report_csv(r));
      if (!ev_png.empty()) write_png(plot_reports(std::span(&r, 1)), ev_png);
      print_summary(r);
    } else if (*sv) {
      SessionOptions opt;
      opt.project = sv_project;
      if (!sv_in.empty()) opt.volume = sv_in;
      if (!sv_tmpl.empty()) opt.support_template = sv_tmpl;
      opt.config = load_config(g);
      if (sv_auto) opt.config.tracking.auto_init = true;
      Session session(std::move(opt));
      Service service(session);
      int port = service.bind(sv_host, sv_port);
      std::fprintf(stderr, "serving %s on http://%s:%d\n", sv_project.c_str(), sv_host.c_str(), port);
      g_service = &service;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      service.listen();
      g_service = nullptr;
    } else if (*ex) {
      Volume v = load_volume(ex_in);
      Axis axis = parse_axis(ex_axis);
      auto [center, width] = parse_window(ex_window);
      GrayImage gray = window_to_image(slice(v, axis, ex_index), center, width);
      if (ex_labels.empty()) {
        write_png(gray, ex_out);
      } else {
        LabelVolume labels = load_labels(ex_labels);
        if (!(labels.dims() == v.dims())) throw DimensionMismatch("labels do not match the volume");
        write_png(overlay_labels(gray, slice(labels, axis, ex_index)), ex_out);
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
