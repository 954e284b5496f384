#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "segd/exec.hpp"
#include "segd/geodesic.hpp"
#include "segd/grabcut.hpp"
#include "segd/preprocess.hpp"
#include "segd/scribbles.hpp"
#include "segd/tracker.hpp"
#include "segd/volume.hpp"

namespace segd {

class KeyValues;

enum class Stage { Preprocess, Geodesic, GrabCut, Track };

inline constexpr std::array<Stage, 4> kStages = {Stage::Preprocess, Stage::Geodesic, Stage::GrabCut, Stage::Track};

std::string_view stage_name(Stage s);
std::optional<Stage> parse_stage(std::string_view name);
std::optional<Stage> stage_prerequisite(Stage s);
// "<name>.mvol"
std::string stage_file(Stage s);

struct PipelineConfig {
  PreprocessConfig preprocess;
  GeodesicConfig geodesic;
  GrabCutConfig grabcut;
  TrackingConfig tracking;

  // Reads every stage's keys and rejects keys no stage knows.
  static PipelineConfig from(const KeyValues& kv);
  void validate() const;
};

struct StageOutput {
  LabelVolume labels;
  std::string report;  // plain-text sidecar; empty for stages without one
  std::vector<std::string> warnings;
};

// FG scribbles double as track seeds at their first point.
std::vector<SeedPoint> seeds_from_scribbles(const std::vector<ScribbleRecord>& records);

// Runs one stage on the previous stage's labels (ignored for preprocess).
StageOutput run_stage(Stage s, const Volume& v, const LabelVolume* previous, const PipelineConfig& cfg,
                      const std::vector<ScribbleRecord>& scribbles, const std::vector<SeedPoint>& seeds,
                      Exec exec = Exec::Parallel, const ProgressFn& progress = {});

struct PipelineResult {
  std::vector<std::pair<Stage, StageOutput>> stages;  // in run order
  const LabelVolume& final_labels() const { return stages.back().second.labels; }
};

// Preprocess through grabcut, then tracking when `with_tracking` is set.
PipelineResult run_pipeline(const Volume& v, const PipelineConfig& cfg, const std::vector<ScribbleRecord>& scribbles,
                            const std::vector<SeedPoint>& seeds, bool with_tracking = true,
                            Exec exec = Exec::Parallel, const ProgressFn& progress = {});

// Stage volumes and sidecars, plus labels.mvol. With ground truth, also report.csv and iou.png.
void write_pipeline_outputs(const std::filesystem::path& dir, const PipelineResult& result, const LabelVolume* gt,
                            const std::string& variant);

}  // namespace segd
