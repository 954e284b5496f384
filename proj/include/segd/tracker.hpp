#pragma once

#include <cstddef>
#include <deque>
#include <string>
#include <vector>

#include "segd/scribbles.hpp"
#include "segd/volume.hpp"

namespace segd {

class KeyValues;

// 8-connected BODY component of one frame.
struct Segment {
  int frame = 0;
  std::vector<int> pixels;  // sorted in-frame indices y * width + x
  double cx = 0.0, cy = 0.0;
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // inclusive bounding box
  int width = 0;                       // frame width the indices refer to

  std::size_t area() const { return pixels.size(); }
  bool contains(int x, int y) const;
};

// Components in raster order of their first pixel; components below min_px are dropped.
std::vector<Segment> extract_segments(const Mask& mask, int frame, int min_px = 5);

// IoU of two sorted pixel-index sets.
double pixel_iou(const std::vector<int>& a, const std::vector<int>& b);
double pixel_iou(const Segment& a, const Segment& b);

enum class TrackOrigin { Seed, Auto };

struct Track {
  int id = 0;
  TrackOrigin origin = TrackOrigin::Seed;
  int start_frame = 0;
  int end_frame = 0;  // last frame with an assigned segment
  bool active = true;
  std::deque<Segment> history;  // most recent first, at most M entries
  std::vector<std::size_t> areas;  // per frame from start_frame
};

// Mean IoU between s and every history entry.
double similarity(const std::deque<Segment>& history, const Segment& s);

// Greedy one-to-one assignment of active tracks to the next frame's segments.
// Returns the owning track id per segment (-1 if none). Unassigned tracks cease.
std::vector<int> step_tracks(std::vector<Track>& tracks, const std::vector<Segment>& segments, double epsilon,
                             int history);

// New track over the segment containing (x, y); the history holds `history` copies
// of it. Throws SeedMiss if no segment contains the point.
Track seed_track(int id, int frame, int x, int y, const std::vector<Segment>& segments, int history);

struct TrackingConfig {
  double epsilon = 0.1;
  int history = 4;
  bool auto_init = false;
  int min_track_area = 200;  // auto-init threshold
  int min_segment_px = 5;

  void apply(const KeyValues& kv);
  void validate() const;
};

struct TrackingResult {
  LabelVolume labels;
  std::vector<Track> tracks;
  std::vector<std::string> warnings;  // seeds that hit no segment
};

// Forward pass over frames. BODY pixels outside every tracked segment become BANDAGE.
// Throws NoTracksError when there are no seeds and auto-init is off.
TrackingResult run_tracking(const LabelVolume& labels, const std::vector<SeedPoint>& seeds, const TrackingConfig& cfg);

// Plain-text report: per-track origin and frame span, then per-frame areas.
std::string format_track_report(const std::vector<Track>& tracks);

}  // namespace segd
