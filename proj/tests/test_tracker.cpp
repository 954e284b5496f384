#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "segd/error.hpp"
#include "segd/phantom.hpp"
#include "segd/tracker.hpp"
#include "support.hpp"

using namespace segd;

namespace {

Mask rect_mask(int w, int h, int x0, int y0, int x1, int y1) {
  Mask m(w, h, 0);
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) m.at(x, y) = 1;
  return m;
}

Segment rect(int frame, int x0, int y0, int x1, int y1, int w = 40, int h = 40) {
  auto s = extract_segments(rect_mask(w, h, x0, y0, x1, y1), frame, 1);
  return s.at(0);
}

// Union-find over 8-neighbour pairs: component sizes, sorted.
std::vector<int> component_sizes(const Mask& m) {
  const int n = m.width * m.height;
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x) {
      if (!m.at(x, y)) continue;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
          if (m.contains(x + dx, y + dy) && m.at(x + dx, y + dy))
            parent[find(static_cast<int>(m.index(x, y)))] = find(static_cast<int>(m.index(x + dx, y + dy)));
    }
  std::vector<int> count(n, 0);
  for (int i = 0; i < n; ++i)
    if (m.pixels[i]) ++count[find(i)];
  std::vector<int> sizes;
  for (int c : count)
    if (c) sizes.push_back(c);
  std::sort(sizes.begin(), sizes.end());
  return sizes;
}

}  // namespace

TEST(Segments, TwoDisjointBlobs) {
  Mask m = rect_mask(20, 20, 1, 1, 4, 4);
  for (int y = 10; y < 14; ++y)
    for (int x = 10; x < 14; ++x) m.at(x, y) = 1;
  auto s = extract_segments(m, 0);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].area(), 16u);
  EXPECT_DOUBLE_EQ(s[0].cx, 2.5);
  EXPECT_DOUBLE_EQ(s[1].cy, 11.5);
}

TEST(Segments, EmptyMask) { EXPECT_TRUE(extract_segments(Mask(5, 5, 0), 0).empty()); }

TEST(Segments, LShapeAndSmallDropped) {
  Mask m(12, 12, 0);
  for (int y = 0; y < 8; ++y) m.at(2, y) = 1;
  for (int x = 2; x < 9; ++x) m.at(x, 7) = 1;
  m.at(11, 0) = 1;  // 1 px, dropped
  auto s = extract_segments(m, 0);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].area(), 14u);
}

TEST(Segments, MatchUnionFindOracle) {
  std::mt19937_64 rng(41);
  std::bernoulli_distribution on(0.45);
  for (int trial = 0; trial < 30; ++trial) {
    Mask m(17, 13, 0);
    for (auto& p : m.pixels) p = on(rng);
    std::vector<int> got;
    for (const auto& s : extract_segments(m, 0, 1)) got.push_back(static_cast<int>(s.area()));
    std::sort(got.begin(), got.end());
    EXPECT_EQ(got, component_sizes(m));
  }
}

TEST(Similarity, Examples) {
  Segment s = rect(0, 0, 0, 9, 9);
  std::deque<Segment> same(4, s);
  EXPECT_DOUBLE_EQ(similarity(same, s), 1.0);
  std::deque<Segment> far(2, rect(0, 20, 20, 25, 25));
  EXPECT_DOUBLE_EQ(similarity(far, s), 0.0);
  // A is 200 px containing s (IoU 0.5); B is a quarter of s (IoU 0.25).
  Segment a = rect(0, 0, 0, 9, 19);
  Segment b = rect(0, 0, 0, 4, 4);
  EXPECT_DOUBLE_EQ(pixel_iou(a, s), 0.5);
  EXPECT_DOUBLE_EQ(pixel_iou(b, s), 0.25);
  EXPECT_DOUBLE_EQ(similarity({a, b}, s), 0.375);
}

TEST(StepTracks, IdenticalSegmentAssigned) {
  Segment s = rect(0, 5, 5, 12, 12);
  std::vector<Track> tracks = {seed_track(1, 0, 6, 6, {s}, 4)};
  Segment next = rect(1, 5, 5, 12, 12);
  auto owner = step_tracks(tracks, {next}, 0.1, 4);
  EXPECT_EQ(owner, std::vector<int>{1});
  EXPECT_TRUE(tracks[0].active);
  EXPECT_EQ(tracks[0].end_frame, 1);
}

TEST(StepTracks, TrackCeasesBelowEpsilon) {
  Segment s = rect(0, 0, 0, 9, 9);
  std::vector<Track> tracks = {seed_track(1, 0, 1, 1, {s}, 4)};
  // Overlap 1 column of 10: IoU = 10 / 190.
  Segment shifted = rect(1, 9, 0, 18, 9);
  auto owner = step_tracks(tracks, {shifted}, 0.1, 4);
  EXPECT_EQ(owner, std::vector<int>{-1});
  EXPECT_FALSE(tracks[0].active);
  // A ceased track never reactivates.
  step_tracks(tracks, {rect(2, 0, 0, 9, 9)}, 0.1, 4);
  EXPECT_FALSE(tracks[0].active);
  EXPECT_EQ(tracks[0].end_frame, 0);
}

TEST(StepTracks, GreedyHigherScoreWins) {
  Segment a = rect(0, 0, 0, 9, 9);
  Segment b = rect(0, 2, 0, 11, 9);
  std::vector<Track> tracks = {seed_track(1, 0, 0, 0, {a}, 4), seed_track(2, 0, 11, 0, {b}, 4)};
  Segment target = rect(1, 2, 0, 11, 9);  // identical to b, IoU 80/120 with a
  auto owner = step_tracks(tracks, {target}, 0.1, 4);
  EXPECT_EQ(owner, std::vector<int>{2});
  EXPECT_FALSE(tracks[0].active);
  EXPECT_TRUE(tracks[1].active);
}

TEST(StepTracks, TwoByTwoGreedyOrder) {
  // Scores: t1-s1 = 0.9, t2-s1 = 0.89, t1-s2 = 0.6, t2-s2 = 0.4.
  // Greedy takes t1-s1, skips t2-s1 (segment used), skips t1-s2 (track used), then t2-s2.
  Segment t1 = rect(0, 0, 0, 9, 9);
  Segment s1 = rect(1, 1, 0, 9, 9);
  Segment t2 = rect(0, 2, 0, 9, 9);
  Segment s2 = rect(1, 0, 0, 5, 9);
  std::vector<Track> tracks = {seed_track(1, 0, 0, 0, {t1}, 4), seed_track(2, 0, 9, 9, {t2}, 4)};
  auto owner = step_tracks(tracks, {s1, s2}, 0.1, 4);
  EXPECT_EQ(owner, (std::vector<int>{1, 2}));
}

TEST(SeedTrack, InsideAndMiss) {
  Segment s = rect(3, 5, 5, 10, 10);
  Track t = seed_track(7, 3, 6, 6, {s}, 4);
  EXPECT_EQ(t.start_frame, 3);
  EXPECT_EQ(t.history.size(), 4u);
  for (const auto& h : t.history) EXPECT_EQ(h.pixels, s.pixels);
  EXPECT_THROW(seed_track(8, 3, 0, 0, {s}, 4), SeedMiss);
}

// History is seeded with M copies and then slides: after k steps the k most recent
// chosen segments lead, padded by copies of the seed segment.
TEST(Tracking, HistoryWindowSlides) {
  std::vector<Track> tracks = {seed_track(1, 0, 5, 5, {rect(0, 4, 4, 13, 13)}, 3)};
  for (int k = 1; k <= 5; ++k) {
    step_tracks(tracks, {rect(k, 4 + k % 2, 4, 13 + k % 2, 13)}, 0.1, 3);
    ASSERT_EQ(tracks[0].history.size(), 3u);
    EXPECT_EQ(tracks[0].history.front().frame, k);
    for (std::size_t i = 1; i < 3; ++i) EXPECT_EQ(tracks[0].history[i].frame, std::max(0, k - static_cast<int>(i)));
  }
}

TEST(Tracking, NoSeedsNoAutoInitThrows) {
  LabelVolume l(Dims{10, 10, 3}, Spacing{}, Label::Bandage);
  EXPECT_THROW(run_tracking(l, {}, TrackingConfig{}), NoTracksError);
}

TEST(Tracking, AllSegmentsTrackedLeavesInputUnchanged) {
  LabelVolume l(Dims{20, 20, 6}, Spacing{}, Label::Bandage);
  for (int z = 0; z < 6; ++z)
    for (int y = 5; y < 12; ++y)
      for (int x = 5; x < 12; ++x) l.at(x, y, z) = Label::Body;
  TrackingResult r = run_tracking(l, {{0, 7, 7}}, TrackingConfig{});
  EXPECT_EQ(r.labels, l);
  ASSERT_EQ(r.tracks.size(), 1u);
  EXPECT_EQ(r.tracks[0].end_frame, 5);
}

TEST(Tracking, SeedAtLaterFrameStartsThere) {
  LabelVolume l(Dims{20, 20, 6}, Spacing{}, Label::Bandage);
  for (int z = 0; z < 6; ++z)
    for (int y = 5; y < 12; ++y)
      for (int x = 5; x < 12; ++x) l.at(x, y, z) = Label::Body;
  TrackingResult r = run_tracking(l, {{3, 7, 7}}, TrackingConfig{});
  ASSERT_EQ(r.tracks.size(), 1u);
  EXPECT_EQ(r.tracks[0].start_frame, 3);
  for (int z = 0; z < 3; ++z) EXPECT_EQ(r.labels.class_mask(z, Label::Body), Mask(20, 20, 0));
  for (int z = 3; z < 6; ++z) EXPECT_EQ(r.labels.class_mask(z, Label::Body), l.class_mask(z, Label::Body));
}

TEST(Tracking, MissedSeedWarns) {
  LabelVolume l(Dims{20, 20, 2}, Spacing{}, Label::Bandage);
  TrackingConfig cfg;
  TrackingResult r = run_tracking(l, {{0, 1, 1}, {9, 1, 1}}, cfg);
  EXPECT_EQ(r.warnings.size(), 2u);
}

TEST(Tracking, DistractorBlobsRemovedBodyKept) {
  PhantomSpec spec = PhantomSpec::with_distractors(1, 12);
  spec.dims = segd::testing::small_spec().dims;
  spec.shell_min = 4;
  spec.shell_max = 6;
  spec.metal_radius = 2;
  Phantom p = generate_phantom(spec);
  ASSERT_FALSE(p.distractors.empty());
  // Ground truth with the distractor blobs marked as body, as a stage output would.
  LabelVolume noisy = p.truth;
  for (const Distractor& dd : p.distractors)
    for (int z = dd.z0; z <= dd.z1; ++z)
      for (int y = dd.y - dd.radius; y <= dd.y + dd.radius; ++y)
        for (int x = dd.x - dd.radius; x <= dd.x + dd.radius; ++x)
          if ((x - dd.x) * (x - dd.x) + (y - dd.y) * (y - dd.y) <= dd.radius * dd.radius &&
              noisy.at(x, y, z) == Label::Bandage)
            noisy.at(x, y, z) = Label::Body;
  TrackingConfig cfg;
  cfg.auto_init = true;
  cfg.min_track_area = 60;
  TrackingResult r = run_tracking(noisy, {}, cfg);
  double before = segd::testing::class_iou(noisy, p.truth, Label::Body);
  double after = segd::testing::class_iou(r.labels, p.truth, Label::Body);
  EXPECT_GE(after, before);
  // Tracking only removes body.
  for (std::size_t i = 0; i < noisy.data().size(); ++i)
    if (r.labels.data()[i] == Label::Body) ASSERT_EQ(noisy.data()[i], Label::Body);
}

TEST(Tracking, LowerEpsilonNeverCeasesEarlier) {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<int> jitter(-3, 3);
  LabelVolume l(Dims{40, 40, 12}, Spacing{}, Label::Bandage);
  for (int z = 0; z < 12; ++z) {
    int ox = 12 + jitter(rng), oy = 12 + jitter(rng);
    for (int y = oy; y < oy + 10; ++y)
      for (int x = ox; x < ox + 10; ++x) l.at(x, y, z) = Label::Body;
  }
  int prev_end = -1;
  for (double eps : {0.6, 0.4, 0.2, 0.05}) {
    TrackingConfig cfg;
    cfg.epsilon = eps;
    TrackingResult r = run_tracking(l, {{0, 16, 16}}, cfg);
    EXPECT_GE(r.tracks[0].end_frame, prev_end);
    prev_end = r.tracks[0].end_frame;
  }
}

TEST(TrackReport, Format) {
  LabelVolume l(Dims{20, 20, 2}, Spacing{}, Label::Bandage);
  for (int z = 0; z < 2; ++z)
    for (int y = 5; y < 8; ++y)
      for (int x = 5; x < 8; ++x) l.at(x, y, z) = Label::Body;
  TrackingResult r = run_tracking(l, {{0, 6, 6}}, TrackingConfig{});
  EXPECT_EQ(format_track_report(r.tracks),
            "# track,origin,start_frame,end_frame\n1,seed,0,1\n# track,frame,area\n1,0,9\n1,1,9\n");
}
