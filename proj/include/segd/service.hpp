#pragma once

#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "segd/exec.hpp"
#include "segd/pipeline.hpp"
#include "segd/slice.hpp"
#include "segd/volume.hpp"

namespace segd {

enum class StageStatus { Pending, Running, Done, Failed };
std::string_view status_name(StageStatus s);

struct StageState {
  StageStatus status = StageStatus::Pending;
  double progress = 0.0;
  std::string error;
};

struct JobState {
  int id = 0;
  Stage stage = Stage::Preprocess;
  StageStatus status = StageStatus::Running;
  double progress = 0.0;
  std::string error;
};

struct PostResult {
  int accepted = 0;
  int duplicates = 0;                                 // already stored, ignored
  std::vector<std::pair<int, std::string>> rejected;  // record index and reason
};

struct SessionOptions {
  std::filesystem::path project;                    // stage outputs and posted records live here
  std::optional<std::filesystem::path> volume;      // default: <project>/volume.mvol when present
  std::optional<std::filesystem::path> support_template;
  PipelineConfig config;
  Exec exec = Exec::Parallel;
};

// One project: a volume, its stage outputs, and the records posted so far.
// Mutations are serialized; at most one stage runs at a time, on a worker thread.
// Stage outputs already in the project directory are picked up as done.
class Session {
 public:
  explicit Session(SessionOptions options);
  ~Session();
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  bool has_volume() const { return volume_ != nullptr; }
  // Both throw NotFoundError without a volume.
  Dims dims() const;
  Spacing spacing() const;
  StageState stage_state(Stage s) const;

  // Windowed grayscale PNG, optionally tinted with a finished stage's labels.
  std::vector<std::uint8_t> slice_png(Axis axis, int index, double center, double width,
                                      std::optional<Stage> overlay = std::nullopt) const;

  // Valid records are appended and persisted; exact repeats of stored records are ignored.
  PostResult post_scribbles(const std::vector<ScribbleRecord>& records);
  PostResult post_seeds(const std::vector<SeedPoint>& seeds);
  std::vector<ScribbleRecord> scribbles() const;
  std::vector<SeedPoint> seeds() const;

  // Starts a stage on the worker and returns its job id. Throws PrerequisiteError,
  // StageBusyError, or NoTracksError (track stage without seeds and auto-init off).
  int run_stage(Stage s);
  JobState job(int id) const;
  JobState wait(int id) const;

  // MVOL bytes of a finished stage.
  std::vector<std::uint8_t> labels_bytes(Stage s) const;

 private:
  void worker(int id, Stage s, std::vector<ScribbleRecord> scribbles, std::vector<SeedPoint> seeds,
              std::shared_ptr<const LabelVolume> input);
  const LabelVolume* stage_labels(Stage s) const;

  SessionOptions options_;
  std::unique_ptr<Volume> volume_;
  mutable std::mutex mutex_;
  mutable std::condition_variable changed_;
  std::map<Stage, StageState> states_;
  std::map<Stage, std::shared_ptr<const LabelVolume>> labels_;
  std::vector<ScribbleRecord> scribbles_;
  std::vector<SeedPoint> seeds_;
  std::set<std::string> scribble_keys_;
  std::set<std::string> seed_keys_;
  std::map<int, JobState> jobs_;
  int next_job_ = 1;
  bool running_ = false;
  std::thread worker_;
};

inline constexpr int kDefaultPort = 8707;

// HTTP front end. Endpoints:
//   GET  /info
//   GET  /slice/{axis}/{index}?window=c,w&overlay=stage
//   POST /scribbles, POST /seeds        (JSON bodies, see README)
//   POST /run/{stage}
//   GET  /progress/{job}
//   GET  /labels/{stage}.mvol
class Service {
 public:
  explicit Service(Session& session);
  ~Service();

  // Binds to host:port (port 0 picks a free one) and returns the bound port.
  int bind(const std::string& host, int port);
  // Blocks serving requests until stop().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace segd
