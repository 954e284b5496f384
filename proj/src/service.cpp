#include "segd/service.hpp"

#include <algorithm>
#include <charconv>

#include <httplib.h>
#include <json.hpp>

#include "segd/error.hpp"
#include "segd/phantom.hpp"
#include "segd/png_image.hpp"
#include "segd/volume_io.hpp"

namespace segd {

namespace {

using nlohmann::json;

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string read_text(const std::filesystem::path& path) {
  auto bytes = read_file(path);
  return std::string(bytes.begin(), bytes.end());
}

}  // namespace

std::string_view status_name(StageStatus s) {
  switch (s) {
    case StageStatus::Pending: return "pending";
    case StageStatus::Running: return "running";
    case StageStatus::Done: return "done";
    case StageStatus::Failed: return "failed";
  }
  return "?";
}

Session::Session(SessionOptions options) : options_(std::move(options)) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(options_.project, ec);
  if (ec) throw IoError("cannot create project directory " + options_.project.string() + ": " + ec.message());

  fs::path volume_path = options_.volume.value_or(options_.project / "volume.mvol");
  if (options_.volume || fs::exists(volume_path)) volume_ = std::make_unique<Volume>(load_volume(volume_path));

  fs::path tmpl = options_.support_template.value_or(options_.project / "template.mvol");
  if (options_.support_template || fs::exists(tmpl)) {
    options_.config.preprocess.support_template = volume_to_template(load_labels(tmpl));
  }

  if (fs::exists(options_.project / "scribbles.txt")) {
    scribbles_ = parse_scribbles(read_text(options_.project / "scribbles.txt"));
    for (const auto& r : scribbles_) scribble_keys_.insert(format_scribbles({r}));
  }
  if (fs::exists(options_.project / "seeds.txt")) {
    seeds_ = parse_seeds(read_text(options_.project / "seeds.txt"));
    for (const auto& p : seeds_) seed_keys_.insert(format_seeds({p}));
  }

  for (Stage s : kStages) {
    states_[s] = StageState{};
    fs::path file = options_.project / stage_file(s);
    if (!volume_ || !fs::exists(file)) continue;
    auto labels = std::make_shared<const LabelVolume>(load_labels(file));
    if (!(labels->dims() == volume_->dims())) continue;
    labels_[s] = std::move(labels);
    states_[s] = StageState{StageStatus::Done, 1.0, {}};
  }
}

Session::~Session() {
  if (worker_.joinable()) worker_.join();
}

Dims Session::dims() const {
  if (!volume_) throw NotFoundError("no volume loaded");
  return volume_->dims();
}

Spacing Session::spacing() const {
  if (!volume_) throw NotFoundError("no volume loaded");
  return volume_->spacing();
}

StageState Session::stage_state(Stage s) const {
  std::lock_guard lock(mutex_);
  return states_.at(s);
}

const LabelVolume* Session::stage_labels(Stage s) const {
  auto it = labels_.find(s);
  return it == labels_.end() ? nullptr : it->second.get();
}

std::vector<std::uint8_t> Session::slice_png(Axis axis, int index, double center, double width,
                                             std::optional<Stage> overlay) const {
  if (!volume_) throw NotFoundError("no volume loaded");
  if (!(width > 0)) throw InvalidArgument("window width must be positive");
  GrayImage gray = window_to_image(slice(*volume_, axis, index), center, width);
  if (!overlay) return encode_png(gray);
  std::shared_ptr<const LabelVolume> labels;
  {
    std::lock_guard lock(mutex_);
    auto it = labels_.find(*overlay);
    if (it == labels_.end()) throw NotFoundError(std::string(stage_name(*overlay)) + " has no output yet");
    labels = it->second;
  }
  return encode_png(overlay_labels(gray, slice(*labels, axis, index)));
}

PostResult Session::post_scribbles(const std::vector<ScribbleRecord>& records) {
  if (!volume_) throw NotFoundError("no volume loaded");
  std::lock_guard lock(mutex_);
  PostResult result;
  bool changed = false;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (auto why = scribble_problem(records[i], volume_->dims())) {
      result.rejected.emplace_back(static_cast<int>(i), *why);
      continue;
    }
    if (!scribble_keys_.insert(format_scribbles({records[i]})).second) {
      ++result.duplicates;
      continue;
    }
    scribbles_.push_back(records[i]);
    ++result.accepted;
    changed = true;
  }
  if (changed) write_text(options_.project / "scribbles.txt", format_scribbles(scribbles_));
  return result;
}

PostResult Session::post_seeds(const std::vector<SeedPoint>& seeds) {
  if (!volume_) throw NotFoundError("no volume loaded");
  std::lock_guard lock(mutex_);
  PostResult result;
  bool changed = false;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (auto why = seed_problem(seeds[i], volume_->dims())) {
      result.rejected.emplace_back(static_cast<int>(i), *why);
      continue;
    }
    if (!seed_keys_.insert(format_seeds({seeds[i]})).second) {
      ++result.duplicates;
      continue;
    }
    seeds_.push_back(seeds[i]);
    ++result.accepted;
    changed = true;
  }
  if (changed) write_text(options_.project / "seeds.txt", format_seeds(seeds_));
  return result;
}

std::vector<ScribbleRecord> Session::scribbles() const {
  std::lock_guard lock(mutex_);
  return scribbles_;
}

std::vector<SeedPoint> Session::seeds() const {
  std::lock_guard lock(mutex_);
  return seeds_;
}

int Session::run_stage(Stage s) {
  if (!volume_) throw NotFoundError("no volume loaded");
  std::unique_lock lock(mutex_);
  if (running_) throw StageBusyError("a stage is already running");
  std::shared_ptr<const LabelVolume> input;
  if (auto pre = stage_prerequisite(s)) {
    if (states_[*pre].status != StageStatus::Done || !labels_.count(*pre)) {
      throw PrerequisiteError(std::string(stage_name(s)) + " needs a finished " + std::string(stage_name(*pre)));
    }
    input = labels_[*pre];
  }
  if (s == Stage::Track && !options_.config.tracking.auto_init && seeds_.empty() &&
      seeds_from_scribbles(scribbles_).empty()) {
    throw NoTracksError("no seeds posted and auto-init is off");
  }
  int id = next_job_++;
  jobs_[id] = JobState{id, s, StageStatus::Running, 0.0, {}};
  states_[s] = StageState{StageStatus::Running, 0.0, {}};
  running_ = true;
  if (worker_.joinable()) worker_.join();
  worker_ = std::thread(&Session::worker, this, id, s, scribbles_, seeds_, std::move(input));
  return id;
}

void Session::worker(int id, Stage s, std::vector<ScribbleRecord> scribbles, std::vector<SeedPoint> seeds,
                     std::shared_ptr<const LabelVolume> input) {
  // Progress may arrive out of order from parallel workers; only forward motion is kept.
  ProgressFn progress = [this, id, s](double f) {
    std::lock_guard lock(mutex_);
    f = std::min(f, 1.0);
    JobState& j = jobs_[id];
    j.progress = std::max(j.progress, f);
    states_[s].progress = j.progress;
  };
  try {
    StageOutput out = segd::run_stage(s, *volume_, input.get(), options_.config, scribbles, seeds, options_.exec,
                                      progress);
    // Files are replaced atomically, so an interrupted run leaves the previous outputs.
    save_labels(out.labels, options_.project / stage_file(s));
    if (!out.report.empty()) write_text(options_.project / (std::string(stage_name(s)) + ".txt"), out.report);
    auto labels = std::make_shared<const LabelVolume>(std::move(out.labels));
    std::lock_guard lock(mutex_);
    labels_[s] = std::move(labels);
    states_[s] = StageState{StageStatus::Done, 1.0, {}};
    jobs_[id].status = StageStatus::Done;
    jobs_[id].progress = 1.0;
    running_ = false;
  } catch (const std::exception& e) {
    std::lock_guard lock(mutex_);
    states_[s] = StageState{StageStatus::Failed, states_[s].progress, e.what()};
    jobs_[id].status = StageStatus::Failed;
    jobs_[id].error = e.what();
    running_ = false;
  }
  changed_.notify_all();
}

JobState Session::job(int id) const {
  std::lock_guard lock(mutex_);
  auto it = jobs_.find(id);
  if (it == jobs_.end()) throw NotFoundError("no job " + std::to_string(id));
  return it->second;
}

JobState Session::wait(int id) const {
  std::unique_lock lock(mutex_);
  auto it = jobs_.find(id);
  if (it == jobs_.end()) throw NotFoundError("no job " + std::to_string(id));
  changed_.wait(lock, [&] { return it->second.status != StageStatus::Running; });
  return it->second;
}

std::vector<std::uint8_t> Session::labels_bytes(Stage s) const {
  std::shared_ptr<const LabelVolume> labels;
  {
    std::lock_guard lock(mutex_);
    auto it = labels_.find(s);
    if (it == labels_.end()) throw NotFoundError(std::string(stage_name(s)) + " has no output yet");
    labels = it->second;
  }
  return encode_labels(*labels);
}

// ---- HTTP ----

namespace {

int http_status(const std::exception& e) {
  if (dynamic_cast<const NotFoundError*>(&e)) return 404;
  if (dynamic_cast<const PrerequisiteError*>(&e)) return 412;
  if (dynamic_cast<const StageBusyError*>(&e)) return 409;
  if (dynamic_cast<const NoTracksError*>(&e)) return 422;
  if (dynamic_cast<const RangeError*>(&e) || dynamic_cast<const InvalidArgument*>(&e) ||
      dynamic_cast<const FormatError*>(&e) || dynamic_cast<const json::exception*>(&e)) {
    return 400;
  }
  return 500;
}

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <class Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    send_json(res, json{{"error", e.what()}}, http_status(e));
  }
}

int parse_int(const std::string& s) {
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw InvalidArgument("expected an integer, got '" + s + "'");
  return v;
}

Stage stage_param(const std::string& name) {
  auto s = parse_stage(name);
  if (!s) throw NotFoundError("unknown stage '" + name + "'");
  return *s;
}

// {"frame":3,"class":"FG","radius":2,"points":[[x,y],...]}
ScribbleRecord scribble_from_json(const json& j) {
  ScribbleRecord r;
  r.frame = j.at("frame").get<int>();
  std::string cls = j.at("class").get<std::string>();
  if (cls == "FG") r.cls = ScribbleClass::Fg;
  else if (cls == "BG") r.cls = ScribbleClass::Bg;
  else throw InvalidArgument("class must be FG or BG");
  r.radius = j.at("radius").get<int>();
  for (const auto& p : j.at("points")) {
    if (!p.is_array() || p.size() != 2) throw InvalidArgument("points must be [x, y] pairs");
    r.points.push_back(Point2{p[0].get<double>(), p[1].get<double>()});
  }
  return r;
}

SeedPoint seed_from_json(const json& j) {
  return SeedPoint{j.at("frame").get<int>(), j.at("x").get<int>(), j.at("y").get<int>()};
}

// Parses every element of `key` (or a bare array); malformed elements are rejected individually.
template <class T, class Parse, class Post>
json post_records(const std::string& body, const char* key, Parse&& parse, Post&& post) {
  json doc = json::parse(body);
  const json& list = doc.is_array() ? doc : doc.at(key);
  if (!list.is_array()) throw InvalidArgument(std::string(key) + " must be an array");
  std::vector<T> records;
  std::vector<int> origin;
  std::vector<std::pair<int, std::string>> rejected;
  for (std::size_t i = 0; i < list.size(); ++i) {
    try {
      records.push_back(parse(list[i]));
      origin.push_back(static_cast<int>(i));
    } catch (const std::exception& e) {
      rejected.emplace_back(static_cast<int>(i), e.what());
    }
  }
  PostResult r = post(records);
  for (auto& [idx, why] : r.rejected) rejected.emplace_back(origin[idx], why);
  std::sort(rejected.begin(), rejected.end());
  json rej = json::array();
  for (auto& [idx, why] : rejected) rej.push_back(json{{"index", idx}, {"reason", why}});
  return json{{"accepted", r.accepted}, {"duplicates", r.duplicates}, {"rejected", rej}};
}

json job_json(const JobState& j) {
  json out{{"job", j.id},
           {"stage", stage_name(j.stage)},
           {"status", status_name(j.status)},
           {"progress", j.progress}};
  if (!j.error.empty()) out["error"] = j.error;
  return out;
}

}  // namespace

struct Service::Impl {
  Session& session;
  httplib::Server server;
  explicit Impl(Session& s) : session(s) {}
};

Service::Service(Session& session) : impl_(std::make_unique<Impl>(session)) {
  auto& srv = impl_->server;
  Session& ses = impl_->session;
  srv.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  srv.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });

  srv.Get("/info", [&ses](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] {
      Dims d = ses.dims();
      Spacing sp = ses.spacing();
      json stages = json::object();
      for (Stage s : kStages) {
        StageState st = ses.stage_state(s);
        json e{{"status", status_name(st.status)}, {"progress", st.progress}};
        if (!st.error.empty()) e["error"] = st.error;
        stages[std::string(stage_name(s))] = e;
      }
      send_json(res, json{{"dims", {d.nx, d.ny, d.nz}},
                          {"spacing", {sp.sx, sp.sy, sp.sz}},
                          {"stages", stages},
                          {"scribbles", ses.scribbles().size()},
                          {"seeds", ses.seeds().size()}});
    });
  });

  srv.Get(R"(/slice/(\w+)/(-?\d+))", [&ses](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      Axis axis = parse_axis(req.matches[1].str());
      int index = parse_int(req.matches[2].str());
      double center = 0.0, width = 2000.0;
      if (req.has_param("window")) {
        std::string w = req.get_param_value("window");
        auto comma = w.find(',');
        if (comma == std::string::npos) throw InvalidArgument("window must be center,width");
        center = std::stod(w.substr(0, comma));
        width = std::stod(w.substr(comma + 1));
      }
      std::optional<Stage> overlay;
      if (req.has_param("overlay")) overlay = stage_param(req.get_param_value("overlay"));
      auto png = ses.slice_png(axis, index, center, width, overlay);
      res.set_content(std::string(png.begin(), png.end()), "image/png");
    });
  });

  srv.Post("/scribbles", [&ses](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      send_json(res, post_records<ScribbleRecord>(req.body, "records", scribble_from_json,
                                                  [&](const auto& r) { return ses.post_scribbles(r); }));
    });
  });

  srv.Post("/seeds", [&ses](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      send_json(res, post_records<SeedPoint>(req.body, "seeds", seed_from_json,
                                             [&](const auto& r) { return ses.post_seeds(r); }));
    });
  });

  srv.Post(R"(/run/(\w+))", [&ses](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      int id = ses.run_stage(stage_param(req.matches[1].str()));
      send_json(res, job_json(ses.job(id)), 202);
    });
  });

  srv.Get(R"(/progress/(\d+))", [&ses](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send_json(res, job_json(ses.job(parse_int(req.matches[1].str())))); });
  });

  srv.Get(R"(/labels/(\w+)\.mvol)", [&ses](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      auto bytes = ses.labels_bytes(stage_param(req.matches[1].str()));
      res.set_content(std::string(bytes.begin(), bytes.end()), "application/octet-stream");
    });
  });
}

Service::~Service() { stop(); }

int Service::bind(const std::string& host, int port) {
  if (port == 0) {
    int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw IoError("cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) throw IoError("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void Service::listen() { impl_->server.listen_after_bind(); }

void Service::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace segd
