#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>

#include <omp.h>

namespace segd {

// Every frame- or chunk-parallel kernel takes an Exec. Serial is the reference
// path the tests compare the OpenMP path against; both must produce identical bytes.
enum class Exec { Serial, Parallel };

// Caps the number of OpenMP workers; jobs <= 0 restores the runtime default.
void set_max_jobs(int jobs);
int max_jobs();

// Runs body(i) for i in [0, n). Exceptions thrown by any iteration are rethrown
// on the calling thread after the loop finishes.
template <class Body>
void for_each_index(Exec exec, int n, Body&& body) {
  if (exec == Exec::Serial || n <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

using ProgressFn = std::function<void(double)>;

// Thread-safe completed-work counter that reports a fraction to an optional callback.
class ProgressCounter {
 public:
  ProgressCounter(const ProgressFn* callback, int total, double offset = 0.0, double scale = 1.0)
      : callback_(callback), total_(total > 0 ? total : 1), offset_(offset), scale_(scale) {}

  void tick() {
    int done = ++done_;
    if (callback_ && *callback_) {
      std::lock_guard lock(mutex_);
      (*callback_)(offset_ + scale_ * static_cast<double>(done) / total_);
    }
  }

 private:
  const ProgressFn* callback_;
  int total_;
  double offset_;
  double scale_;
  std::atomic<int> done_{0};
  std::mutex mutex_;
};

}  // namespace segd
