#include "segd/exec.hpp"

namespace segd {

namespace {
int default_jobs = -1;
}

void set_max_jobs(int jobs) {
  if (default_jobs < 0) default_jobs = omp_get_max_threads();
  omp_set_num_threads(jobs > 0 ? jobs : default_jobs);
}

int max_jobs() { return omp_get_max_threads(); }

}  // namespace segd
