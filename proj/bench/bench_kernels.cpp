// Serial-vs-OpenMP timing for the two data-parallel hot paths: the
// truth-discovery kernels and the Monte-Carlo trial loop. The serial runs are
// the reference implementations the tests compare against; this target shows
// what the parallel mode buys on the current machine.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <random>
#include <string>
#include <vector>

#include "theseus/experiments.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace theseus;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

DataMatrix random_matrix(std::size_t workers, std::size_t tasks) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::vector<std::string> wids, tids;
  for (std::size_t w = 0; w < workers; ++w) wids.push_back("w" + std::to_string(w));
  for (std::size_t t = 0; t < tasks; ++t) tids.push_back("t" + std::to_string(t));
  std::vector<double> values(workers * tasks);
  for (double& v : values) v = u(gen);
  return DataMatrix(std::move(wids), std::move(tids), std::move(values));
}

void row(const char* name, double serial, double parallel) {
  std::printf("%-28s %10.3fs %10.3fs %9.2fx\n", name, serial, parallel,
              serial / parallel);
}

}  // namespace

int main(int argc, char** argv) {
  const bool quick = argc > 1 && std::strcmp(argv[1], "--quick") == 0;
#ifdef _OPENMP
  std::printf("OpenMP threads: %d\n", omp_get_max_threads());
#else
  std::printf("built without OpenMP; parallel mode degenerates to serial\n");
#endif
  std::printf("%-28s %11s %11s %10s\n", "kernel", "serial", "parallel",
              "speedup");

  // best-of-N timing filters out host scheduling noise
  const int reps = quick ? 2 : 5;

  {
    const std::size_t S = quick ? 200 : 3000;
    const std::size_t M = quick ? 50 : 400;
    const auto data = random_matrix(S, M);
    ConvergenceConfig convergence;
    convergence.tolerance = 0.0;  // run the full iteration budget
    convergence.max_iterations = quick ? 10 : 25;

    double serial = 1e300, parallel = 1e300;
    for (int r = 0; r < reps; ++r) {
      auto start = std::chrono::steady_clock::now();
      (void)run_truth_discovery(data, crh_rule(), convergence,
                                ExecutionMode::Serial);
      serial = std::min(serial, seconds_since(start));
      start = std::chrono::steady_clock::now();
      (void)run_truth_discovery(data, crh_rule(), convergence,
                                ExecutionMode::Parallel);
      parallel = std::min(parallel, seconds_since(start));
    }
    row("truth discovery", serial, parallel);
  }

  {
    ExperimentConfig config;
    config.apply_setting("I");
    config.sweep = SweepAxis::None;
    config.trials = quick ? 40 : 400;
    config.seed = 3;

    double serial = 1e300, parallel = 1e300;
    for (int r = 0; r < reps; ++r) {
      auto start = std::chrono::steady_clock::now();
      (void)run_setting(config, ExecutionMode::Serial);
      serial = std::min(serial, seconds_since(start));
      start = std::chrono::steady_clock::now();
      (void)run_setting(config, ExecutionMode::Parallel);
      parallel = std::min(parallel, seconds_since(start));
    }
    row("trial batch (3 mechanisms)", serial, parallel);
  }
  return 0;
}
