/*
 * Copyright 2026 The MapDR Toolkit Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Times corpus counting with the serial reference and the OpenMP kernel on
// the same synthetic corpus, and checks that both produce identical counts.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <vector>

#include "CLI11.hpp"
#include "mapdr/metrics.hpp"
#include "mapdr/synthgen.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using Clock = std::chrono::steady_clock;

template <typename F>
double best_of(int reps, F&& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = Clock::now();
    fn();
    best = std::min(best, std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Serial vs OpenMP corpus evaluation"};
  std::size_t clips = 5000;
  int reps = 5;
  std::size_t thresholds = mapdr::kDefaultThresholdCount;
  std::vector<int> threads;
  app.add_option("--clips", clips, "Synthetic clips in the corpus");
  app.add_option("--reps", reps, "Repetitions, best time is reported")->check(CLI::PositiveNumber);
  app.add_option("--thresholds", thresholds, "Threshold count")->check(CLI::Range(2, 100000));
  app.add_option("--threads", threads, "Thread counts to try");
  CLI11_PARSE(app, argc, argv);

  int max_threads = 1;
#ifdef _OPENMP
  max_threads = omp_get_max_threads();
#endif
  if (threads.empty()) {
    for (int t = 1; t <= max_threads; t *= 2) threads.push_back(t);
    if (threads.back() != max_threads) threads.push_back(max_threads);
  }

  mapdr::CorruptionSpec spec;
  spec.drop_rule_p = 0.2;
  spec.perturb_property_p = 0.3;
  spec.drop_edge_p = 0.2;
  spec.add_edge_p = 0.5;
  std::vector<mapdr::GeneratedScene> scenes;
  std::vector<mapdr::PredictionSet> preds;
  scenes.reserve(clips);
  preds.reserve(clips);
  for (std::uint64_t seed = 0; seed < clips; ++seed) {
    scenes.push_back(mapdr::generate_clip(mapdr::random_scene(seed), seed));
    preds.push_back(mapdr::corrupt(scenes.back().rules, scenes.back().graph, spec, seed).prediction);
  }
  std::vector<mapdr::ClipInput> inputs;
  for (std::size_t i = 0; i < clips; ++i) {
    inputs.push_back({&scenes[i].rules, &scenes[i].graph, &preds[i]});
  }
  const auto grid = mapdr::threshold_grid(thresholds);

  std::vector<mapdr::MetricCounts> reference;
  const double serial_ms = best_of(reps, [&] {
    reference = mapdr::count_corpus_serial(inputs, grid);
  });
  std::printf("clips %zu  thresholds %zu  cores %d\n", clips, thresholds, max_threads);
  std::printf("%-10s %8s %10s %8s %s\n", "kernel", "threads", "best_ms", "speedup", "match");
  std::printf("%-10s %8d %10.2f %8.2f %s\n", "serial", 1, serial_ms, 1.0, "ref");

  bool all_match = true;
  for (int t : threads) {
    std::vector<mapdr::MetricCounts> out;
    const double ms = best_of(reps, [&] {
      out = mapdr::count_corpus_parallel(inputs, grid, t);
    });
    const bool match = out == reference;
    all_match &= match;
    std::printf("%-10s %8d %10.2f %8.2f %s\n", "openmp", t, ms, serial_ms / ms,
                match ? "yes" : "NO");
  }
  const auto report = mapdr::make_report(mapdr::pool_counts(reference), grid);
  std::printf("pooled AP %.6f\n", report.ap);
  return all_match ? 0 : 1;
}
