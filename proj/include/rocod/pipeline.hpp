#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "rocod/config.hpp"
#include "rocod/detector.hpp"
#include "rocod/eval.hpp"
#include "rocod/lsh.hpp"

namespace rocod {

struct StageTiming {
    std::string stage;
    double seconds = 0.0;
};

struct DetectResult {
    ScoreReport report;
    double alpha_used = 0.0;
    LshParams lsh;
    std::vector<std::uint32_t> neighbor_counts;
    GlobalModel model;
    std::vector<StageTiming> timings;
    double wall_seconds = 0.0;
    int threads = 1;
    std::string score_csv;  // exact bytes of the score file
};

// The scoring core on an already-normalized dataset: alpha selection,
// neighbor statistics, global fit, ensemble, weights, scores. Writes nothing.
DetectResult detect_dataset(const Dataset& ds, const RunConfig& config);

// File-level commands. Each validates the paths it needs, loads inputs,
// delegates to the in-memory routines and writes the configured outputs.
void run_generate(const RunConfig& config);
void run_inject(const RunConfig& config);
DetectResult run_detect(const RunConfig& config);
MetricReport run_evaluate(const RunConfig& config);

struct BenchEntry {
    int threads = 1;
    double seconds = 0.0;
    double speedup = 1.0;
    bool identical_output = true;  // score bytes equal the 1-thread run's
};

struct BenchResult {
    std::vector<BenchEntry> entries;
    DetectResult reference;  // the 1-thread run
};

// Repeats the detection core at thread counts {1, 2, 4, 8, max-available}
// (deduplicated, ascending) on one loaded dataset, comparing outputs and
// timing each run.
BenchResult run_bench(const RunConfig& config);

nlohmann::json manifest_json(const RunConfig& config, const DetectResult& result);
nlohmann::json bench_json(const RunConfig& config, const BenchResult& result);

// Loads data.dataset via data.schema and min-max normalizes it.
Dataset load_normalized(const RunConfig& config);

} // namespace rocod
