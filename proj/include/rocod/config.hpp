#pragma once

#include <cstdint>
#include <string>

#include "rocod/dataset.hpp"
#include "rocod/detector.hpp"
#include "rocod/global_model.hpp"
#include "rocod/local_model.hpp"

namespace rocod {

// Cosine threshold choice: an explicit value, or sampled-percentile selection
// ("auto", optionally "auto:percentile=5,r=100000"; r = 0 means the
// size-derived default sample count).
struct AlphaSpec {
    bool automatic = true;
    double value = 0.9;
    double percentile = 5.0;
    std::size_t samples = 0;

    static AlphaSpec parse(const std::string& text);
    std::string serialize() const;
};

// Everything a run needs beyond the input files. Serializes to a flat
// "key = value" document (dotted keys, '#' line comments, no inline
// comments); parsing the serialized form reproduces it byte for byte.
struct RunConfig {
    // inputs
    std::string dataset_path;
    std::string schema_path;
    std::string labels_path;

    // outputs
    std::string out_dataset;
    std::string out_schema;
    std::string out_labels;
    std::string out_scores;
    std::string out_manifest;
    std::string out_metrics;

    AlphaSpec alpha;
    double lsh_epsilon = 0.975;
    unsigned lsh_d = 8;

    ModelKind model_kind = ModelKind::tree;
    double ridge_strength = 1.0;
    bool ridge_intercept = true;
    unsigned tree_depth = 10;
    unsigned tree_leaf = 5;

    NeighborMode neighbor_mode = NeighborMode::hamming_approx;
    CandidateSource candidate_source = CandidateSource::lsh;
    ScoreVariant score_variant = ScoreVariant::diagonal;

    std::size_t top_n = 100;
    int threads = 0;  // 0 = all available

    std::uint64_t seed_generate = 1;
    std::uint64_t seed_inject = 1;
    std::uint64_t seed_lsh = 1;
    std::uint64_t seed_alpha = 1;

    std::size_t gen_points = 50000;
    std::size_t gen_context_dims = 20;
    std::size_t gen_behavior_dims = 20;
    std::size_t gen_components = 16;
    double gen_component_scale = 0.06;
    double gen_mapping_concentration = 0.0;

    std::size_t inject_count = 500;

    std::string eval_method = "rocod";  // or "knn-baseline"
    std::string eval_name = "synthetic";
    std::size_t baseline_k = 30;

    // optional diagnostic dumps (written by detect when set)
    std::string dump_neighbors;   // CSV of per-object neighbor counts
    std::string dump_signatures;  // hex signature per object
    std::string dump_model;       // fitted global model as JSON
};

// Applies one "key = value" assignment; unknown keys or malformed values
// raise config_error naming the key.
void apply_config_entry(RunConfig& config, const std::string& key, const std::string& value);

RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path);
std::string serialize_config(const RunConfig& config);
void save_config(const RunConfig& config, const std::string& path);

std::string to_string(NeighborMode mode);
NeighborMode parse_neighbor_mode(const std::string& text);
std::string to_string(CandidateSource source);
CandidateSource parse_candidate_source(const std::string& text);

} // namespace rocod
