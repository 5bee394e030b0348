#include "rocod/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>

#include <nlohmann/json.hpp>

#include "rocod/errors.hpp"
#include "rocod/parallel.hpp"

namespace rocod {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point from) {
    return std::chrono::duration<double>(Clock::now() - from).count();
}

class StageClock {
public:
    explicit StageClock(std::vector<StageTiming>& out) : out_(out), start_(Clock::now()) {}

    void lap(const std::string& stage) {
        out_.push_back({stage, seconds_since(start_)});
        start_ = Clock::now();
    }

private:
    std::vector<StageTiming>& out_;
    Clock::time_point start_;
};

void require_path(const std::string& value, const std::string& key) {
    if (value.empty()) throw config_error("required config key is unset: " + key);
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("cannot write file: " + path);
    out << text;
    if (!out) throw data_error("failed writing file: " + path);
}

nlohmann::json timings_json(const std::vector<StageTiming>& timings) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& t : timings) j[t.stage] = t.seconds;
    return j;
}

} // namespace

Dataset load_normalized(const RunConfig& config) {
    require_path(config.dataset_path, "data.dataset");
    require_path(config.schema_path, "data.schema");
    const AttributeSchema schema = AttributeSchema::load(config.schema_path);
    return normalize(load_csv(config.dataset_path, schema));
}

DetectResult detect_dataset(const Dataset& ds, const RunConfig& config) {
    DetectResult result;
    result.threads = resolve_threads(config.threads);
    set_threads(result.threads);

    const auto wall_start = Clock::now();
    StageClock clock(result.timings);

    if (config.alpha.automatic) {
        const std::size_t samples =
            config.alpha.samples > 0 ? config.alpha.samples : default_alpha_samples(ds.n);
        result.alpha_used = select_alpha(ds, samples, config.alpha.percentile, config.seed_alpha);
    } else {
        result.alpha_used = config.alpha.value;
    }
    clock.lap("alpha");

    result.lsh = derive_params(result.alpha_used, config.lsh_epsilon, config.lsh_d,
                               config.seed_lsh);
    const NeighborStats stats =
        neighbor_stats(ds, result.alpha_used, result.lsh, config.neighbor_mode,
                       config.candidate_source, /*keep_lists=*/false);
    clock.lap("neighbors");

    result.neighbor_counts = stats.table.counts;

    GlobalSpec spec;
    spec.ridge.strength = config.ridge_strength;
    spec.ridge.intercept = config.ridge_intercept;
    spec.tree.max_depth = config.tree_depth;
    spec.tree.min_samples_leaf = config.tree_leaf;
    result.model = fit_global(ds, config.model_kind, spec);
    clock.lap("global_fit");

    const EnsembleExpectation ee = ensemble(ds, stats.local, result.model, stats.table);
    const AttributeWeights weights = attribute_weights(ds, ee);
    clock.lap("ensemble");

    result.report = score(ds, ee, weights, config.score_variant);
    result.report.config_snapshot = serialize_config(config);
    clock.lap("score");

    const std::size_t flag = std::min(config.top_n, ds.n);
    result.score_csv = scores_to_csv(result.report, flag);
    clock.lap("format");

    result.wall_seconds = seconds_since(wall_start);
    return result;
}

void run_generate(const RunConfig& config) {
    require_path(config.out_dataset, "output.dataset");
    require_path(config.out_schema, "output.schema");
    require_path(config.out_labels, "output.labels");

    SyntheticConfig gen;
    gen.n_points = config.gen_points;
    gen.context_dims = config.gen_context_dims;
    gen.behavior_dims = config.gen_behavior_dims;
    gen.components = config.gen_components;
    gen.seed = config.seed_generate;
    gen.component_scale = config.gen_component_scale;
    gen.mapping_concentration = config.gen_mapping_concentration;

    const Dataset ds = generate_synthetic(gen);
    save_csv(ds, config.out_dataset);
    ds.derived_schema().save(config.out_schema);
    save_labels(ds, config.out_labels);
}

void run_inject(const RunConfig& config) {
    require_path(config.out_dataset, "output.dataset");
    require_path(config.out_labels, "output.labels");

    Dataset ds = load_normalized(config);
    ds = inject_outliers(std::move(ds), config.inject_count, config.seed_inject);
    save_csv(ds, config.out_dataset);
    save_labels(ds, config.out_labels);
    if (!config.out_schema.empty()) ds.derived_schema().save(config.out_schema);
}

DetectResult run_detect(const RunConfig& config) {
    require_path(config.out_scores, "output.scores");

    std::vector<StageTiming> load_timing;
    StageClock clock(load_timing);
    const Dataset ds = load_normalized(config);
    clock.lap("load");

    DetectResult result = detect_dataset(ds, config);
    result.timings.insert(result.timings.begin(), load_timing.front());

    const auto out_start = Clock::now();
    write_text(config.out_scores, result.score_csv);
    if (!config.out_manifest.empty()) {
        write_text(config.out_manifest, manifest_json(config, result).dump(2) + "\n");
    }
    if (!config.dump_neighbors.empty()) {
        NeighborTable table;
        table.alpha = result.alpha_used;
        table.mode = config.neighbor_mode;
        table.counts = result.neighbor_counts;
        save_neighbor_counts(table, config.dump_neighbors);
    }
    if (!config.dump_signatures.empty()) {
        const SignatureSet sigs = build_signatures(ds, result.lsh);
        std::string text = "index,signature_hex\n";
        for (std::size_t i = 0; i < ds.n; ++i) {
            text += std::to_string(i);
            text += ',';
            text += sigs.hex(i);
            text += '\n';
        }
        write_text(config.dump_signatures, text);
    }
    if (!config.dump_model.empty()) {
        write_text(config.dump_model, model_to_json(result.model).dump(2) + "\n");
    }
    result.timings.push_back({"output", seconds_since(out_start)});
    result.wall_seconds += load_timing.front().seconds + result.timings.back().seconds;
    return result;
}

MetricReport run_evaluate(const RunConfig& config) {
    require_path(config.labels_path, "data.labels");
    require_path(config.out_metrics, "output.metrics");

    const Dataset ds = load_normalized(config);
    const auto raw_labels = load_labels(config.labels_path, ds.n);
    std::vector<std::uint32_t> outliers(raw_labels.begin(), raw_labels.end());

    set_threads(resolve_threads(config.threads));
    ScoreReport report;
    if (config.eval_method == "knn-baseline") {
        report = knn_distance_baseline(ds, config.baseline_k);
    } else {
        report = detect_dataset(ds, config).report;
    }

    const LabeledRanking lr = make_ranking(report, std::move(outliers));
    const MetricReport metrics = evaluate_ranking(lr, config.eval_name, config.eval_method);

    write_text(config.out_metrics, metrics_to_json(metrics).dump(2) + "\n");
    write_text(config.out_metrics + ".csv",
               metric_csv_header() + "\n" + metric_csv_row(metrics) + "\n");
    return metrics;
}

BenchResult run_bench(const RunConfig& config) {
    const Dataset ds = load_normalized(config);

    std::vector<int> counts = {1, 2, 4, 8, current_max_threads()};
    std::sort(counts.begin(), counts.end());
    counts.erase(std::unique(counts.begin(), counts.end()), counts.end());

    BenchResult bench;
    for (const int t : counts) {
        RunConfig run = config;
        run.threads = t;
        DetectResult result = detect_dataset(ds, run);
        BenchEntry entry;
        entry.threads = t;
        entry.seconds = result.wall_seconds;
        if (bench.entries.empty()) {
            entry.speedup = 1.0;
            entry.identical_output = true;
            bench.reference = std::move(result);
        } else {
            entry.speedup = bench.reference.wall_seconds / result.wall_seconds;
            entry.identical_output = result.score_csv == bench.reference.score_csv;
        }
        bench.entries.push_back(entry);
    }

    if (!config.out_manifest.empty()) {
        write_text(config.out_manifest, bench_json(config, bench).dump(2) + "\n");
    }
    return bench;
}

nlohmann::json manifest_json(const RunConfig& config, const DetectResult& result) {
    nlohmann::json j;
    j["config_text"] = serialize_config(config);
    j["alpha"] = result.alpha_used;
    j["lsh"] = {{"p", result.lsh.p},
                {"l", result.lsh.l},
                {"d", result.lsh.d},
                {"epsilon", result.lsh.epsilon},
                {"seed", result.lsh.seed}};
    j["threads"] = result.threads;
    j["stage_seconds"] = timings_json(result.timings);
    j["wall_seconds"] = result.wall_seconds;
    j["objects"] = result.report.scores.size();
    j["lambda"] = {{"min", result.report.lambda_min},
                   {"mean", result.report.lambda_mean},
                   {"max", result.report.lambda_max}};
    j["attribute_weights"] = result.report.weights.w;
    j["score_variant"] = to_string(result.report.variant);
    return j;
}

nlohmann::json bench_json(const RunConfig& config, const BenchResult& result) {
    nlohmann::json j;
    j["config_text"] = serialize_config(config);
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& entry : result.entries) {
        runs.push_back({{"threads", entry.threads},
                        {"seconds", entry.seconds},
                        {"speedup", entry.speedup},
                        {"identical_output", entry.identical_output}});
    }
    j["runs"] = std::move(runs);
    return j;
}

} // namespace rocod
