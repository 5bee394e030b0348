#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "rocod/config.hpp"
#include "rocod/errors.hpp"
#include "rocod/pipeline.hpp"

namespace {

// Per-subcommand parse state. Every dedicated flag funnels its value into the
// same key = value override list that --set and the config file use, so the
// CLI and the config document stay in exact parity.
struct CommandState {
    std::string config_path;
    std::vector<std::pair<std::string, std::string>> overrides;
    std::vector<std::string> raw_sets;
    bool print_config = false;
};

void add_common(CLI::App* cmd, CommandState& state) {
    cmd->add_option("--config", state.config_path, "configuration file (key = value lines)");
    cmd->add_option("--set", state.raw_sets, "extra key=value override (repeatable)");
    cmd->add_flag("--print-config", state.print_config,
                  "print the effective configuration and exit");
}

void bind(CLI::App* cmd, CommandState& state, const std::string& flag, const std::string& key,
          const std::string& help) {
    cmd->add_option_function<std::string>(
        flag, [&state, key](const std::string& value) { state.overrides.emplace_back(key, value); },
        help);
}

rocod::RunConfig build_config(const CommandState& state) {
    rocod::RunConfig config;
    if (!state.config_path.empty()) config = rocod::load_config(state.config_path);
    for (const auto& [key, value] : state.overrides) {
        rocod::apply_config_entry(config, key, value);
    }
    for (const std::string& entry : state.raw_sets) {
        const auto eq = entry.find('=');
        if (eq == std::string::npos) {
            throw rocod::config_error("--set expects key=value, got: " + entry);
        }
        rocod::apply_config_entry(config, entry.substr(0, eq), entry.substr(eq + 1));
    }
    return config;
}

void add_io_inputs(CLI::App* cmd, CommandState& state) {
    bind(cmd, state, "--data", "data.dataset", "input dataset CSV");
    bind(cmd, state, "--schema", "data.schema", "attribute schema JSON");
}

void add_detect_flags(CLI::App* cmd, CommandState& state) {
    bind(cmd, state, "--alpha", "alpha",
         "cosine threshold: a number, or auto:percentile=P,r=R");
    bind(cmd, state, "--epsilon", "lsh.epsilon", "target candidate recall");
    bind(cmd, state, "--bits", "lsh.d", "bits per signature");
    bind(cmd, state, "--model", "model.kind", "global model: linear or tree");
    bind(cmd, state, "--ridge-strength", "model.ridge_strength", "ridge penalty");
    bind(cmd, state, "--tree-depth", "model.tree_depth", "tree depth limit");
    bind(cmd, state, "--tree-leaf", "model.tree_leaf", "minimum samples per leaf");
    bind(cmd, state, "--mode", "neighbor.mode", "neighbor test: exact or hamming-approx");
    bind(cmd, state, "--source", "neighbor.source", "candidate pairs: lsh or all-pairs");
    bind(cmd, state, "--variant", "score.variant", "score form: diagonal or scalar");
    bind(cmd, state, "--top-n", "top_n", "how many objects to flag");
    bind(cmd, state, "--threads", "threads", "worker threads (0 = all)");
    bind(cmd, state, "--seed-lsh", "seed.lsh", "projection seed");
    bind(cmd, state, "--seed-alpha", "seed.alpha", "alpha sampling seed");
}

void print_bench(const rocod::BenchResult& bench) {
    std::printf("%8s %12s %10s %10s\n", "threads", "seconds", "speedup", "identical");
    for (const auto& entry : bench.entries) {
        std::printf("%8d %12.3f %10.2f %10s\n", entry.threads, entry.seconds, entry.speedup,
                    entry.identical_output ? "yes" : "no");
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Contextual outlier detection toolkit"};
    app.require_subcommand(1);

    CommandState gen_state, inject_state, detect_state, eval_state, bench_state;

    CLI::App* gen = app.add_subcommand("generate", "sample a synthetic mixture dataset");
    add_common(gen, gen_state);
    bind(gen, gen_state, "--out-data", "output.dataset", "dataset CSV to write");
    bind(gen, gen_state, "--out-schema", "output.schema", "schema JSON to write");
    bind(gen, gen_state, "--out-labels", "output.labels", "label file to write (empty)");
    bind(gen, gen_state, "--points", "generate.points", "number of objects");
    bind(gen, gen_state, "--context-dims", "generate.context_dims", "contextual dimensions");
    bind(gen, gen_state, "--behavior-dims", "generate.behavior_dims", "behavioral dimensions");
    bind(gen, gen_state, "--components", "generate.components", "mixture components");
    bind(gen, gen_state, "--component-scale", "generate.component_scale",
         "component covariance scale");
    bind(gen, gen_state, "--mapping-concentration", "generate.mapping_concentration",
         "context-to-behavior mapping concentration");
    bind(gen, gen_state, "--seed-generate", "seed.generate", "generator seed");

    CLI::App* inject = app.add_subcommand("inject", "append perturbation outliers to a dataset");
    add_common(inject, inject_state);
    add_io_inputs(inject, inject_state);
    bind(inject, inject_state, "--out-data", "output.dataset", "perturbed dataset CSV to write");
    bind(inject, inject_state, "--out-schema", "output.schema",
         "schema JSON for the written CSV (optional)");
    bind(inject, inject_state, "--out-labels", "output.labels", "label file to write");
    bind(inject, inject_state, "--count", "inject.count", "outliers to inject");
    bind(inject, inject_state, "--seed-inject", "seed.inject", "injection seed");

    CLI::App* detect = app.add_subcommand("detect", "score every object and rank outliers");
    add_common(detect, detect_state);
    add_io_inputs(detect, detect_state);
    add_detect_flags(detect, detect_state);
    bind(detect, detect_state, "--out-scores", "output.scores", "score CSV to write");
    bind(detect, detect_state, "--out-manifest", "output.manifest", "run manifest JSON to write");
    bind(detect, detect_state, "--dump-neighbors", "dump.neighbors",
         "write per-object neighbor counts CSV");
    bind(detect, detect_state, "--dump-signatures", "dump.signatures",
         "write per-object signature hex dump");
    bind(detect, detect_state, "--dump-model", "dump.model", "write fitted global model JSON");

    CLI::App* evaluate = app.add_subcommand("evaluate", "rank and measure against labels");
    add_common(evaluate, eval_state);
    add_io_inputs(evaluate, eval_state);
    add_detect_flags(evaluate, eval_state);
    bind(evaluate, eval_state, "--labels", "data.labels", "ground-truth outlier index file");
    bind(evaluate, eval_state, "--out-metrics", "output.metrics", "metric JSON to write");
    bind(evaluate, eval_state, "--method", "eval.method", "rocod or knn-baseline");
    bind(evaluate, eval_state, "--name", "eval.name", "dataset label for the report row");
    bind(evaluate, eval_state, "--k", "baseline.k", "k for the distance baseline");

    CLI::App* bench = app.add_subcommand("bench", "time detection across thread counts");
    add_common(bench, bench_state);
    add_io_inputs(bench, bench_state);
    add_detect_flags(bench, bench_state);
    bind(bench, bench_state, "--out-manifest", "output.manifest", "bench manifest JSON to write");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        CLI::App* chosen = app.get_subcommands().front();
        CommandState& state = chosen == gen ? gen_state
                              : chosen == inject ? inject_state
                              : chosen == detect ? detect_state
                              : chosen == evaluate ? eval_state
                                                   : bench_state;
        const rocod::RunConfig config = build_config(state);
        if (state.print_config) {
            std::cout << rocod::serialize_config(config);
            return 0;
        }

        if (chosen == gen) {
            rocod::run_generate(config);
            std::cout << "generated " << config.gen_points << " objects -> "
                      << config.out_dataset << "\n";
        } else if (chosen == inject) {
            rocod::run_inject(config);
            std::cout << "injected " << config.inject_count << " outliers -> "
                      << config.out_dataset << " (labels: " << config.out_labels << ")\n";
        } else if (chosen == detect) {
            const rocod::DetectResult result = rocod::run_detect(config);
            std::cout << "alpha " << result.alpha_used << ", signatures " << result.lsh.l << "x"
                      << result.lsh.d << " bits, threads " << result.threads << "\n";
            for (const auto& t : result.timings) {
                std::printf("  %-10s %8.3fs\n", t.stage.c_str(), t.seconds);
            }
            std::cout << "wrote " << config.out_scores << " (" << result.report.scores.size()
                      << " objects)\n";
        } else if (chosen == evaluate) {
            const rocod::MetricReport metrics = rocod::run_evaluate(config);
            std::cout << rocod::metric_csv_header() << "\n"
                      << rocod::metric_csv_row(metrics) << "\n";
        } else {
            const rocod::BenchResult result = rocod::run_bench(config);
            print_bench(result);
        }
        return 0;
    } catch (const rocod::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const rocod::data_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
