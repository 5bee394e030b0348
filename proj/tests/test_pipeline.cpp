#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "rocod/config.hpp"
#include "rocod/errors.hpp"
#include "rocod/pipeline.hpp"

#include "reference.hpp"
#include "testutil.hpp"

using namespace rocod;
using testutil::read_file;
using testutil::tmp_file;
using testutil::write_file;

namespace {

// A small but complete generate -> inject -> detect file layout.
struct Workspace {
    RunConfig config;

    explicit Workspace(const std::string& prefix) {
        config.out_dataset = tmp_file(prefix + "_data.csv");
        config.out_schema = tmp_file(prefix + "_schema.json");
        config.out_labels = tmp_file(prefix + "_labels.txt");
        config.gen_points = 400;
        config.gen_context_dims = 4;
        config.gen_behavior_dims = 3;
        config.gen_components = 4;
        config.inject_count = 8;
        config.top_n = 20;
    }

    void generate_and_inject() {
        run_generate(config);
        config.dataset_path = config.out_dataset;
        config.schema_path = config.out_schema;
        run_inject(config);
        config.labels_path = config.out_labels;
    }
};

int run_cli(const std::string& args) {
    const std::string cmd = std::string(ROCOD_BIN) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WEXITSTATUS(status);
}

} // namespace

TEST_CASE("alpha spec: parse and serialize cover both modes") {
    const AlphaSpec automatic = AlphaSpec::parse("auto");
    CHECK(automatic.automatic);
    CHECK(automatic.percentile == 5.0);
    CHECK(automatic.samples == 0);
    CHECK(automatic.serialize() == "auto:percentile=5");

    const AlphaSpec tuned = AlphaSpec::parse("auto:percentile=2.5,r=40000");
    CHECK(tuned.automatic);
    CHECK(tuned.percentile == 2.5);
    CHECK(tuned.samples == 40000);
    CHECK(tuned.serialize() == "auto:percentile=2.5,r=40000");
    const AlphaSpec reparsed = AlphaSpec::parse(tuned.serialize());
    CHECK(reparsed.percentile == tuned.percentile);
    CHECK(reparsed.samples == tuned.samples);

    const AlphaSpec fixed = AlphaSpec::parse("0.85");
    CHECK_FALSE(fixed.automatic);
    CHECK(fixed.value == 0.85);
    CHECK(fixed.serialize() == "0.85");

    CHECK_THROWS_AS(AlphaSpec::parse("frog"), config_error);
    CHECK_THROWS_AS(AlphaSpec::parse("auto:weird=1"), config_error);
    CHECK_THROWS_AS(AlphaSpec::parse("auto-5"), config_error);
}

TEST_CASE("config: serialize -> parse -> serialize is the identity") {
    RunConfig defaults;
    const std::string once = serialize_config(defaults);
    CHECK(serialize_config(parse_config_text(once)) == once);

    RunConfig custom;
    custom.dataset_path = "in.csv";
    custom.schema_path = "schema.json";
    custom.labels_path = "labels.txt";
    custom.out_scores = "scores.csv";
    custom.out_manifest = "manifest.json";
    custom.alpha = AlphaSpec::parse("0.925");
    custom.lsh_epsilon = 0.9;
    custom.lsh_d = 12;
    custom.model_kind = ModelKind::linear;
    custom.ridge_strength = 0.5;
    custom.ridge_intercept = false;
    custom.neighbor_mode = NeighborMode::exact;
    custom.candidate_source = CandidateSource::all_pairs;
    custom.score_variant = ScoreVariant::scalar;
    custom.threads = 4;
    custom.top_n = 37;
    custom.dump_model = "model.json";
    const std::string text = serialize_config(custom);
    CHECK(serialize_config(parse_config_text(text)) == text);

    const RunConfig back = parse_config_text(text);
    CHECK(back.dataset_path == "in.csv");
    CHECK(back.alpha.value == 0.925);
    CHECK_FALSE(back.alpha.automatic);
    CHECK(back.model_kind == ModelKind::linear);
    CHECK(back.neighbor_mode == NeighborMode::exact);
    CHECK(back.candidate_source == CandidateSource::all_pairs);
    CHECK(back.score_variant == ScoreVariant::scalar);
    CHECK(back.threads == 4);
    CHECK(back.dump_model == "model.json");
}

TEST_CASE("config: parser accepts comments, rejects junk and unknown keys") {
    const RunConfig parsed = parse_config_text(
        "# a comment\n"
        "\n"
        "  top_n   =  42  \n"
        "model.kind = linear\n");
    CHECK(parsed.top_n == 42);
    CHECK(parsed.model_kind == ModelKind::linear);

    RunConfig config;
    CHECK_THROWS_WITH_AS(apply_config_entry(config, "model.bogus", "1"),
                         doctest::Contains("model.bogus"), config_error);
    CHECK_THROWS_WITH_AS(apply_config_entry(config, "top_n", "many"),
                         doctest::Contains("top_n"), config_error);
    CHECK_THROWS_AS(apply_config_entry(config, "model.ridge_intercept", "yes"), config_error);
    CHECK_THROWS_AS(apply_config_entry(config, "eval.method", "svm"), config_error);
    CHECK_THROWS_AS(parse_config_text("no equals sign here\n"), config_error);

    // file round trip
    const auto path = tmp_file("config_roundtrip.cfg");
    save_config(parsed, path);
    CHECK(serialize_config(load_config(path)) == serialize_config(parsed));
    CHECK_THROWS_AS(load_config(tmp_file("missing.cfg")), config_error);
}

TEST_CASE("generate: deterministic files that reload into the same dataset") {
    Workspace ws("gen");
    run_generate(ws.config);
    const std::string data_once = read_file(ws.config.out_dataset);
    const std::string schema_once = read_file(ws.config.out_schema);

    run_generate(ws.config);
    CHECK(read_file(ws.config.out_dataset) == data_once);
    CHECK(read_file(ws.config.out_schema) == schema_once);

    const AttributeSchema schema = AttributeSchema::load(ws.config.out_schema);
    const Dataset ds = load_csv(ws.config.out_dataset, schema);
    CHECK(ds.n == 400);
    CHECK(ds.cdim == 4);
    CHECK(ds.bdim == 3);
    CHECK(read_file(ws.config.out_labels).empty());  // nothing injected yet

    RunConfig incomplete = ws.config;
    incomplete.out_dataset.clear();
    CHECK_THROWS_AS(run_generate(incomplete), config_error);
}

TEST_CASE("inject: grows the dataset, writes sorted labels, reproducibly") {
    Workspace ws("inj");
    ws.generate_and_inject();

    const AttributeSchema schema = AttributeSchema::load(ws.config.out_schema);
    const Dataset ds = load_csv(ws.config.out_dataset, schema);
    CHECK(ds.n == 408);
    const auto labels = load_labels(ws.config.out_labels, ds.n);
    REQUIRE(labels.size() == 8);
    for (std::size_t t = 0; t < 8; ++t) CHECK(labels[t] == 400 + t);

    // rerunning the whole chain reproduces the bytes
    const std::string data_bytes = read_file(ws.config.out_dataset);
    Workspace again("inj2");
    again.generate_and_inject();
    CHECK(read_file(again.config.out_dataset) == data_bytes);
}

TEST_CASE("detect: writes scores, manifest and dumps; bytes are reproducible") {
    Workspace ws("det");
    ws.generate_and_inject();

    RunConfig detect = ws.config;
    detect.out_scores = tmp_file("det_scores.csv");
    detect.out_manifest = tmp_file("det_manifest.json");
    detect.dump_neighbors = tmp_file("det_neighbors.csv");
    detect.dump_signatures = tmp_file("det_signatures.csv");
    detect.dump_model = tmp_file("det_model.json");
    detect.alpha = AlphaSpec::parse("auto:percentile=5,r=20000");

    const DetectResult result = run_detect(detect);
    CHECK(result.alpha_used > 0.0);
    CHECK(result.alpha_used <= 1.0);
    CHECK(result.lsh.l >= 1);
    CHECK(result.report.scores.size() == 408);

    // the score file holds one line per object plus the header
    const std::string scores = read_file(detect.out_scores);
    CHECK(std::count(scores.begin(), scores.end(), '\n') == 409);
    CHECK(scores == result.score_csv);

    const nlohmann::json manifest = nlohmann::json::parse(read_file(detect.out_manifest));
    CHECK(manifest["objects"] == 408);
    CHECK(manifest["alpha"] == result.alpha_used);
    CHECK(manifest["lsh"]["l"] == result.lsh.l);
    CHECK(manifest["threads"] == result.threads);
    CHECK(manifest.contains("stage_seconds"));
    CHECK(manifest["config_text"] == serialize_config(detect));

    // stage timings cover the whole pipeline
    double stage_sum = 0.0;
    for (const auto& t : result.timings) {
        CHECK(t.seconds >= 0.0);
        stage_sum += t.seconds;
    }
    CHECK(stage_sum <= result.wall_seconds * 1.5 + 0.1);
    CHECK(result.wall_seconds > 0.0);

    const nlohmann::json model = nlohmann::json::parse(read_file(detect.dump_model));
    CHECK(model.contains("regressors"));
    const std::string neighbors = read_file(detect.dump_neighbors);
    CHECK(neighbors.rfind("index,neighbor_count\n", 0) == 0);
    const std::string signatures = read_file(detect.dump_signatures);
    CHECK(signatures.rfind("index,signature_hex\n", 0) == 0);
    CHECK(std::count(signatures.begin(), signatures.end(), '\n') == 409);

    // byte-for-byte reproducibility, including across thread counts
    const DetectResult rerun = run_detect(detect);
    CHECK(rerun.score_csv == result.score_csv);
    RunConfig threaded = detect;
    threaded.threads = 3;
    const DetectResult parallel = run_detect(threaded);
    CHECK(parallel.score_csv == result.score_csv);
    CHECK(parallel.threads == 3);
}

TEST_CASE("detect: all-identical objects tie at score zero in index order") {
    const auto data = tmp_file("flat.csv");
    const auto schema_path = tmp_file("flat_schema.json");
    std::string csv = "x0,x1,y0\n";
    for (int i = 0; i < 30; ++i) csv += "5,7,1.25\n";
    write_file(data, csv);
    AttributeSchema schema;
    schema.attributes = {{"x0", Role::contextual, Kind::numeric},
                         {"x1", Role::contextual, Kind::numeric},
                         {"y0", Role::behavioral, Kind::numeric}};
    schema.save(schema_path);

    RunConfig config;
    config.dataset_path = data;
    config.schema_path = schema_path;
    config.out_scores = tmp_file("flat_scores.csv");
    config.model_kind = ModelKind::linear;
    config.alpha = AlphaSpec::parse("0.9");

    const DetectResult result = run_detect(config);
    for (std::size_t i = 0; i < 30; ++i) {
        CHECK(result.report.scores[i] == 0.0);
        CHECK(result.report.ranks[i] == i + 1);  // ties resolve to index order
    }

    // constant columns normalize to zero vectors, so automatic alpha cannot
    // sample a single usable pair
    RunConfig automatic = config;
    automatic.alpha = AlphaSpec::parse("auto");
    CHECK_THROWS_AS(run_detect(automatic), data_error);
}

TEST_CASE("evaluate: both methods produce metrics files and a csv summary") {
    Workspace ws("ev");
    ws.generate_and_inject();

    RunConfig eval = ws.config;
    eval.out_metrics = tmp_file("ev_metrics.json");
    eval.eval_name = "unit-synthetic";
    eval.alpha = AlphaSpec::parse("auto:percentile=5,r=20000");

    const MetricReport rocod_metrics = run_evaluate(eval);
    CHECK(rocod_metrics.method == "rocod");
    CHECK(rocod_metrics.dataset == "unit-synthetic");
    CHECK(rocod_metrics.prc_auc >= 0.0);
    CHECK(rocod_metrics.prc_auc <= 1.0);

    const nlohmann::json j = nlohmann::json::parse(read_file(eval.out_metrics));
    CHECK(j["method"] == "rocod");
    const std::string csv = read_file(eval.out_metrics + ".csv");
    CHECK(csv.rfind(metric_csv_header() + "\n", 0) == 0);
    CHECK(csv.find("unit-synthetic,rocod,") != std::string::npos);

    eval.eval_method = "knn-baseline";
    const MetricReport knn_metrics = run_evaluate(eval);
    CHECK(knn_metrics.method == "knn-baseline");
    CHECK(knn_metrics.prc_auc >= 0.0);
    CHECK(knn_metrics.prc_auc <= 1.0);

    // the injected behavior swaps are easy to find on this well-separated
    // mixture; anything near random (~0.02 here) would be a regression
    CHECK(rocod_metrics.prc_auc > 0.3);

    RunConfig missing = eval;
    missing.labels_path.clear();
    CHECK_THROWS_AS(run_evaluate(missing), config_error);
    RunConfig no_out = eval;
    no_out.out_metrics.clear();
    CHECK_THROWS_AS(run_evaluate(no_out), config_error);
}

TEST_CASE("bench: thread sweep keeps outputs identical") {
    Workspace ws("bench");
    ws.generate_and_inject();

    RunConfig bench = ws.config;
    bench.alpha = AlphaSpec::parse("auto:percentile=5,r=20000");
    const BenchResult result = run_bench(bench);

    REQUIRE_FALSE(result.entries.empty());
    CHECK(result.reference.threads == 1);
    int previous = 0;
    for (const BenchEntry& entry : result.entries) {
        CHECK(entry.threads > previous);  // ascending, deduplicated
        previous = entry.threads;
        CHECK(entry.seconds > 0.0);
        CHECK(entry.speedup > 0.0);
        CHECK(entry.identical_output);
    }
    CHECK(result.entries.front().threads == 1);
}

TEST_CASE("detect: required paths are checked before any work") {
    RunConfig config;
    // the output destination is validated before any loading starts
    CHECK_THROWS_WITH_AS(run_detect(config), doctest::Contains("output.scores"), config_error);
    config.out_scores = tmp_file("absent_scores.csv");
    CHECK_THROWS_WITH_AS(run_detect(config), doctest::Contains("data.dataset"), config_error);
    config.dataset_path = tmp_file("absent.csv");
    CHECK_THROWS_WITH_AS(run_detect(config), doctest::Contains("data.schema"), config_error);
    config.schema_path = tmp_file("absent_schema.json");
    CHECK_THROWS_AS(run_detect(config), data_error);  // files do not exist
}

TEST_CASE("cli: exit codes separate usage, config and data failures") {
    const std::string data = tmp_file("cli_data.csv");
    const std::string schema = tmp_file("cli_schema.json");
    const std::string labels = tmp_file("cli_labels.txt");
    const std::string scores = tmp_file("cli_scores.csv");

    CHECK(run_cli("generate --out-data " + data + " --out-schema " + schema +
                  " --out-labels " + labels +
                  " --points 150 --context-dims 3 --behavior-dims 2 --components 3") == 0);
    CHECK(std::filesystem::exists(data));

    CHECK(run_cli("detect --data " + data + " --schema " + schema + " --out-scores " + scores +
                  " --alpha 0.95 --top-n 10") == 0);
    CHECK(std::filesystem::exists(scores));

    // unknown flags are usage errors
    CHECK(run_cli("detect --frobnicate") == 1);
    CHECK(run_cli("") == 1);

    // config errors (bad values) exit 1
    CHECK(run_cli("detect --data " + data + " --schema " + schema + " --out-scores " + scores +
                  " --set bogus.key=1") == 1);

    // missing input files are data errors and exit 2
    CHECK(run_cli("detect --data " + tmp_file("cli_none.csv") + " --schema " + schema +
                  " --out-scores " + scores) == 2);

    // print-config mode emits the effective configuration and stops
    CHECK(run_cli("detect --data " + data + " --schema " + schema + " --out-scores " + scores +
                  " --print-config") == 0);
}
