#include "rocod/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "rocod/errors.hpp"
#include "rocod/format.hpp"

namespace rocod {

namespace {

std::string trim(const std::string& s) {
    const auto from = s.find_first_not_of(" \t\r\n");
    if (from == std::string::npos) return {};
    const auto to = s.find_last_not_of(" \t\r\n");
    return s.substr(from, to - from + 1);
}

double parse_double(const std::string& key, const std::string& value) {
    double out = 0.0;
    const char* end = value.data() + value.size();
    auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc{} || ptr != end) {
        throw config_error("config key " + key + ": not a number: " + value);
    }
    return out;
}

template <typename Int>
Int parse_int(const std::string& key, const std::string& value) {
    Int out = 0;
    const char* end = value.data() + value.size();
    auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc{} || ptr != end) {
        throw config_error("config key " + key + ": not a valid integer: " + value);
    }
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true") return true;
    if (value == "false") return false;
    throw config_error("config key " + key + ": expected true or false, got " + value);
}

} // namespace

AlphaSpec AlphaSpec::parse(const std::string& text) {
    AlphaSpec spec;
    if (text.rfind("auto", 0) == 0) {
        spec.automatic = true;
        if (text.size() > 4) {
            if (text[4] != ':') throw config_error("malformed alpha setting: " + text);
            std::stringstream rest(text.substr(5));
            std::string part;
            while (std::getline(rest, part, ',')) {
                const auto eq = part.find('=');
                if (eq == std::string::npos) {
                    throw config_error("malformed alpha setting: " + text);
                }
                const std::string k = part.substr(0, eq);
                const std::string v = part.substr(eq + 1);
                if (k == "percentile") {
                    spec.percentile = parse_double("alpha.percentile", v);
                } else if (k == "r") {
                    spec.samples = parse_int<std::size_t>("alpha.r", v);
                } else {
                    throw config_error("unknown alpha option: " + k);
                }
            }
        }
        return spec;
    }
    spec.automatic = false;
    spec.value = parse_double("alpha", text);
    return spec;
}

std::string AlphaSpec::serialize() const {
    if (!automatic) return format_double(value);
    std::string out = "auto:percentile=";
    append_double(out, percentile);
    if (samples > 0) {
        out += ",r=";
        out += std::to_string(samples);
    }
    return out;
}

std::string to_string(NeighborMode mode) {
    return mode == NeighborMode::exact ? "exact" : "hamming-approx";
}

NeighborMode parse_neighbor_mode(const std::string& text) {
    if (text == "exact") return NeighborMode::exact;
    if (text == "hamming-approx") return NeighborMode::hamming_approx;
    throw config_error("unknown neighbor mode: " + text + " (expected exact or hamming-approx)");
}

std::string to_string(CandidateSource source) {
    return source == CandidateSource::lsh ? "lsh" : "all-pairs";
}

CandidateSource parse_candidate_source(const std::string& text) {
    if (text == "lsh") return CandidateSource::lsh;
    if (text == "all-pairs") return CandidateSource::all_pairs;
    throw config_error("unknown candidate source: " + text + " (expected lsh or all-pairs)");
}

void apply_config_entry(RunConfig& c, const std::string& key, const std::string& value) {
    if (key == "data.dataset") c.dataset_path = value;
    else if (key == "data.schema") c.schema_path = value;
    else if (key == "data.labels") c.labels_path = value;
    else if (key == "output.dataset") c.out_dataset = value;
    else if (key == "output.schema") c.out_schema = value;
    else if (key == "output.labels") c.out_labels = value;
    else if (key == "output.scores") c.out_scores = value;
    else if (key == "output.manifest") c.out_manifest = value;
    else if (key == "output.metrics") c.out_metrics = value;
    else if (key == "alpha") c.alpha = AlphaSpec::parse(value);
    else if (key == "lsh.epsilon") c.lsh_epsilon = parse_double(key, value);
    else if (key == "lsh.d") c.lsh_d = parse_int<unsigned>(key, value);
    else if (key == "model.kind") c.model_kind = parse_model_kind(value);
    else if (key == "model.ridge_strength") c.ridge_strength = parse_double(key, value);
    else if (key == "model.ridge_intercept") c.ridge_intercept = parse_bool(key, value);
    else if (key == "model.tree_depth") c.tree_depth = parse_int<unsigned>(key, value);
    else if (key == "model.tree_leaf") c.tree_leaf = parse_int<unsigned>(key, value);
    else if (key == "neighbor.mode") c.neighbor_mode = parse_neighbor_mode(value);
    else if (key == "neighbor.source") c.candidate_source = parse_candidate_source(value);
    else if (key == "score.variant") c.score_variant = parse_score_variant(value);
    else if (key == "top_n") c.top_n = parse_int<std::size_t>(key, value);
    else if (key == "threads") c.threads = parse_int<int>(key, value);
    else if (key == "seed.generate") c.seed_generate = parse_int<std::uint64_t>(key, value);
    else if (key == "seed.inject") c.seed_inject = parse_int<std::uint64_t>(key, value);
    else if (key == "seed.lsh") c.seed_lsh = parse_int<std::uint64_t>(key, value);
    else if (key == "seed.alpha") c.seed_alpha = parse_int<std::uint64_t>(key, value);
    else if (key == "generate.points") c.gen_points = parse_int<std::size_t>(key, value);
    else if (key == "generate.context_dims") c.gen_context_dims = parse_int<std::size_t>(key, value);
    else if (key == "generate.behavior_dims") {
        c.gen_behavior_dims = parse_int<std::size_t>(key, value);
    }
    else if (key == "generate.components") c.gen_components = parse_int<std::size_t>(key, value);
    else if (key == "generate.component_scale") c.gen_component_scale = parse_double(key, value);
    else if (key == "generate.mapping_concentration") {
        c.gen_mapping_concentration = parse_double(key, value);
    }
    else if (key == "inject.count") c.inject_count = parse_int<std::size_t>(key, value);
    else if (key == "eval.method") {
        if (value != "rocod" && value != "knn-baseline") {
            throw config_error("unknown eval method: " + value +
                               " (expected rocod or knn-baseline)");
        }
        c.eval_method = value;
    }
    else if (key == "eval.name") c.eval_name = value;
    else if (key == "baseline.k") c.baseline_k = parse_int<std::size_t>(key, value);
    else if (key == "dump.neighbors") c.dump_neighbors = value;
    else if (key == "dump.signatures") c.dump_signatures = value;
    else if (key == "dump.model") c.dump_model = value;
    else throw config_error("unknown config key: " + key);
}

RunConfig parse_config_text(const std::string& text) {
    RunConfig config;
    std::stringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw config_error("config line " + std::to_string(line_no) +
                               ": expected key = value");
        }
        apply_config_entry(config, trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
    }
    return config;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("cannot read config file: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str());
}

std::string serialize_config(const RunConfig& c) {
    std::string out;
    auto put = [&out](const std::string& key, const std::string& value) {
        if (value.empty()) return;  // unset paths are omitted
        out += key;
        out += " = ";
        out += value;
        out += '\n';
    };
    auto put_always = [&out](const std::string& key, const std::string& value) {
        out += key;
        out += " = ";
        out += value;
        out += '\n';
    };
    put("data.dataset", c.dataset_path);
    put("data.schema", c.schema_path);
    put("data.labels", c.labels_path);
    put("output.dataset", c.out_dataset);
    put("output.schema", c.out_schema);
    put("output.labels", c.out_labels);
    put("output.scores", c.out_scores);
    put("output.manifest", c.out_manifest);
    put("output.metrics", c.out_metrics);
    put_always("alpha", c.alpha.serialize());
    put_always("lsh.epsilon", format_double(c.lsh_epsilon));
    put_always("lsh.d", std::to_string(c.lsh_d));
    put_always("model.kind", to_string(c.model_kind));
    put_always("model.ridge_strength", format_double(c.ridge_strength));
    put_always("model.ridge_intercept", c.ridge_intercept ? "true" : "false");
    put_always("model.tree_depth", std::to_string(c.tree_depth));
    put_always("model.tree_leaf", std::to_string(c.tree_leaf));
    put_always("neighbor.mode", to_string(c.neighbor_mode));
    put_always("neighbor.source", to_string(c.candidate_source));
    put_always("score.variant", to_string(c.score_variant));
    put_always("top_n", std::to_string(c.top_n));
    put_always("threads", std::to_string(c.threads));
    put_always("seed.generate", std::to_string(c.seed_generate));
    put_always("seed.inject", std::to_string(c.seed_inject));
    put_always("seed.lsh", std::to_string(c.seed_lsh));
    put_always("seed.alpha", std::to_string(c.seed_alpha));
    put_always("generate.points", std::to_string(c.gen_points));
    put_always("generate.context_dims", std::to_string(c.gen_context_dims));
    put_always("generate.behavior_dims", std::to_string(c.gen_behavior_dims));
    put_always("generate.components", std::to_string(c.gen_components));
    put_always("generate.component_scale", format_double(c.gen_component_scale));
    put_always("generate.mapping_concentration", format_double(c.gen_mapping_concentration));
    put_always("inject.count", std::to_string(c.inject_count));
    put_always("eval.method", c.eval_method);
    put_always("eval.name", c.eval_name);
    put_always("baseline.k", std::to_string(c.baseline_k));
    put("dump.neighbors", c.dump_neighbors);
    put("dump.signatures", c.dump_signatures);
    put("dump.model", c.dump_model);
    return out;
}

void save_config(const RunConfig& config, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("cannot write config file: " + path);
    out << serialize_config(config);
    if (!out) throw data_error("failed writing config file: " + path);
}

} // namespace rocod
