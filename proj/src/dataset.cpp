#include "rocod/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "rocod/errors.hpp"
#include "rocod/format.hpp"

namespace rocod {

namespace {

const char* role_name(Role r) {
    return r == Role::contextual ? "contextual" : "behavioral";
}

const char* kind_name(Kind k) {
    return k == Kind::numeric ? "numeric" : "categorical";
}

Role parse_role(const std::string& s) {
    if (s == "contextual") return Role::contextual;
    if (s == "behavioral") return Role::behavioral;
    throw data_error("unknown attribute role: '" + s + "'");
}

Kind parse_kind(const std::string& s) {
    if (s == "numeric") return Kind::numeric;
    if (s == "categorical") return Kind::categorical;
    throw data_error("unknown attribute kind: '" + s + "'");
}

std::string_view trim(std::string_view sv) {
    while (!sv.empty() && (sv.front() == ' ' || sv.front() == '\t')) sv.remove_prefix(1);
    while (!sv.empty() && (sv.back() == ' ' || sv.back() == '\t')) sv.remove_suffix(1);
    return sv;
}

std::vector<std::string_view> split_fields(std::string_view line, char delim) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(delim, start);
        if (pos == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
    return out;
}

double parse_double_field(std::string_view field, std::size_t line_no) {
    double value = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || field.empty()) {
        throw data_error("line " + std::to_string(line_no) + ": cannot parse numeric value '" +
                         std::string(field) + "'");
    }
    return value;
}

nlohmann::json bounds_json(const std::vector<std::string>& names,
                           const std::vector<NormBounds>& bounds) {
    nlohmann::json j = nlohmann::json::object();
    for (std::size_t i = 0; i < bounds.size(); ++i) {
        j[names[i]] = {bounds[i].lo, bounds[i].hi};
    }
    return j;
}

} // namespace

void AttributeSchema::validate() const {
    if (attributes.empty()) throw config_error("schema has no attributes");
    bool has_ctx = false, has_beh = false;
    for (const auto& a : attributes) {
        if (a.name.empty()) throw config_error("schema attribute with empty name");
        (a.role == Role::contextual ? has_ctx : has_beh) = true;
    }
    if (!has_ctx) throw config_error("schema needs at least one contextual attribute");
    if (!has_beh) throw config_error("schema needs at least one behavioral attribute");
}

nlohmann::json AttributeSchema::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& a : attributes) {
        arr.push_back({{"name", a.name}, {"role", role_name(a.role)}, {"kind", kind_name(a.kind)}});
    }
    return {{"attributes", arr}};
}

AttributeSchema AttributeSchema::from_json(const nlohmann::json& j) {
    AttributeSchema schema;
    if (!j.contains("attributes") || !j["attributes"].is_array()) {
        throw data_error("schema JSON needs an 'attributes' array");
    }
    for (const auto& e : j["attributes"]) {
        AttributeSpec spec;
        spec.name = e.at("name").get<std::string>();
        spec.role = parse_role(e.at("role").get<std::string>());
        spec.kind = parse_kind(e.value("kind", std::string("numeric")));
        schema.attributes.push_back(std::move(spec));
    }
    schema.validate();
    return schema;
}

AttributeSchema AttributeSchema::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open schema file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw data_error("invalid schema JSON in " + path + ": " + e.what());
    }
    return from_json(j);
}

void AttributeSchema::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write schema file: " + path);
    out << to_json().dump(2) << "\n";
}

nlohmann::json Dataset::summary() const {
    nlohmann::json j;
    j["n"] = n;
    j["context_dims"] = cdim;
    j["behavior_dims"] = bdim;
    j["outliers"] = labels.size();
    j["normalized"] = is_normalized;
    if (is_normalized) {
        j["context_bounds"] = bounds_json(context_names, context_bounds);
        j["behavior_bounds"] = bounds_json(behavior_names, behavior_bounds);
    }
    return j;
}

AttributeSchema Dataset::derived_schema() const {
    AttributeSchema schema;
    for (const auto& name : context_names) {
        schema.attributes.push_back({name, Role::contextual, Kind::numeric});
    }
    for (const auto& name : behavior_names) {
        schema.attributes.push_back({name, Role::behavioral, Kind::numeric});
    }
    return schema;
}

Dataset load_csv(const std::string& path, const AttributeSchema& schema,
                 const CsvOptions& options) {
    schema.validate();
    std::ifstream in(path);
    if (!in) throw data_error("cannot open dataset file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw data_error("empty file: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const std::size_t n_attrs = schema.attributes.size();
    auto header = split_fields(line, options.delimiter);
    if (header.size() != n_attrs) {
        throw data_error("header has " + std::to_string(header.size()) + " columns, schema expects " +
                         std::to_string(n_attrs));
    }
    for (std::size_t a = 0; a < n_attrs; ++a) {
        if (header[a] != schema.attributes[a].name) {
            throw data_error("header column " + std::to_string(a) + " is '" + std::string(header[a]) +
                             "', schema expects '" + schema.attributes[a].name + "'");
        }
    }

    // Per-attribute staging: numeric values, or category ids in observation order.
    std::vector<std::vector<double>> numeric_cols(n_attrs);
    std::vector<std::vector<std::uint32_t>> category_ids(n_attrs);
    std::vector<std::vector<std::string>> categories(n_attrs);
    std::vector<std::unordered_map<std::string, std::uint32_t>> category_lookup(n_attrs);

    std::size_t line_no = 1;
    std::size_t n_rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_fields(line, options.delimiter);
        if (fields.size() != n_attrs) {
            throw data_error("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(n_attrs) + " fields, got " + std::to_string(fields.size()));
        }
        for (std::size_t a = 0; a < n_attrs; ++a) {
            if (schema.attributes[a].kind == Kind::numeric) {
                numeric_cols[a].push_back(parse_double_field(fields[a], line_no));
            } else {
                std::string cat(fields[a]);
                auto [it, inserted] = category_lookup[a].emplace(cat, categories[a].size());
                if (inserted) categories[a].push_back(cat);
                category_ids[a].push_back(it->second);
            }
        }
        ++n_rows;
    }
    if (n_rows == 0) throw data_error("no data rows in " + path);

    Dataset ds;
    ds.n = n_rows;

    // Derived-column layout: (block offset, name) per source attribute.
    std::vector<std::size_t> col_offset(n_attrs);
    for (std::size_t a = 0; a < n_attrs; ++a) {
        const auto& attr = schema.attributes[a];
        auto& names = attr.role == Role::contextual ? ds.context_names : ds.behavior_names;
        col_offset[a] = names.size();
        if (attr.kind == Kind::numeric) {
            names.push_back(attr.name);
        } else {
            for (const auto& cat : categories[a]) names.push_back(attr.name + "=" + cat);
        }
    }
    ds.cdim = ds.context_names.size();
    ds.bdim = ds.behavior_names.size();
    if (ds.cdim == 0 || ds.bdim == 0) {
        throw data_error("dataset must have at least one contextual and one behavioral column");
    }
    ds.xs.assign(ds.n * ds.cdim, 0.0);
    ds.ys.assign(ds.n * ds.bdim, 0.0);

    for (std::size_t a = 0; a < n_attrs; ++a) {
        const auto& attr = schema.attributes[a];
        const bool ctx = attr.role == Role::contextual;
        double* block = ctx ? ds.xs.data() : ds.ys.data();
        const std::size_t dim = ctx ? ds.cdim : ds.bdim;
        if (attr.kind == Kind::numeric) {
            for (std::size_t i = 0; i < n_rows; ++i) {
                block[i * dim + col_offset[a]] = numeric_cols[a][i];
            }
        } else {
            for (std::size_t i = 0; i < n_rows; ++i) {
                block[i * dim + col_offset[a] + category_ids[a][i]] = 1.0;
            }
        }
    }
    return ds;
}

namespace {

void normalize_block(std::vector<double>& data, std::size_t n, std::size_t dim,
                     std::vector<NormBounds>& bounds) {
    bounds.assign(dim, NormBounds{});
    for (std::size_t c = 0; c < dim; ++c) {
        double lo = data[c], hi = data[c];
        for (std::size_t i = 1; i < n; ++i) {
            double v = data[i * dim + c];
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        bounds[c] = {lo, hi};
        const double range = hi - lo;
        for (std::size_t i = 0; i < n; ++i) {
            double& v = data[i * dim + c];
            v = range > 0.0 ? (v - lo) / range : 0.0;
        }
    }
}

} // namespace

Dataset normalize(Dataset ds) {
    if (ds.is_normalized) return ds;
    if (ds.n == 0) throw config_error("cannot normalize an empty dataset");
    normalize_block(ds.xs, ds.n, ds.cdim, ds.context_bounds);
    normalize_block(ds.ys, ds.n, ds.bdim, ds.behavior_bounds);
    ds.is_normalized = true;
    return ds;
}

Dataset generate_synthetic(const SyntheticConfig& config) {
    if (config.n_points == 0 || config.context_dims == 0 || config.behavior_dims == 0 ||
        config.components == 0) {
        throw config_error("synthetic generator counts must all be positive");
    }
    const std::size_t K = config.components;
    const std::size_t C = config.context_dims;
    const std::size_t B = config.behavior_dims;

    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    // Component centroids in the unit hypercube and SPD covariance factors
    // (covariance = factor * factor^T, drawn entrywise Gaussian).
    auto draw_components = [&](std::size_t dim, std::vector<double>& centroids,
                               std::vector<double>& factors) {
        const double entry_scale = config.component_scale / std::sqrt(static_cast<double>(dim));
        centroids.resize(K * dim);
        factors.resize(K * dim * dim);
        for (std::size_t k = 0; k < K; ++k) {
            for (std::size_t d = 0; d < dim; ++d) centroids[k * dim + d] = unit(rng);
            for (std::size_t r = 0; r < dim * dim; ++r) {
                factors[k * dim * dim + r] = gauss(rng) * entry_scale;
            }
        }
    };

    std::vector<double> ctx_centroids, ctx_factors, beh_centroids, beh_factors;
    draw_components(C, ctx_centroids, ctx_factors);
    draw_components(B, beh_centroids, beh_factors);

    // Row-stochastic contextual-component -> behavioral-component mapping.
    // Non-positive concentration: a one-to-one assignment (shuffled identity),
    // so context determines behavior exactly up to component noise. Positive:
    // Dirichlet rows that occasionally place mass on several components.
    std::vector<double> mapping(K * K, 0.0);
    if (config.mapping_concentration <= 0.0) {
        std::vector<std::size_t> target(K);
        std::iota(target.begin(), target.end(), std::size_t{0});
        std::shuffle(target.begin(), target.end(), rng);
        for (std::size_t k = 0; k < K; ++k) mapping[k * K + target[k]] = 1.0;
    } else {
        std::gamma_distribution<double> gamma(config.mapping_concentration, 1.0);
        for (std::size_t k = 0; k < K; ++k) {
            double sum = 0.0;
            for (std::size_t k2 = 0; k2 < K; ++k2) {
                mapping[k * K + k2] = gamma(rng);
                sum += mapping[k * K + k2];
            }
            if (sum > 0.0) {
                for (std::size_t k2 = 0; k2 < K; ++k2) mapping[k * K + k2] /= sum;
            } else {
                mapping[k * K + k % K] = 1.0;
            }
        }
    }

    Dataset ds;
    ds.n = config.n_points;
    ds.cdim = C;
    ds.bdim = B;
    ds.xs.resize(ds.n * C);
    ds.ys.resize(ds.n * B);
    for (std::size_t d = 0; d < C; ++d) ds.context_names.push_back("x" + std::to_string(d));
    for (std::size_t d = 0; d < B; ++d) ds.behavior_names.push_back("y" + std::to_string(d));

    std::uniform_int_distribution<std::size_t> pick_component(0, K - 1);
    std::vector<double> noise(std::max(C, B));

    auto sample_point = [&](std::size_t comp, std::size_t dim, const std::vector<double>& centroids,
                            const std::vector<double>& factors, double* out) {
        for (std::size_t d = 0; d < dim; ++d) noise[d] = gauss(rng);
        const double* mu = centroids.data() + comp * dim;
        const double* A = factors.data() + comp * dim * dim;
        for (std::size_t d = 0; d < dim; ++d) {
            double v = mu[d];
            const double* row = A + d * dim;
            for (std::size_t c = 0; c < dim; ++c) v += row[c] * noise[c];
            out[d] = v;
        }
    };

    for (std::size_t i = 0; i < ds.n; ++i) {
        const std::size_t cc = pick_component(rng);
        sample_point(cc, C, ctx_centroids, ctx_factors, ds.xs.data() + i * C);

        const double u = unit(rng);
        std::size_t bc = K - 1;
        double acc = 0.0;
        for (std::size_t k2 = 0; k2 < K; ++k2) {
            acc += mapping[cc * K + k2];
            if (u < acc) {
                bc = k2;
                break;
            }
        }
        sample_point(bc, B, beh_centroids, beh_factors, ds.ys.data() + i * B);
    }
    return ds;
}

Dataset inject_outliers(Dataset ds, std::size_t count, std::uint64_t seed,
                        std::vector<InjectionRecord>* audit) {
    if (!ds.is_normalized) throw config_error("inject_outliers requires a normalized dataset");
    if (count == 0) throw config_error("injection count must be at least 1");
    if (4 * count >= ds.n) {
        throw config_error("injection count " + std::to_string(count) +
                           " is not meaningful for a dataset of " + std::to_string(ds.n) +
                           " objects (must stay below N/4)");
    }
    if (audit) audit->clear();

    std::mt19937_64 rng(seed);
    for (std::size_t t = 0; t < count; ++t) {
        const std::size_t n_cur = ds.n;
        std::uniform_int_distribution<std::size_t> pick(0, n_cur - 1);
        const std::size_t donor = pick(rng);
        const std::size_t p = std::min<std::size_t>(50, n_cur / 4);

        std::vector<std::size_t> candidates;
        candidates.reserve(p);
        std::unordered_set<std::size_t> seen;
        while (candidates.size() < p) {
            const std::size_t c = pick(rng);
            if (c == donor || !seen.insert(c).second) continue;
            candidates.push_back(c);
        }

        const auto donor_y = ds.behavior(donor);
        std::size_t best = candidates.front();
        double best_d2 = -1.0;
        for (const std::size_t c : candidates) {
            const auto cy = ds.behavior(c);
            double d2 = 0.0;
            for (std::size_t d = 0; d < ds.bdim; ++d) {
                const double diff = donor_y[d] - cy[d];
                d2 += diff * diff;
            }
            if (d2 > best_d2 || (d2 == best_d2 && c < best)) {
                best = c;
                best_d2 = d2;
            }
        }

        const std::size_t injected = ds.n;
        ds.xs.insert(ds.xs.end(), ds.xs.begin() + donor * ds.cdim,
                     ds.xs.begin() + (donor + 1) * ds.cdim);
        ds.ys.insert(ds.ys.end(), ds.ys.begin() + best * ds.bdim,
                     ds.ys.begin() + (best + 1) * ds.bdim);
        ds.n += 1;
        ds.labels.push_back(injected);
        if (audit) audit->push_back({donor, std::move(candidates), best, injected});
    }
    std::sort(ds.labels.begin(), ds.labels.end());
    return ds;
}

void save_csv(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write dataset file: " + path);
    std::string buf;
    for (std::size_t c = 0; c < ds.cdim; ++c) {
        if (c) buf += ',';
        buf += ds.context_names[c];
    }
    for (std::size_t c = 0; c < ds.bdim; ++c) {
        buf += ',';
        buf += ds.behavior_names[c];
    }
    buf += '\n';
    out << buf;
    for (std::size_t i = 0; i < ds.n; ++i) {
        buf.clear();
        for (std::size_t c = 0; c < ds.cdim; ++c) {
            if (c) buf += ',';
            append_double(buf, ds.xs[i * ds.cdim + c]);
        }
        for (std::size_t c = 0; c < ds.bdim; ++c) {
            buf += ',';
            append_double(buf, ds.ys[i * ds.bdim + c]);
        }
        buf += '\n';
        out << buf;
    }
    if (!out) throw data_error("failed writing dataset file: " + path);
}

void save_labels(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write label file: " + path);
    for (const std::size_t idx : ds.labels) out << idx << "\n";
    if (!out) throw data_error("failed writing label file: " + path);
}

std::vector<std::size_t> load_labels(const std::string& path, std::size_t n) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open label file: " + path);
    std::vector<std::size_t> labels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto sv = trim(line);
        if (sv.empty()) continue;
        std::size_t value = 0;
        auto [ptr, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), value);
        if (ec != std::errc() || ptr != sv.data() + sv.size()) {
            throw data_error("label file " + path + " line " + std::to_string(line_no) +
                             ": cannot parse index '" + std::string(sv) + "'");
        }
        if (value >= n) {
            throw data_error("label file " + path + " line " + std::to_string(line_no) + ": index " +
                             std::to_string(value) + " out of range for N=" + std::to_string(n));
        }
        labels.push_back(value);
    }
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    return labels;
}

} // namespace rocod
