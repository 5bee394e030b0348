#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace rocod {

enum class Role { contextual, behavioral };
enum class Kind { numeric, categorical };

struct AttributeSpec {
    std::string name;
    Role role = Role::contextual;
    Kind kind = Kind::numeric;
};

// Schema of a CSV file before 1-of-m encoding. Column order follows the file.
struct AttributeSchema {
    std::vector<AttributeSpec> attributes;

    // Requires at least one contextual and one behavioral attribute.
    void validate() const;

    nlohmann::json to_json() const;
    static AttributeSchema from_json(const nlohmann::json& j);
    static AttributeSchema load(const std::string& path);
    void save(const std::string& path) const;
};

struct NormBounds {
    double lo = 0.0;
    double hi = 0.0;
};

// Objects z = (x, y) stored row-major as two matrices, split by role.
// Immutable once built; every pipeline stage shares it read-only.
struct Dataset {
    std::vector<std::string> context_names;  // post-encoding column names
    std::vector<std::string> behavior_names;
    std::size_t n = 0;
    std::size_t cdim = 0;  // C
    std::size_t bdim = 0;  // B
    std::vector<double> xs;  // n * cdim
    std::vector<double> ys;  // n * bdim
    std::vector<std::size_t> labels;  // ground-truth outlier indices, 0-based, sorted
    bool is_normalized = false;
    std::vector<NormBounds> context_bounds;  // recorded by normalize()
    std::vector<NormBounds> behavior_bounds;

    std::span<const double> context(std::size_t i) const { return {xs.data() + i * cdim, cdim}; }
    std::span<const double> behavior(std::size_t i) const { return {ys.data() + i * bdim, bdim}; }

    nlohmann::json summary() const;

    // Derived all-numeric schema describing this dataset's columns as saved to CSV.
    AttributeSchema derived_schema() const;
};

struct CsvOptions {
    char delimiter = ',';
};

// Reads a header+rows CSV, 1-of-m encodes categorical attributes (encoded
// column order follows first observation of each category), and splits
// columns by role. The result is not normalized.
Dataset load_csv(const std::string& path, const AttributeSchema& schema,
                 const CsvOptions& options = {});

// Min-max normalization per column. Constant columns map to all zeros.
// Idempotent: normalizing an already-normalized dataset returns it unchanged.
Dataset normalize(Dataset ds);

struct SyntheticConfig {
    std::size_t n_points = 50000;
    std::size_t context_dims = 20;
    std::size_t behavior_dims = 20;
    std::size_t components = 16;
    std::uint64_t seed = 0;
    // Shape of the mixture. component_scale controls within-component spread.
    // mapping_concentration <= 0 assigns each contextual component exactly one
    // behavioral component (a seeded permutation), so generated objects are
    // genuinely unsurprising and injected swaps are the only anomalies;
    // positive values soften the mapping into a Dirichlet-random stochastic
    // matrix, deliberately planting unlabeled behavioral noise.
    double component_scale = 0.06;
    double mapping_concentration = 0.0;
};

// Two-stage Gaussian mixture: a contextual component is drawn uniformly,
// x sampled from its Gaussian; a behavioral component is then drawn from the
// contextual component's row of a seeded row-stochastic mapping matrix and y
// sampled from that Gaussian. Component centroids are uniform in the unit
// hypercube; covariances are random SPD (A*A^T from a Gaussian factor).
// Deterministic for a fixed seed.
Dataset generate_synthetic(const SyntheticConfig& config);

// One entry per injected outlier, fully determined by the injection seed.
struct InjectionRecord {
    std::size_t donor;                    // i: source of the contextual vector
    std::vector<std::size_t> candidates;  // the p sampled objects, in draw order
    std::size_t chosen;                   // j: behaviorally farthest candidate
    std::size_t injected_index;           // index of the appended object
};

// Perturbation-scheme injection: repeat `count` times on the growing dataset:
// pick a donor i uniformly, sample p = min(50, floor(N/4)) distinct candidates
// (excluding i), take the candidate j maximizing ||y(i) - y(j)||_2 (ties:
// smallest index) and append z' = (x(i), y(j)) with its index recorded as an
// outlier label. Requires a normalized dataset and count < N/4.
Dataset inject_outliers(Dataset ds, std::size_t count, std::uint64_t seed,
                        std::vector<InjectionRecord>* audit = nullptr);

void save_csv(const Dataset& ds, const std::string& path);
void save_labels(const Dataset& ds, const std::string& path);
std::vector<std::size_t> load_labels(const std::string& path, std::size_t n);

} // namespace rocod
