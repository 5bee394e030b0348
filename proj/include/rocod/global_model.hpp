#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "rocod/dataset.hpp"

namespace rocod {

enum class ModelKind { linear, tree };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& text);

struct RidgeSpec {
    double strength = 1.0;  // L2 penalty; the intercept is never penalized
    bool intercept = true;
};

struct TreeSpec {
    unsigned max_depth = 10;        // root alone has depth 0
    unsigned min_samples_leaf = 5;  // every leaf keeps at least this many points
};

struct GlobalSpec {
    RidgeSpec ridge;
    TreeSpec tree;
};

// Binary regression tree stored as a flat node array; node 0 is the root.
// Internal nodes route x[feature] <= threshold to `left`, else `right`.
struct TreeNode {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    double value = 0.0;  // leaf prediction (mean of training targets)
    std::int32_t left = -1;
    std::int32_t right = -1;
};

struct RegressionTree {
    std::vector<TreeNode> nodes;

    double predict(std::span<const double> x) const;
    unsigned depth() const;
};

// One independent regressor per behavioral attribute, all mapping the full
// contextual vector to that attribute's expected value.
struct GlobalModel {
    ModelKind kind = ModelKind::linear;
    std::size_t cdim = 0;
    std::size_t bdim = 0;

    // linear: column-per-attribute coefficients, cdim (+1 trailing intercept
    // row when intercept is set) by bdim, row-major
    bool intercept = true;
    std::vector<double> coef;

    // tree: one tree per attribute
    std::vector<RegressionTree> trees;

    std::vector<double> training_residual_norms;  // one L2 norm per attribute

    double predict_one(std::span<const double> x, std::size_t attr) const;
    void predict_row(std::span<const double> x, std::span<double> out) const;
};

GlobalModel fit_global(const Dataset& ds, ModelKind kind, const GlobalSpec& spec);

// Expected behavioral vector for one contextual vector (length must be cdim).
std::vector<double> predict_global(const GlobalModel& model, std::span<const double> x);

// All-rows prediction, n * bdim row-major.
std::vector<double> predict_matrix(const GlobalModel& model, const Dataset& ds);

nlohmann::json model_to_json(const GlobalModel& model);
GlobalModel model_from_json(const nlohmann::json& j);

} // namespace rocod
