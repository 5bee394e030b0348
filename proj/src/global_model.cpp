#include "rocod/global_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "rocod/errors.hpp"

namespace rocod {

namespace {

using RowMajorMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

void validate_spec(ModelKind kind, const GlobalSpec& spec) {
    if (kind == ModelKind::linear) {
        if (!(spec.ridge.strength >= 0.0)) {
            throw config_error("ridge strength must be nonnegative");
        }
    } else {
        if (spec.tree.max_depth < 1) throw config_error("tree max_depth must be at least 1");
        if (spec.tree.min_samples_leaf < 1) {
            throw config_error("tree min_samples_leaf must be at least 1");
        }
    }
}

void fit_linear(const Dataset& ds, const RidgeSpec& ridge, GlobalModel& model) {
    const auto n = static_cast<Eigen::Index>(ds.n);
    const auto C = static_cast<Eigen::Index>(ds.cdim);
    const auto B = static_cast<Eigen::Index>(ds.bdim);
    const Eigen::Index cols = C + (ridge.intercept ? 1 : 0);

    Eigen::MatrixXd A(n, cols);
    A.leftCols(C) = RowMajorMap(ds.xs.data(), n, C);
    if (ridge.intercept) A.col(C).setOnes();
    RowMajorMap Y(ds.ys.data(), n, B);

    Eigen::MatrixXd beta;
    if (ridge.strength > 0.0) {
        Eigen::MatrixXd gram = A.transpose() * A;
        for (Eigen::Index c = 0; c < C; ++c) gram(c, c) += ridge.strength;
        Eigen::LLT<Eigen::MatrixXd> llt(gram);
        if (llt.info() != Eigen::Success) {
            throw data_error("ridge normal equations are not positive definite; "
                             "increase the regularization strength");
        }
        beta = llt.solve(A.transpose() * Y);
    } else {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
        if (qr.rank() < cols) {
            throw data_error("least-squares design matrix is rank deficient; "
                             "set ridge strength > 0");
        }
        beta = qr.solve(Y);
    }

    model.coef.resize(static_cast<std::size_t>(cols) * ds.bdim);
    for (Eigen::Index r = 0; r < cols; ++r) {
        for (Eigen::Index b = 0; b < B; ++b) {
            model.coef[static_cast<std::size_t>(r) * ds.bdim + static_cast<std::size_t>(b)] =
                beta(r, b);
        }
    }
}

// Presorted CART: the caller provides, for every feature, the object indices
// sorted by that feature's value (ties by index). Splitting partitions every
// per-feature order stably, so no node-level re-sorting is needed.
class TreeBuilder {
public:
    TreeBuilder(const Dataset& ds, std::vector<double> targets, const TreeSpec& spec,
                const std::vector<std::vector<std::uint32_t>>& root_order)
        : xs_(ds.xs.data()), cdim_(ds.cdim), y_(std::move(targets)), spec_(spec),
          root_order_(root_order), side_(ds.n, 0) {}

    RegressionTree build() {
        RegressionTree tree;
        nodes_ = &tree.nodes;
        grow(root_order_, 0);
        return tree;
    }

private:
    double feature(std::uint32_t i, std::size_t f) const { return xs_[i * cdim_ + f]; }

    std::int32_t grow(const std::vector<std::vector<std::uint32_t>>& order, unsigned depth) {
        const std::size_t m = order[0].size();
        double sum = 0.0, sum2 = 0.0;
        for (const std::uint32_t i : order[0]) {
            sum += y_[i];
            sum2 += y_[i] * y_[i];
        }
        const double mean = sum / static_cast<double>(m);
        const double total_sse = sum2 - sum * sum / static_cast<double>(m);

        const auto id = static_cast<std::int32_t>(nodes_->size());
        TreeNode node;
        node.value = mean;
        nodes_->push_back(node);

        if (depth >= spec_.max_depth || m < 2 * spec_.min_samples_leaf || total_sse <= 0.0) {
            return id;
        }

        std::size_t best_f = cdim_;
        std::size_t best_k = 0;
        double best_threshold = 0.0;
        double best_cost = std::numeric_limits<double>::infinity();
        for (std::size_t f = 0; f < cdim_; ++f) {
            const auto& ord = order[f];
            double ls = 0.0, ls2 = 0.0;
            for (std::size_t k = 0; k + 1 < m; ++k) {
                const double yv = y_[ord[k]];
                ls += yv;
                ls2 += yv * yv;
                const std::size_t lc = k + 1;
                const std::size_t rc = m - lc;
                if (lc < spec_.min_samples_leaf || rc < spec_.min_samples_leaf) continue;
                const double lo = feature(ord[k], f);
                const double hi = feature(ord[k + 1], f);
                if (!(lo < hi)) continue;
                const double rs = sum - ls;
                const double rs2 = sum2 - ls2;
                const double cost = (ls2 - ls * ls / static_cast<double>(lc)) +
                                    (rs2 - rs * rs / static_cast<double>(rc));
                if (cost < best_cost) {
                    best_cost = cost;
                    best_f = f;
                    best_k = k;
                    // keep training partition and predict-time routing consistent
                    // when the midpoint rounds up to the higher value
                    double mid = lo + (hi - lo) / 2.0;
                    if (!(mid < hi)) mid = lo;
                    best_threshold = mid;
                }
            }
        }
        if (best_f == cdim_) return id;  // no admissible split

        const auto& split_ord = order[best_f];
        for (std::size_t k = 0; k < m; ++k) side_[split_ord[k]] = k <= best_k ? 1 : 0;

        std::vector<std::vector<std::uint32_t>> left(cdim_), right(cdim_);
        for (std::size_t f = 0; f < cdim_; ++f) {
            left[f].reserve(best_k + 1);
            right[f].reserve(m - best_k - 1);
            for (const std::uint32_t i : order[f]) {
                (side_[i] ? left[f] : right[f]).push_back(i);
            }
        }

        const std::int32_t l = grow(left, depth + 1);
        left.clear();
        const std::int32_t r = grow(right, depth + 1);
        (*nodes_)[id].feature = static_cast<std::int32_t>(best_f);
        (*nodes_)[id].threshold = best_threshold;
        (*nodes_)[id].left = l;
        (*nodes_)[id].right = r;
        return id;
    }

    const double* xs_;
    std::size_t cdim_;
    std::vector<double> y_;
    TreeSpec spec_;
    const std::vector<std::vector<std::uint32_t>>& root_order_;
    std::vector<std::uint8_t> side_;
    std::vector<TreeNode>* nodes_ = nullptr;
};

void fit_trees(const Dataset& ds, const TreeSpec& spec, GlobalModel& model) {
    std::vector<std::vector<std::uint32_t>> root_order(ds.cdim);
    for (std::size_t f = 0; f < ds.cdim; ++f) {
        auto& ord = root_order[f];
        ord.resize(ds.n);
        std::iota(ord.begin(), ord.end(), 0u);
        std::stable_sort(ord.begin(), ord.end(), [&](std::uint32_t a, std::uint32_t b) {
            return ds.xs[a * ds.cdim + f] < ds.xs[b * ds.cdim + f];
        });
    }

    model.trees.resize(ds.bdim);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t bb = 0; bb < static_cast<std::ptrdiff_t>(ds.bdim); ++bb) {
        const std::size_t b = static_cast<std::size_t>(bb);
        std::vector<double> targets(ds.n);
        for (std::size_t i = 0; i < ds.n; ++i) targets[i] = ds.ys[i * ds.bdim + b];
        TreeBuilder builder(ds, std::move(targets), spec, root_order);
        model.trees[b] = builder.build();
    }
}

} // namespace

std::string to_string(ModelKind kind) {
    return kind == ModelKind::linear ? "linear" : "tree";
}

ModelKind parse_model_kind(const std::string& text) {
    if (text == "linear") return ModelKind::linear;
    if (text == "tree") return ModelKind::tree;
    throw config_error("unknown model kind: " + text + " (expected linear or tree)");
}

double RegressionTree::predict(std::span<const double> x) const {
    std::size_t at = 0;
    while (nodes[at].feature >= 0) {
        const TreeNode& node = nodes[at];
        const bool go_left = x[static_cast<std::size_t>(node.feature)] <= node.threshold;
        at = static_cast<std::size_t>(go_left ? node.left : node.right);
    }
    return nodes[at].value;
}

unsigned RegressionTree::depth() const {
    if (nodes.empty()) return 0;
    // iterative depth-first walk over the flat node array
    std::vector<std::pair<std::int32_t, unsigned>> stack{{0, 0}};
    unsigned deepest = 0;
    while (!stack.empty()) {
        const auto [at, d] = stack.back();
        stack.pop_back();
        deepest = std::max(deepest, d);
        const TreeNode& node = nodes[static_cast<std::size_t>(at)];
        if (node.feature >= 0) {
            stack.emplace_back(node.left, d + 1);
            stack.emplace_back(node.right, d + 1);
        }
    }
    return deepest;
}

GlobalModel fit_global(const Dataset& ds, ModelKind kind, const GlobalSpec& spec) {
    validate_spec(kind, spec);
    if (ds.n < 2) throw data_error("global model needs at least two objects");

    GlobalModel model;
    model.kind = kind;
    model.cdim = ds.cdim;
    model.bdim = ds.bdim;
    model.intercept = spec.ridge.intercept;
    if (kind == ModelKind::linear) {
        fit_linear(ds, spec.ridge, model);
    } else {
        fit_trees(ds, spec.tree, model);
    }

    model.training_residual_norms.assign(ds.bdim, 0.0);
    std::vector<double> predicted(ds.bdim);
    for (std::size_t i = 0; i < ds.n; ++i) {
        model.predict_row(ds.context(i), predicted);
        for (std::size_t b = 0; b < ds.bdim; ++b) {
            const double r = ds.ys[i * ds.bdim + b] - predicted[b];
            model.training_residual_norms[b] += r * r;
        }
    }
    for (double& v : model.training_residual_norms) v = std::sqrt(v);
    return model;
}

double GlobalModel::predict_one(std::span<const double> x, std::size_t attr) const {
    if (kind == ModelKind::tree) return trees[attr].predict(x);
    double value = intercept ? coef[cdim * bdim + attr] : 0.0;
    for (std::size_t c = 0; c < cdim; ++c) value += coef[c * bdim + attr] * x[c];
    return value;
}

void GlobalModel::predict_row(std::span<const double> x, std::span<double> out) const {
    for (std::size_t b = 0; b < bdim; ++b) out[b] = predict_one(x, b);
}

std::vector<double> predict_global(const GlobalModel& model, std::span<const double> x) {
    if (x.size() != model.cdim) {
        throw config_error("contextual vector has length " + std::to_string(x.size()) +
                           ", model expects " + std::to_string(model.cdim));
    }
    std::vector<double> out(model.bdim);
    model.predict_row(x, out);
    return out;
}

std::vector<double> predict_matrix(const GlobalModel& model, const Dataset& ds) {
    if (ds.cdim != model.cdim) {
        throw config_error("dataset contextual width " + std::to_string(ds.cdim) +
                           " does not match model width " + std::to_string(model.cdim));
    }
    std::vector<double> out(ds.n * model.bdim);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(ds.n); ++ii) {
        const std::size_t i = static_cast<std::size_t>(ii);
        model.predict_row(ds.context(i), {out.data() + i * model.bdim, model.bdim});
    }
    return out;
}

nlohmann::json model_to_json(const GlobalModel& model) {
    nlohmann::json j;
    j["kind"] = to_string(model.kind);
    j["contextual_dims"] = model.cdim;
    j["behavioral_dims"] = model.bdim;
    j["training_residual_norms"] = model.training_residual_norms;
    if (model.kind == ModelKind::linear) {
        j["intercept"] = model.intercept;
        nlohmann::json attrs = nlohmann::json::array();
        for (std::size_t b = 0; b < model.bdim; ++b) {
            nlohmann::json entry;
            std::vector<double> weights(model.cdim);
            for (std::size_t c = 0; c < model.cdim; ++c) {
                weights[c] = model.coef[c * model.bdim + b];
            }
            entry["coefficients"] = weights;
            if (model.intercept) entry["intercept_term"] = model.coef[model.cdim * model.bdim + b];
            attrs.push_back(std::move(entry));
        }
        j["regressors"] = std::move(attrs);
    } else {
        nlohmann::json attrs = nlohmann::json::array();
        for (const RegressionTree& tree : model.trees) {
            nlohmann::json nodes = nlohmann::json::array();
            for (const TreeNode& node : tree.nodes) {
                nodes.push_back({{"feature", node.feature},
                                 {"threshold", node.threshold},
                                 {"value", node.value},
                                 {"left", node.left},
                                 {"right", node.right}});
            }
            attrs.push_back(std::move(nodes));
        }
        j["regressors"] = std::move(attrs);
    }
    return j;
}

GlobalModel model_from_json(const nlohmann::json& j) {
    GlobalModel model;
    model.kind = parse_model_kind(j.at("kind").get<std::string>());
    model.cdim = j.at("contextual_dims").get<std::size_t>();
    model.bdim = j.at("behavioral_dims").get<std::size_t>();
    model.training_residual_norms =
        j.value("training_residual_norms", std::vector<double>(model.bdim, 0.0));
    const auto& attrs = j.at("regressors");
    if (attrs.size() != model.bdim) {
        throw data_error("model document lists " + std::to_string(attrs.size()) +
                         " regressors for " + std::to_string(model.bdim) + " attributes");
    }
    if (model.kind == ModelKind::linear) {
        model.intercept = j.value("intercept", true);
        const std::size_t rows = model.cdim + (model.intercept ? 1 : 0);
        model.coef.assign(rows * model.bdim, 0.0);
        for (std::size_t b = 0; b < model.bdim; ++b) {
            const auto& entry = attrs[b];
            const auto weights = entry.at("coefficients").get<std::vector<double>>();
            if (weights.size() != model.cdim) {
                throw data_error("regressor coefficient length mismatch");
            }
            for (std::size_t c = 0; c < model.cdim; ++c) {
                model.coef[c * model.bdim + b] = weights[c];
            }
            if (model.intercept) {
                model.coef[model.cdim * model.bdim + b] = entry.at("intercept_term").get<double>();
            }
        }
    } else {
        model.trees.resize(model.bdim);
        for (std::size_t b = 0; b < model.bdim; ++b) {
            for (const auto& entry : attrs[b]) {
                TreeNode node;
                node.feature = entry.at("feature").get<std::int32_t>();
                node.threshold = entry.at("threshold").get<double>();
                node.value = entry.at("value").get<double>();
                node.left = entry.at("left").get<std::int32_t>();
                node.right = entry.at("right").get<std::int32_t>();
                model.trees[b].nodes.push_back(node);
            }
        }
    }
    return model;
}

} // namespace rocod
