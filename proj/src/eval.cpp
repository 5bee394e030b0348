#include "rocod/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>

#include <nlohmann/json.hpp>

#include "rocod/errors.hpp"
#include "rocod/format.hpp"

namespace rocod {

namespace {

std::vector<std::uint8_t> outlier_flags(const LabeledRanking& lr) {
    std::vector<std::uint8_t> flag(lr.n_objects, 0);
    for (const std::uint32_t o : lr.outliers) flag[o] = 1;
    return flag;
}

void check_cutoff(const LabeledRanking& lr, std::size_t n) {
    if (n < 1 || n > lr.n_objects) {
        throw config_error("metric cutoff " + std::to_string(n) + " outside [1, " +
                           std::to_string(lr.n_objects) + "]");
    }
}

} // namespace

void LabeledRanking::validate() const {
    if (ranking.size() != n_objects) {
        throw data_error("ranking length " + std::to_string(ranking.size()) +
                         " does not match object count " + std::to_string(n_objects));
    }
    std::vector<std::uint8_t> seen(n_objects, 0);
    for (const std::uint32_t i : ranking) {
        if (i >= n_objects || seen[i]) {
            throw data_error("ranking is not a permutation of the object indices");
        }
        seen[i] = 1;
    }
    if (outliers.empty()) throw data_error("ground-truth outlier set is empty");
    for (const std::uint32_t o : outliers) {
        if (o >= n_objects) {
            throw data_error("outlier label " + std::to_string(o) + " out of range");
        }
    }
    if (!std::is_sorted(outliers.begin(), outliers.end())) {
        throw data_error("outlier labels must be sorted");
    }
}

LabeledRanking make_ranking(const ScoreReport& report, std::vector<std::uint32_t> outliers) {
    LabeledRanking lr;
    lr.ranking = report.order;
    lr.outliers = std::move(outliers);
    std::sort(lr.outliers.begin(), lr.outliers.end());
    lr.outliers.erase(std::unique(lr.outliers.begin(), lr.outliers.end()), lr.outliers.end());
    lr.n_objects = report.order.size();
    lr.validate();
    return lr;
}

double precision_at_n(const LabeledRanking& lr, std::size_t n) {
    check_cutoff(lr, n);
    const auto flag = outlier_flags(lr);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) hits += flag[lr.ranking[i]];
    return static_cast<double>(hits) / static_cast<double>(n);
}

double ndcg_at_n(const LabeledRanking& lr, std::size_t n) {
    check_cutoff(lr, n);
    const auto flag = outlier_flags(lr);
    double dcg = flag[lr.ranking[0]] ? 1.0 : 0.0;
    double ideal = 1.0;
    for (std::size_t i = 2; i <= n; ++i) {
        const double discount = 1.0 / std::log2(static_cast<double>(i));
        if (flag[lr.ranking[i - 1]]) dcg += discount;
        ideal += discount;
    }
    return dcg / ideal;
}

double prc_auc(const LabeledRanking& lr) {
    if (lr.outliers.empty()) throw data_error("ground-truth outlier set is empty");
    const auto flag = outlier_flags(lr);
    double sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < lr.ranking.size(); ++i) {
        if (flag[lr.ranking[i]]) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(i + 1);
        }
    }
    return sum / static_cast<double>(lr.outliers.size());
}

std::size_t default_metric_n(std::size_t n_outliers) {
    return std::max<std::size_t>(1, std::min<std::size_t>(100, n_outliers * 4));
}

MetricReport evaluate_ranking(const LabeledRanking& lr, const std::string& dataset,
                              const std::string& method, std::vector<std::size_t> ns) {
    lr.validate();
    MetricReport report;
    report.dataset = dataset;
    report.method = method;
    report.headline_n = std::min<std::size_t>(100, lr.n_objects);
    if (ns.empty()) {
        ns = {std::min(default_metric_n(lr.outliers.size()), lr.n_objects), report.headline_n};
    }
    std::sort(ns.begin(), ns.end());
    ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
    for (const std::size_t n : ns) {
        report.precision_at[n] = precision_at_n(lr, n);
        report.ndcg_at[n] = ndcg_at_n(lr, n);
    }
    report.prc_auc = prc_auc(lr);
    if (!report.precision_at.count(report.headline_n)) {
        report.headline_n = report.precision_at.rbegin()->first;
    }
    return report;
}

nlohmann::json metrics_to_json(const MetricReport& report) {
    nlohmann::json j;
    j["dataset"] = report.dataset;
    j["method"] = report.method;
    j["prc_auc"] = report.prc_auc;
    nlohmann::json precision = nlohmann::json::object();
    nlohmann::json ndcg = nlohmann::json::object();
    for (const auto& [n, v] : report.precision_at) precision[std::to_string(n)] = v;
    for (const auto& [n, v] : report.ndcg_at) ndcg[std::to_string(n)] = v;
    j["precision_at"] = std::move(precision);
    j["ndcg_at"] = std::move(ndcg);
    j["headline_n"] = report.headline_n;
    return j;
}

std::string metric_csv_header() {
    return "dataset,method,prc_auc,p@100,ndcg@100";
}

std::string metric_csv_row(const MetricReport& report) {
    std::string row = report.dataset;
    row += ',';
    row += report.method;
    row += ',';
    append_double(row, report.prc_auc);
    row += ',';
    append_double(row, report.precision_at.at(report.headline_n));
    row += ',';
    append_double(row, report.ndcg_at.at(report.headline_n));
    return row;
}

namespace {

// Exact k-th nearest neighbor distances via a vantage-point tree. The tree
// partitions by distance to a vantage object (inside/outside the median
// radius) and searches with triangle-inequality pruning, so results equal
// brute force for any build order.
class VpTree {
public:
    VpTree(const std::vector<double>& points, std::size_t n, std::size_t dims)
        : points_(points), dims_(dims) {
        std::vector<std::uint32_t> ids(n);
        std::iota(ids.begin(), ids.end(), 0u);
        nodes_.reserve(n);
        root_ = build(ids.data(), ids.size());
    }

    // Largest of the m smallest distances from the query to tree points
    // (the query object itself included if it is in the tree).
    double mth_distance(const double* query, std::size_t m) const {
        std::priority_queue<double> heap;  // max-heap of the m best so far
        search(root_, query, m, heap);
        return heap.top();
    }

private:
    struct Node {
        std::uint32_t point = 0;
        double radius = 0.0;
        std::int32_t inside = -1;
        std::int32_t outside = -1;
    };

    double distance(std::uint32_t a, const double* q) const {
        const double* p = points_.data() + static_cast<std::size_t>(a) * dims_;
        double s = 0.0;
        for (std::size_t d = 0; d < dims_; ++d) {
            const double diff = p[d] - q[d];
            s += diff * diff;
        }
        return std::sqrt(s);
    }

    std::int32_t build(std::uint32_t* ids, std::size_t count) {
        if (count == 0) return -1;
        const auto id = static_cast<std::int32_t>(nodes_.size());
        nodes_.push_back(Node{ids[0], 0.0, -1, -1});
        if (count == 1) return id;

        const double* vantage = points_.data() + static_cast<std::size_t>(ids[0]) * dims_;
        std::uint32_t* rest = ids + 1;
        const std::size_t m = count - 1;
        std::vector<std::pair<double, std::uint32_t>> dist(m);
        for (std::size_t i = 0; i < m; ++i) dist[i] = {distance(rest[i], vantage), rest[i]};
        const std::size_t half = m / 2;
        std::nth_element(dist.begin(), dist.begin() + half, dist.end());
        nodes_[static_cast<std::size_t>(id)].radius = dist[half].first;
        for (std::size_t i = 0; i < m; ++i) rest[i] = dist[i].second;

        const std::int32_t inside = build(rest, half + 1);
        const std::int32_t outside = build(rest + half + 1, m - half - 1);
        nodes_[static_cast<std::size_t>(id)].inside = inside;
        nodes_[static_cast<std::size_t>(id)].outside = outside;
        return id;
    }

    void search(std::int32_t at, const double* query, std::size_t m,
                std::priority_queue<double>& heap) const {
        if (at < 0) return;
        const Node& node = nodes_[static_cast<std::size_t>(at)];
        const double d = distance(node.point, query);
        if (heap.size() < m) {
            heap.push(d);
        } else if (d < heap.top()) {
            heap.pop();
            heap.push(d);
        }
        if (node.inside < 0 && node.outside < 0) return;

        const auto tau = [&] {
            return heap.size() < m ? std::numeric_limits<double>::infinity() : heap.top();
        };
        // triangle-inequality pruning: inside holds points within radius of
        // the vantage, outside holds the rest; visit the nearer side first
        if (d < node.radius) {
            search(node.inside, query, m, heap);
            if (d + tau() >= node.radius) search(node.outside, query, m, heap);
        } else {
            search(node.outside, query, m, heap);
            if (d - tau() <= node.radius) search(node.inside, query, m, heap);
        }
    }

    const std::vector<double>& points_;
    std::size_t dims_;
    std::vector<Node> nodes_;
    std::int32_t root_ = -1;
};

} // namespace

ScoreReport knn_distance_baseline(const Dataset& ds, std::size_t k, std::size_t brute_threshold) {
    if (k < 1) throw config_error("k must be at least 1");
    if (k >= ds.n) {
        throw config_error("k = " + std::to_string(k) + " must be smaller than the object count " +
                           std::to_string(ds.n));
    }
    const std::size_t n = ds.n;
    const std::size_t dims = ds.cdim + ds.bdim;
    std::vector<double> z(n * dims);
    for (std::size_t i = 0; i < n; ++i) {
        double* row = z.data() + i * dims;
        const double* x = ds.xs.data() + i * ds.cdim;
        const double* y = ds.ys.data() + i * ds.bdim;
        std::copy(x, x + ds.cdim, row);
        std::copy(y, y + ds.bdim, row + ds.cdim);
    }

    std::vector<double> scores(n, 0.0);
    if (n <= brute_threshold) {
#pragma omp parallel
        {
            std::vector<double> buf(n - 1);
#pragma omp for schedule(dynamic, 16)
            for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
                const std::size_t i = static_cast<std::size_t>(ii);
                const double* zi = z.data() + i * dims;
                std::size_t at = 0;
                for (std::size_t j = 0; j < n; ++j) {
                    if (j == i) continue;
                    const double* zj = z.data() + j * dims;
                    double s = 0.0;
                    for (std::size_t d = 0; d < dims; ++d) {
                        const double diff = zi[d] - zj[d];
                        s += diff * diff;
                    }
                    buf[at++] = s;
                }
                std::nth_element(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(k - 1),
                                 buf.end());
                scores[i] = std::sqrt(buf[k - 1]);
            }
        }
    } else {
        VpTree tree(z, n, dims);
#pragma omp parallel for schedule(dynamic, 16)
        for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
            const std::size_t i = static_cast<std::size_t>(ii);
            // the query itself sits in the tree at distance zero, so ask for
            // one more and take the worst
            scores[i] = tree.mth_distance(z.data() + i * dims, k + 1);
        }
    }
    return rank_scores(std::move(scores));
}

} // namespace rocod
