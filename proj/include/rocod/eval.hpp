#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "rocod/dataset.hpp"
#include "rocod/detector.hpp"

namespace rocod {

// A full best-first ordering of the objects plus the ground-truth outlier set.
struct LabeledRanking {
    std::vector<std::uint32_t> ranking;   // permutation of 0..n_objects-1, best first
    std::vector<std::uint32_t> outliers;  // sorted, nonempty for metric computation
    std::size_t n_objects = 0;

    void validate() const;  // throws data_error on any structural violation
};

LabeledRanking make_ranking(const ScoreReport& report, std::vector<std::uint32_t> outliers);

struct MetricReport {
    std::string dataset;
    std::string method;
    double prc_auc = 0.0;
    std::map<std::size_t, double> precision_at;
    std::map<std::size_t, double> ndcg_at;
    std::size_t headline_n = 0;  // the cutoff reported in the summary CSV row
};

// Fraction of the top n that are true outliers.
double precision_at_n(const LabeledRanking& lr, std::size_t n);

// DCG with gain 1 for outliers, discount 1 at position 1 and 1/log2(i) for
// i >= 2, normalized by the all-outliers ideal.
double ndcg_at_n(const LabeledRanking& lr, std::size_t n);

// Average precision: mean over true outliers of the precision at the rank
// where each is found (step-wise area under the precision-recall curve;
// no interpolation between recall levels).
double prc_auc(const LabeledRanking& lr);

// Default ranking cutoff: min(100, 4x the number of labeled outliers).
std::size_t default_metric_n(std::size_t n_outliers);

// All metrics at the given cutoffs (defaults: default_metric_n and the
// summary cutoff min(100, N)).
MetricReport evaluate_ranking(const LabeledRanking& lr, const std::string& dataset,
                              const std::string& method, std::vector<std::size_t> ns = {});

nlohmann::json metrics_to_json(const MetricReport& report);
std::string metric_csv_header();
std::string metric_csv_row(const MetricReport& report);

// Score = Euclidean distance to the k-th nearest other object in the
// concatenated contextual+behavioral space. Exact for any input size: brute
// force up to brute_threshold objects, a vantage-point tree beyond (the tree
// changes speed, never results).
ScoreReport knn_distance_baseline(const Dataset& ds, std::size_t k,
                                  std::size_t brute_threshold = 20000);

} // namespace rocod
