#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rocod/dataset.hpp"
#include "rocod/global_model.hpp"
#include "rocod/local_model.hpp"

namespace rocod {

// How per-attribute weights enter the score:
//   diagonal - S_i = sqrt(sum_j (w_j * r_j)^2), each attribute contributes
//              its own weighted residual
//   scalar   - S_i = |sum_j w_j * r_j|, a single projection that lets
//              residuals of opposite sign cancel (kept for comparison)
enum class ScoreVariant { diagonal, scalar };

std::string to_string(ScoreVariant variant);
ScoreVariant parse_score_variant(const std::string& text);

// Blended expected behavior: expected(i) = lambda_i * phi(i) + (1 - lambda_i) * psi(i)
// with lambda_i = sqrt(|CN_i|) / max_j sqrt(|CN_j|). Objects without neighbors
// use the global prediction alone (lambda 0); when nobody has neighbors the
// blend is globally pure-global.
struct EnsembleExpectation {
    std::size_t bdim = 0;
    std::vector<double> lambda;                  // n, each in [0, 1]
    std::vector<double> expected;                // n * bdim
    std::vector<std::uint32_t> neighbor_counts;  // provenance: |CN_i|

    std::span<const double> row(std::size_t i) const {
        return {expected.data() + i * bdim, bdim};
    }
};

// w_j = max(R^2_j, 0) where R^2_j = 1 - SSE_j / SST_j over all objects.
// Attributes with zero variance get w_j = 0 (their recorded r_squared is 0).
struct AttributeWeights {
    std::vector<double> w;          // clamped, in [0, 1]
    std::vector<double> r_squared;  // unclamped (may be negative)
};

struct ScoreReport {
    std::vector<double> scores;        // by object index, nonnegative
    std::vector<std::uint32_t> ranks;  // by object index, 1 = highest score
    std::vector<std::uint32_t> order;  // rank order: order[0] is the top object
    AttributeWeights weights;
    double lambda_min = 0.0;
    double lambda_mean = 0.0;
    double lambda_max = 0.0;
    ScoreVariant variant = ScoreVariant::diagonal;
    std::string config_snapshot;  // JSON text attached by the pipeline
};

EnsembleExpectation ensemble(const Dataset& ds, const LocalExpectation& local,
                             const GlobalModel& global, const NeighborTable& nt);

AttributeWeights attribute_weights(const Dataset& ds, const EnsembleExpectation& ee);

ScoreReport score(const Dataset& ds, const EnsembleExpectation& ee, const AttributeWeights& weights,
                  ScoreVariant variant = ScoreVariant::diagonal);

// Ranks an externally produced score vector (highest first, ties to the lower
// index) into a ScoreReport without weights or lambda statistics.
ScoreReport rank_scores(std::vector<double> scores);

// The n top-ranked object indices in rank order; n must lie in [1, N].
std::vector<std::uint32_t> top_n(const ScoreReport& report, std::size_t n);

// CSV with header index,score,rank,is_flagged_top_n; the flag marks
// rank <= flag_count. Emitted bytes depend only on the report, so equal
// reports compare equal as text.
std::string scores_to_csv(const ScoreReport& report, std::size_t flag_count);
void save_scores(const ScoreReport& report, const std::string& path, std::size_t flag_count);

} // namespace rocod
