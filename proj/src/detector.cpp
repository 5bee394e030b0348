#include "rocod/detector.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "rocod/errors.hpp"
#include "rocod/format.hpp"

namespace rocod {

namespace {

// Sorts score indices best-first with ties going to the lower index, then
// fills ranks and lambda-free report fields.
void rank_into(ScoreReport& report) {
    const std::size_t n = report.scores.size();
    report.order.resize(n);
    std::iota(report.order.begin(), report.order.end(), 0u);
    std::sort(report.order.begin(), report.order.end(),
              [&](std::uint32_t a, std::uint32_t b) {
                  if (report.scores[a] != report.scores[b]) {
                      return report.scores[a] > report.scores[b];
                  }
                  return a < b;
              });
    report.ranks.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        report.ranks[report.order[k]] = static_cast<std::uint32_t>(k + 1);
    }
}

} // namespace

std::string to_string(ScoreVariant variant) {
    return variant == ScoreVariant::diagonal ? "diagonal" : "scalar";
}

ScoreVariant parse_score_variant(const std::string& text) {
    if (text == "diagonal") return ScoreVariant::diagonal;
    if (text == "scalar") return ScoreVariant::scalar;
    throw config_error("unknown score variant: " + text + " (expected diagonal or scalar)");
}

EnsembleExpectation ensemble(const Dataset& ds, const LocalExpectation& local,
                             const GlobalModel& global, const NeighborTable& nt) {
    const std::size_t n = ds.n;
    const std::size_t bdim = ds.bdim;
    if (local.bdim != bdim || global.bdim != bdim || nt.counts.size() != n) {
        throw config_error("ensemble inputs were built on different datasets");
    }

    EnsembleExpectation ee;
    ee.bdim = bdim;
    ee.lambda.assign(n, 0.0);
    ee.expected.assign(n * bdim, 0.0);
    ee.neighbor_counts = nt.counts;

    std::uint32_t max_count = 0;
    for (const std::uint32_t c : nt.counts) max_count = std::max(max_count, c);
    const double max_root = std::sqrt(static_cast<double>(max_count));

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
        const std::size_t i = static_cast<std::size_t>(ii);
        double* out = ee.expected.data() + i * bdim;
        const std::uint32_t count = nt.counts[i];
        if (max_count == 0 || count == 0 || !local.defined[i]) {
            global.predict_row(ds.context(i), {out, bdim});
            continue;
        }
        const double lambda = std::sqrt(static_cast<double>(count)) / max_root;
        ee.lambda[i] = lambda;
        const double* phi = local.phi.data() + i * bdim;
        if (lambda == 1.0) {
            std::copy(phi, phi + bdim, out);
            continue;
        }
        global.predict_row(ds.context(i), {out, bdim});
        for (std::size_t b = 0; b < bdim; ++b) {
            out[b] = lambda * phi[b] + (1.0 - lambda) * out[b];
        }
    }
    return ee;
}

AttributeWeights attribute_weights(const Dataset& ds, const EnsembleExpectation& ee) {
    const std::size_t n = ds.n;
    const std::size_t bdim = ds.bdim;
    AttributeWeights weights;
    weights.w.assign(bdim, 0.0);
    weights.r_squared.assign(bdim, 0.0);
    if (n == 0) return weights;

    // serial index-order sums keep the result independent of thread count
    std::vector<double> mean(bdim, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* y = ds.ys.data() + i * bdim;
        for (std::size_t b = 0; b < bdim; ++b) mean[b] += y[b];
    }
    for (double& m : mean) m /= static_cast<double>(n);

    std::vector<double> sse(bdim, 0.0), sst(bdim, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* y = ds.ys.data() + i * bdim;
        const double* yhat = ee.expected.data() + i * bdim;
        for (std::size_t b = 0; b < bdim; ++b) {
            const double r = y[b] - yhat[b];
            const double d = y[b] - mean[b];
            sse[b] += r * r;
            sst[b] += d * d;
        }
    }
    for (std::size_t b = 0; b < bdim; ++b) {
        if (sst[b] == 0.0) continue;  // constant attribute: weight stays 0
        weights.r_squared[b] = 1.0 - sse[b] / sst[b];
        weights.w[b] = std::max(weights.r_squared[b], 0.0);
    }
    return weights;
}

ScoreReport score(const Dataset& ds, const EnsembleExpectation& ee,
                  const AttributeWeights& weights, ScoreVariant variant) {
    const std::size_t n = ds.n;
    const std::size_t bdim = ds.bdim;
    if (weights.w.size() != bdim) throw config_error("attribute weight width mismatch");

    ScoreReport report;
    report.variant = variant;
    report.weights = weights;
    report.scores.assign(n, 0.0);

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
        const std::size_t i = static_cast<std::size_t>(ii);
        const double* y = ds.ys.data() + i * bdim;
        const double* yhat = ee.expected.data() + i * bdim;
        double acc = 0.0;
        if (variant == ScoreVariant::diagonal) {
            for (std::size_t b = 0; b < bdim; ++b) {
                const double t = weights.w[b] * (y[b] - yhat[b]);
                acc += t * t;
            }
            report.scores[i] = std::sqrt(acc);
        } else {
            for (std::size_t b = 0; b < bdim; ++b) {
                acc += weights.w[b] * (y[b] - yhat[b]);
            }
            report.scores[i] = std::abs(acc);
        }
    }

    rank_into(report);

    if (n > 0) {
        double lo = ee.lambda[0], hi = ee.lambda[0], sum = 0.0;
        for (const double v : ee.lambda) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
            sum += v;
        }
        report.lambda_min = lo;
        report.lambda_max = hi;
        report.lambda_mean = sum / static_cast<double>(n);
    }
    return report;
}

ScoreReport rank_scores(std::vector<double> scores) {
    ScoreReport report;
    report.scores = std::move(scores);
    rank_into(report);
    return report;
}

std::vector<std::uint32_t> top_n(const ScoreReport& report, std::size_t n) {
    if (n < 1 || n > report.order.size()) {
        throw config_error("top-n count " + std::to_string(n) + " outside [1, " +
                           std::to_string(report.order.size()) + "]");
    }
    return {report.order.begin(), report.order.begin() + static_cast<std::ptrdiff_t>(n)};
}

std::string scores_to_csv(const ScoreReport& report, std::size_t flag_count) {
    std::string out = "index,score,rank,is_flagged_top_n\n";
    for (std::size_t i = 0; i < report.scores.size(); ++i) {
        out += std::to_string(i);
        out += ',';
        append_double(out, report.scores[i]);
        out += ',';
        out += std::to_string(report.ranks[i]);
        out += ',';
        out += report.ranks[i] <= flag_count ? '1' : '0';
        out += '\n';
    }
    return out;
}

void save_scores(const ScoreReport& report, const std::string& path, std::size_t flag_count) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("cannot write score file: " + path);
    out << scores_to_csv(report, flag_count);
    if (!out) throw data_error("failed writing score file: " + path);
}

} // namespace rocod
