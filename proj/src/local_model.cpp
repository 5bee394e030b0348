#include "rocod/local_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <numbers>
#include <random>

#include "rocod/errors.hpp"
#include "rocod/parallel.hpp"

namespace rocod {

namespace {

std::vector<double> context_norms(const Dataset& ds) {
    std::vector<double> norms(ds.n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(ds.n); ++ii) {
        const std::size_t i = static_cast<std::size_t>(ii);
        const double* x = ds.xs.data() + i * ds.cdim;
        double s = 0.0;
        for (std::size_t c = 0; c < ds.cdim; ++c) s += x[c] * x[c];
        norms[i] = std::sqrt(s);
    }
    return norms;
}

double dot(const double* a, const double* b, std::size_t dim) {
    double s = 0.0;
    for (std::size_t c = 0; c < dim; ++c) s += a[c] * b[c];
    return s;
}

} // namespace

std::size_t default_alpha_samples(std::size_t n) {
    const std::size_t all_pairs = n * (n - 1) / 2;
    return std::min<std::size_t>(100000, all_pairs);
}

double percentile_from_top(std::vector<double> values, double percentile) {
    if (values.empty()) throw config_error("percentile of an empty value list");
    if (!(percentile > 0.0 && percentile < 100.0)) {
        throw config_error("alpha percentile must lie strictly inside (0, 100)");
    }
    std::sort(values.begin(), values.end(), std::greater<double>());
    const auto rank = static_cast<std::size_t>(
        std::max(1.0, std::ceil(percentile / 100.0 * static_cast<double>(values.size()))));
    return values[std::min(rank, values.size()) - 1];
}

double select_alpha(const Dataset& ds, std::size_t sample_pairs, double percentile,
                    std::uint64_t seed) {
    if (sample_pairs < 1) throw config_error("alpha selection needs at least one sampled pair");
    if (!(percentile > 0.0 && percentile < 100.0)) {
        throw config_error("alpha percentile must lie strictly inside (0, 100)");
    }
    const auto norms = context_norms(ds);
    std::size_t nonzero = 0;
    for (const double v : norms) nonzero += v > 0.0;
    if (nonzero < 2) {
        throw data_error("alpha selection needs at least two nonzero contextual vectors");
    }

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, ds.n - 1);
    std::vector<double> sims;
    sims.reserve(sample_pairs);
    while (sims.size() < sample_pairs) {
        const std::size_t i = pick(rng);
        const std::size_t j = pick(rng);
        if (i == j || norms[i] == 0.0 || norms[j] == 0.0) continue;
        const double cosine =
            dot(ds.xs.data() + i * ds.cdim, ds.xs.data() + j * ds.cdim, ds.cdim) /
            (norms[i] * norms[j]);
        // rounding can push a true cosine a few ulp outside its range
        sims.push_back(std::clamp(cosine, -1.0, 1.0));
    }
    return percentile_from_top(std::move(sims), percentile);
}

NeighborStats neighbor_stats(const Dataset& ds, double alpha, const LshParams& params,
                             NeighborMode mode, CandidateSource source, bool keep_lists) {
    const std::size_t n = ds.n;
    const std::size_t bdim = ds.bdim;

    NeighborStats stats;
    stats.table.alpha = alpha;
    stats.table.mode = mode;
    stats.table.counts.assign(n, 0);
    stats.local.bdim = bdim;
    stats.local.defined.assign(n, 0);
    stats.local.phi.assign(n * bdim, 0.0);

    const auto norms = context_norms(ds);

    SignatureSet sigs;
    std::unique_ptr<CandidateIndex> index;
    const bool need_sigs = source == CandidateSource::lsh || mode == NeighborMode::hamming_approx;
    if (need_sigs) {
        sigs = build_signatures(ds, params);
        if (source == CandidateSource::lsh) index = std::make_unique<CandidateIndex>(sigs);
    }
    // alpha beyond cos's range can never be met
    const bool impossible = alpha > 1.0;
    const double ham_limit =
        static_cast<double>(params.l) * params.d * std::acos(std::clamp(alpha, -1.0, 1.0)) /
        std::numbers::pi;

    std::vector<std::vector<std::uint32_t>> lists(keep_lists ? n : 0);

#pragma omp parallel
    {
        std::vector<std::uint32_t> stamp;
        if (source == CandidateSource::lsh) stamp.assign(n, UINT32_MAX);
#pragma omp for schedule(dynamic, 64)
        for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
            const std::size_t i = static_cast<std::size_t>(ii);
            if (impossible || norms[i] == 0.0) continue;
            const double* xi = ds.xs.data() + i * ds.cdim;
            double* phi = stats.local.phi.data() + i * bdim;
            std::uint32_t count = 0;

            auto consider = [&](std::uint32_t j) {
                if (norms[j] == 0.0) return;
                bool accept;
                if (mode == NeighborMode::exact) {
                    const double cosine =
                        dot(xi, ds.xs.data() + j * ds.cdim, ds.cdim) / (norms[i] * norms[j]);
                    accept = cosine >= alpha;
                } else {
                    accept = sigs.hamming_distance(i, j) <= ham_limit;
                }
                if (!accept) return;
                ++count;
                const double* yj = ds.ys.data() + j * bdim;
                for (std::size_t b = 0; b < bdim; ++b) phi[b] += yj[b];
                if (keep_lists) lists[i].push_back(j);
            };

            if (source == CandidateSource::lsh) {
                const std::uint32_t tag = static_cast<std::uint32_t>(i);
                for (unsigned k = 0; k < sigs.l; ++k) {
                    for (const std::uint32_t j : index->bucket_of(i, k)) {
                        if (j == i || stamp[j] == tag) continue;
                        stamp[j] = tag;
                        consider(j);
                    }
                }
            } else {
                for (std::size_t j = 0; j < n; ++j) {
                    if (j != i) consider(static_cast<std::uint32_t>(j));
                }
            }

            stats.table.counts[i] = count;
            if (count > 0) {
                stats.local.defined[i] = 1;
                for (std::size_t b = 0; b < bdim; ++b) phi[b] /= count;
            } else {
                for (std::size_t b = 0; b < bdim; ++b) phi[b] = 0.0;
            }
        }
#pragma omp for schedule(static)
        for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(lists.size()); ++ii) {
            std::sort(lists[ii].begin(), lists[ii].end());
        }
    }

    if (keep_lists) {
        stats.table.has_lists = true;
        stats.table.offsets.assign(n + 1, 0);
        for (std::size_t i = 0; i < n; ++i) {
            stats.table.offsets[i + 1] = stats.table.offsets[i] + lists[i].size();
        }
        stats.table.neighbors.resize(stats.table.offsets[n]);
        for (std::size_t i = 0; i < n; ++i) {
            std::copy(lists[i].begin(), lists[i].end(),
                      stats.table.neighbors.begin() + stats.table.offsets[i]);
        }
    }
    return stats;
}

NeighborTable find_neighbors(const Dataset& ds, double alpha, const LshParams& params,
                             NeighborMode mode, CandidateSource source, bool keep_lists) {
    return neighbor_stats(ds, alpha, params, mode, source, keep_lists).table;
}

LocalExpectation local_expected(const Dataset& ds, const NeighborTable& nt) {
    if (!nt.has_lists) throw config_error("local_expected needs a neighbor table with lists");
    const std::size_t n = ds.n;
    LocalExpectation local;
    local.bdim = ds.bdim;
    local.defined.assign(n, 0);
    local.phi.assign(n * ds.bdim, 0.0);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
        const std::size_t i = static_cast<std::size_t>(ii);
        const auto neighbors = nt.list(i);
        if (neighbors.empty()) continue;
        double* phi = local.phi.data() + i * ds.bdim;
        for (const std::uint32_t j : neighbors) {
            const double* yj = ds.ys.data() + static_cast<std::size_t>(j) * ds.bdim;
            for (std::size_t b = 0; b < ds.bdim; ++b) phi[b] += yj[b];
        }
        for (std::size_t b = 0; b < ds.bdim; ++b) phi[b] /= neighbors.size();
        local.defined[i] = 1;
    }
    return local;
}

void save_neighbor_counts(const NeighborTable& nt, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write neighbor dump: " + path);
    out << "index,neighbor_count\n";
    for (std::size_t i = 0; i < nt.counts.size(); ++i) {
        out << i << "," << nt.counts[i] << "\n";
    }
    if (!out) throw data_error("failed writing neighbor dump: " + path);
}

} // namespace rocod
