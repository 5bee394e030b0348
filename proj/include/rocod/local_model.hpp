#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rocod/dataset.hpp"
#include "rocod/lsh.hpp"

namespace rocod {

// How contextual-neighbor membership is decided on candidate pairs.
//   exact          - verify cos(x_i, x_j) >= alpha
//   hamming_approx - accept when the packed-signature Hamming distance stays
//                    below l*d*arccos(alpha)/pi
enum class NeighborMode { exact, hamming_approx };

// Where candidate pairs come from. The LSH index is the fast path; all_pairs
// enumerates every pair and is the exhaustive reference (exact mode then
// yields the literal neighbor definition).
enum class CandidateSource { lsh, all_pairs };

struct NeighborTable {
    double alpha = 0.0;
    NeighborMode mode = NeighborMode::exact;
    std::vector<std::uint32_t> counts;      // |CN_i|
    bool has_lists = false;
    std::vector<std::uint64_t> offsets;     // CSR, size n+1 when has_lists
    std::vector<std::uint32_t> neighbors;   // ascending within each object

    std::span<const std::uint32_t> list(std::size_t i) const {
        return {neighbors.data() + offsets[i], neighbors.data() + offsets[i + 1]};
    }
};

// Per-object local expected behavior Phi(x_i): componentwise mean of the
// neighbors' behavioral vectors. Objects without neighbors are undefined
// (phi row left at zero, defined flag cleared).
struct LocalExpectation {
    std::size_t bdim = 0;
    std::vector<std::uint8_t> defined;
    std::vector<double> phi;  // n * bdim

    std::span<const double> row(std::size_t i) const { return {phi.data() + i * bdim, bdim}; }
};

struct NeighborStats {
    NeighborTable table;
    LocalExpectation local;
};

// Nearest-rank order statistic counted from the top: sorts `values`
// decreasingly and returns the entry at rank max(1, ceil(percentile/100 * r)).
double percentile_from_top(std::vector<double> values, double percentile);

// Samples `sample_pairs` unordered object pairs, computes their cosine
// similarities and returns the value `percentile` percent from the top of
// the decreasing order (nearest rank). Zero contextual vectors are excluded;
// a dataset without two nonzero contexts is an error.
double select_alpha(const Dataset& ds, std::size_t sample_pairs, double percentile,
                    std::uint64_t seed);

// Default sample size for select_alpha: min(100000, N(N-1)/2).
std::size_t default_alpha_samples(std::size_t n);

// One-pass kernel producing neighbor counts, Phi and (optionally) the
// neighbor lists. Membership uses `alpha` for both modes; params supply the
// signature layout and seed. Objects with zero contextual vectors have no
// neighbors and join nobody's neighborhood.
NeighborStats neighbor_stats(const Dataset& ds, double alpha, const LshParams& params,
                             NeighborMode mode, CandidateSource source = CandidateSource::lsh,
                             bool keep_lists = true);

NeighborTable find_neighbors(const Dataset& ds, double alpha, const LshParams& params,
                             NeighborMode mode, CandidateSource source = CandidateSource::lsh,
                             bool keep_lists = true);

// Componentwise neighbor mean from stored lists (requires keep_lists).
LocalExpectation local_expected(const Dataset& ds, const NeighborTable& nt);

// Diagnostic dump: one "index,count" row per object.
void save_neighbor_counts(const NeighborTable& nt, const std::string& path);

} // namespace rocod
