#include "rocod/lsh.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <random>

#include "rocod/errors.hpp"
#include "rocod/parallel.hpp"

namespace rocod {

LshParams derive_params(double alpha, double epsilon, unsigned d, std::uint64_t seed) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw config_error("lsh alpha must lie strictly inside (0, 1)");
    }
    if (!(epsilon > 0.0 && epsilon < 1.0)) {
        throw config_error("lsh epsilon must lie strictly inside (0, 1)");
    }
    if (d < 1 || d > 63) throw config_error("lsh signature length d must be in [1, 63]");

    LshParams params;
    params.alpha = alpha;
    params.epsilon = epsilon;
    params.d = d;
    params.seed = seed;
    params.p = 1.0 - std::acos(alpha) / std::numbers::pi;
    const double miss = std::log1p(-epsilon);              // log(1 - epsilon)
    const double per_sig = std::log1p(-std::pow(params.p, d));  // log(1 - p^d)
    params.l = static_cast<unsigned>(std::max(1.0, std::ceil(miss / per_sig)));
    return params;
}

std::uint64_t SignatureSet::slot_value(std::size_t i, unsigned slot) const {
    const std::uint64_t* obj = bits.data() + i * words_per_object;
    const std::size_t first_bit = static_cast<std::size_t>(slot) * d;
    const std::size_t word = first_bit / 64;
    const unsigned shift = first_bit % 64;
    std::uint64_t value = obj[word] >> shift;
    if (shift + d > 64) value |= obj[word + 1] << (64 - shift);
    return value & ((std::uint64_t{1} << d) - 1);
}

unsigned SignatureSet::hamming_distance(std::size_t i, std::size_t j) const {
    const std::uint64_t* a = bits.data() + i * words_per_object;
    const std::uint64_t* b = bits.data() + j * words_per_object;
    unsigned dist = 0;
    for (std::size_t w = 0; w < words_per_object; ++w) {
        dist += static_cast<unsigned>(std::popcount(a[w] ^ b[w]));
    }
    return dist;
}

std::string SignatureSet::hex(std::size_t i) const {
    static const char digits[] = "0123456789abcdef";
    const std::size_t total_bits = static_cast<std::size_t>(l) * d;
    std::string out;
    out.reserve((total_bits + 3) / 4);
    const std::uint64_t* obj = bits.data() + i * words_per_object;
    for (std::size_t nibble = 0; nibble * 4 < total_bits; ++nibble) {
        const std::uint64_t word = obj[nibble / 16];
        out.push_back(digits[(word >> ((nibble % 16) * 4)) & 0xF]);
    }
    return out;
}

SignatureSet build_signatures(const Dataset& ds, const LshParams& params) {
    if (params.l == 0) throw config_error("lsh params not derived (l == 0)");
    SignatureSet sigs;
    sigs.l = params.l;
    sigs.d = params.d;
    sigs.n_objects = ds.n;
    sigs.dims = ds.cdim;
    const std::size_t total_bits = static_cast<std::size_t>(params.l) * params.d;
    sigs.words_per_object = (total_bits + 63) / 64;

    std::mt19937_64 rng(params.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    sigs.projections.resize(total_bits * ds.cdim);
    for (double& v : sigs.projections) v = gauss(rng);

    sigs.bits.assign(ds.n * sigs.words_per_object, 0);
    const std::size_t n = ds.n;
    const std::size_t cdim = ds.cdim;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
        const std::size_t i = static_cast<std::size_t>(ii);
        const double* x = ds.xs.data() + i * cdim;
        std::uint64_t* out = sigs.bits.data() + i * sigs.words_per_object;
        for (std::size_t b = 0; b < total_bits; ++b) {
            const double* r = sigs.projections.data() + b * cdim;
            double dot = 0.0;
            for (std::size_t c = 0; c < cdim; ++c) dot += r[c] * x[c];
            if (dot >= 0.0) out[b / 64] |= std::uint64_t{1} << (b % 64);
        }
    }
    return sigs;
}

CandidateIndex::CandidateIndex(const SignatureSet& sigs) : sigs_(&sigs) {
    tables_.resize(sigs.l);
    const std::size_t n = sigs.n_objects;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t kk = 0; kk < static_cast<std::ptrdiff_t>(sigs.l); ++kk) {
        const unsigned k = static_cast<unsigned>(kk);
        auto& table = tables_[k];
        for (std::size_t i = 0; i < n; ++i) {
            table[sigs.slot_value(i, k)].push_back(static_cast<std::uint32_t>(i));
        }
    }
}

const std::vector<std::uint32_t>& CandidateIndex::bucket_of(std::size_t i, unsigned slot) const {
    return tables_[slot].at(sigs_->slot_value(i, slot));
}

std::vector<std::vector<std::uint32_t>> candidates(const SignatureSet& sigs) {
    const CandidateIndex index(sigs);
    const std::size_t n = sigs.n_objects;
    std::vector<std::vector<std::uint32_t>> result(n);
#pragma omp parallel
    {
        std::vector<std::uint32_t> stamp(n, UINT32_MAX);
#pragma omp for schedule(static)
        for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
            const std::size_t i = static_cast<std::size_t>(ii);
            const std::uint32_t tag = static_cast<std::uint32_t>(i);
            auto& list = result[i];
            for (unsigned k = 0; k < sigs.l; ++k) {
                for (const std::uint32_t j : index.bucket_of(i, k)) {
                    if (j == i || stamp[j] == tag) continue;
                    stamp[j] = tag;
                    list.push_back(j);
                }
            }
            std::sort(list.begin(), list.end());
        }
    }
    return result;
}

double hamming_threshold(const LshParams& params) {
    return static_cast<double>(params.l) * params.d * std::acos(params.alpha) / std::numbers::pi;
}

bool hamming_filter(const SignatureSet& sigs, std::size_t i, std::size_t j,
                    const LshParams& params) {
    return sigs.hamming_distance(i, j) <= hamming_threshold(params);
}

} // namespace rocod
