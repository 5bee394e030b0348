#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "rocod/dataset.hpp"

namespace rocod {

// Sign-random-projection LSH parameters. p is the per-bit collision
// probability at the cosine threshold alpha; l is the number of d-bit
// signatures needed to reach recall epsilon.
struct LshParams {
    double alpha = 0.9;
    double epsilon = 0.975;
    unsigned d = 8;
    std::uint64_t seed = 0;
    double p = 0.0;       // 1 - arccos(alpha)/pi
    unsigned l = 0;       // ceil(log(1-epsilon) / log(1-p^d))
};

// Computes p and l from (alpha, epsilon, d). alpha and epsilon must lie
// strictly inside (0, 1); d in [1, 63].
LshParams derive_params(double alpha, double epsilon, unsigned d = 8, std::uint64_t seed = 0);

// Packed l*d-bit signatures for every object's contextual vector.
// Bit (k*d + t) of object i is 1 iff r_{k,t} . x(i) >= 0, with each projection
// vector r drawn i.i.d. standard normal from the seed.
class SignatureSet {
public:
    unsigned l = 0;
    unsigned d = 0;
    std::size_t n_objects = 0;
    std::size_t dims = 0;              // C
    std::size_t words_per_object = 0;
    std::vector<std::uint64_t> bits;   // n_objects * words_per_object
    std::vector<double> projections;   // (l*d) x C, row-major

    std::span<const std::uint64_t> object_bits(std::size_t i) const {
        return {bits.data() + i * words_per_object, words_per_object};
    }
    // The d-bit value of signature slot k for object i.
    std::uint64_t slot_value(std::size_t i, unsigned slot) const;
    // Number of differing bits between two objects' full signatures.
    unsigned hamming_distance(std::size_t i, std::size_t j) const;
    // Hex dump of one object's packed signature, for debugging.
    std::string hex(std::size_t i) const;
};

SignatureSet build_signatures(const Dataset& ds, const LshParams& params);

// One bucket table per signature slot, keyed by the d-bit signature value.
// Bucket members are in ascending object order.
class CandidateIndex {
public:
    explicit CandidateIndex(const SignatureSet& sigs);

    // Bucket containing object i in the given slot (never null for valid i).
    const std::vector<std::uint32_t>& bucket_of(std::size_t i, unsigned slot) const;
    unsigned slots() const { return static_cast<unsigned>(tables_.size()); }

private:
    const SignatureSet* sigs_;
    std::vector<std::unordered_map<std::uint64_t, std::vector<std::uint32_t>>> tables_;
};

// For each object, the sorted list of other objects sharing at least one
// signature slot value. Symmetric and irreflexive.
std::vector<std::vector<std::uint32_t>> candidates(const SignatureSet& sigs);

// Maximum Hamming distance accepted when approximating cos >= alpha:
// l * d * arccos(alpha) / pi.
double hamming_threshold(const LshParams& params);

// True iff Ham(sig_i XOR sig_j) <= hamming_threshold(params).
bool hamming_filter(const SignatureSet& sigs, std::size_t i, std::size_t j,
                    const LshParams& params);

} // namespace rocod
