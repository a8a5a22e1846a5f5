#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "tsim/rng.hpp"

namespace tsim {

using InfoBits = std::vector<uint8_t>; // 0/1 information bits
using Codeword = std::vector<int8_t>;  // antipodal symbols, bit 0 -> +1, bit 1 -> -1
using LlrFrame = std::vector<double>;  // log Pr(+1)/Pr(-1) per position

/// Terminated convolutional code with optional periodic puncturing.
/// Generator taps are stored as integers read in octal (e.g. 0133); bit 0 of a
/// generator taps the newest input bit of the (memory+1)-wide window.
struct CodeSpec {
    int memory = 6;
    std::vector<unsigned> generators = {0133, 0145, 0175};
    std::vector<uint8_t> puncture; // periodic keep mask over coded bits; empty = none

    int outputs() const { return static_cast<int>(generators.size()); }
    double base_rate() const { return 1.0 / outputs(); }

    double effective_rate() const {
        if (puncture.empty()) return base_rate();
        size_t kept = 0;
        for (uint8_t k : puncture) kept += (k != 0);
        return base_rate() * static_cast<double>(puncture.size()) / static_cast<double>(kept);
    }

    void validate() const {
        if (memory < 1 || memory > 20) throw std::invalid_argument("fec: unsupported memory order");
        if (generators.empty()) throw std::invalid_argument("fec: no generator polynomials");
        const unsigned window_mask = (1u << (memory + 1)) - 1u;
        for (unsigned g : generators)
            if (g == 0 || g > window_mask) throw std::invalid_argument("fec: generator out of range");
        if (!puncture.empty()) {
            size_t kept = 0;
            for (uint8_t k : puncture) kept += (k != 0);
            if (kept == 0) throw std::invalid_argument("fec: puncture mask keeps nothing");
        }
    }

    static CodeSpec rate_third() { return CodeSpec{}; }

    // Period-6 masks over two encoder inputs; every input keeps the first
    // output stream so no information bit loses all of its coded bits.
    static CodeSpec rate_two_fifths() {
        CodeSpec c;
        c.puncture = {1, 1, 1, 1, 1, 0};
        return c;
    }
    static CodeSpec rate_half() {
        CodeSpec c;
        c.puncture = {1, 1, 0, 1, 0, 1};
        return c;
    }
};

namespace detail {
inline int tap_parity(unsigned bits) { return std::popcount(bits) & 1; }
} // namespace detail

/// Number of coded symbols after puncturing for a given payload size.
inline size_t coded_length(const CodeSpec& code, size_t payload_bits) {
    const size_t full = (payload_bits + code.memory) * code.outputs();
    if (code.puncture.empty()) return full;
    if (full % code.puncture.size() != 0)
        throw std::invalid_argument("fec: puncture period does not divide coded length");
    size_t kept = 0;
    for (uint8_t k : code.puncture) kept += (k != 0);
    return full / code.puncture.size() * kept;
}

/// Encode payload bits plus `memory` zero tail bits; the encoder ends in the
/// all-zero state. Coded bits map 0 -> +1, 1 -> -1.
inline Codeword encode(const InfoBits& info, const CodeSpec& code) {
    code.validate();
    const size_t total_in = info.size() + code.memory;
    const unsigned window_mask = (1u << (code.memory + 1)) - 1u;

    Codeword full;
    full.reserve(total_in * code.outputs());
    unsigned window = 0;
    for (size_t t = 0; t < total_in; ++t) {
        const unsigned u = t < info.size() ? (info[t] & 1u) : 0u;
        window = ((window << 1) | u) & window_mask;
        for (unsigned g : code.generators)
            full.push_back(detail::tap_parity(window & g) ? int8_t{-1} : int8_t{+1});
    }
    if (code.puncture.empty()) return full;

    if (full.size() % code.puncture.size() != 0)
        throw std::invalid_argument("fec: puncture period does not divide coded length");
    Codeword out;
    out.reserve(coded_length(code, info.size()));
    for (size_t i = 0; i < full.size(); ++i)
        if (code.puncture[i % code.puncture.size()]) out.push_back(full[i]);
    return out;
}

/// Re-expand punctured LLRs to the full coded length, inserting LLR 0 at
/// dropped positions.
inline LlrFrame depuncture(const LlrFrame& llrs, const CodeSpec& code, size_t payload_bits) {
    const size_t full = (payload_bits + code.memory) * code.outputs();
    if (code.puncture.empty()) {
        if (llrs.size() != full) throw std::invalid_argument("fec: llr length mismatch");
        return llrs;
    }
    if (llrs.size() != coded_length(code, payload_bits))
        throw std::invalid_argument("fec: llr length mismatch");
    LlrFrame out(full, 0.0);
    size_t j = 0;
    for (size_t i = 0; i < full; ++i)
        if (code.puncture[i % code.puncture.size()]) out[i] = llrs[j++];
    return out;
}

/// Seeded uniform permutation. The shuffle procedure is fixed so that the
/// permutation for a given (seed, n) is identical everywhere: Fisher-Yates
/// from the top index down, with each swap partner drawn by rejection
/// sampling from the splitmix64 stream.
struct Interleaver {
    uint64_t seed = 0;
    std::vector<uint32_t> perm; // transmitted position j carries input position perm[j]

    static Interleaver make(uint64_t seed, size_t n) {
        Interleaver il;
        il.seed = seed;
        il.perm.resize(n);
        for (size_t i = 0; i < n; ++i) il.perm[i] = static_cast<uint32_t>(i);
        Rng rng(derive_seed(seed, StreamTag::Interleaver));
        for (size_t i = n; i > 1; --i) {
            const size_t j = rng.below(i);
            std::swap(il.perm[i - 1], il.perm[j]);
        }
        return il;
    }
};

template <typename T>
inline std::vector<T> interleave(const std::vector<T>& x, const Interleaver& il) {
    if (x.size() != il.perm.size()) throw std::invalid_argument("interleave: length mismatch");
    std::vector<T> out(x.size());
    for (size_t j = 0; j < x.size(); ++j) out[j] = x[il.perm[j]];
    return out;
}

template <typename T>
inline std::vector<T> deinterleave(const std::vector<T>& y, const Interleaver& il) {
    if (y.size() != il.perm.size()) throw std::invalid_argument("deinterleave: length mismatch");
    std::vector<T> out(y.size());
    for (size_t j = 0; j < y.size(); ++j) out[il.perm[j]] = y[j];
    return out;
}

/// Soft-input Viterbi decoding of the terminated trellis. The branch metric
/// is the correlation sum(c[l] * llr[l]); the survivor path starts and ends
/// in the all-zero state (the last `memory` inputs are forced to zero). Ties
/// resolve toward the lower-indexed predecessor state.
inline InfoBits viterbi_decode(const LlrFrame& llrs, const CodeSpec& code) {
    code.validate();
    const int n_out = code.outputs();
    if (llrs.size() % n_out != 0) throw std::invalid_argument("viterbi: llr length mismatch");
    const size_t steps = llrs.size() / n_out;
    if (steps <= static_cast<size_t>(code.memory))
        throw std::invalid_argument("viterbi: fewer inputs than tail bits");
    const size_t payload = steps - code.memory;
    for (double v : llrs)
        if (!std::isfinite(v)) throw std::invalid_argument("viterbi: non-finite llr");

    const unsigned n_states = 1u << code.memory;
    const unsigned state_mask = n_states - 1u;

    // Branch symbols per 7-bit window, laid out [window][output].
    std::vector<int8_t> branch(static_cast<size_t>(2 * n_states) * n_out);
    for (unsigned w = 0; w < 2 * n_states; ++w)
        for (int j = 0; j < n_out; ++j)
            branch[static_cast<size_t>(w) * n_out + j] =
                detail::tap_parity(w & code.generators[j]) ? int8_t{-1} : int8_t{+1};

    const double neg_inf = -std::numeric_limits<double>::infinity();
    std::vector<double> metric(n_states, neg_inf), next(n_states);
    metric[0] = 0.0;
    std::vector<uint8_t> pred(steps * n_states);

    for (size_t t = 0; t < steps; ++t) {
        std::fill(next.begin(), next.end(), neg_inf);
        const double* llr_t = llrs.data() + t * n_out;
        const unsigned max_u = t < payload ? 2u : 1u; // tail forces u = 0
        for (unsigned ps = 0; ps < n_states; ++ps) {
            if (metric[ps] == neg_inf) continue;
            for (unsigned u = 0; u < max_u; ++u) {
                const unsigned w = (ps << 1) | u;
                const unsigned ns = w & state_mask;
                double m = metric[ps];
                const int8_t* sym = branch.data() + static_cast<size_t>(w) * n_out;
                for (int j = 0; j < n_out; ++j) m += sym[j] * llr_t[j];
                if (m > next[ns]) { // strict: first (lowest ps) writer keeps ties
                    next[ns] = m;
                    pred[t * n_states + ns] = static_cast<uint8_t>(ps);
                }
            }
        }
        metric.swap(next);
    }

    InfoBits decoded(payload);
    unsigned s = 0; // terminated in the all-zero state
    for (size_t t = steps; t-- > 0;) {
        const unsigned u = s & 1u; // newest input is the low state bit
        if (t < payload) decoded[t] = static_cast<uint8_t>(u);
        s = pred[t * n_states + s];
    }
    return decoded;
}

} // namespace tsim
