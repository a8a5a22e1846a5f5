#include <gtest/gtest.h>

#include <array>
#include <cmath>

#include "tsim/fec.hpp"
#include "tsim/rng.hpp"

using namespace tsim;

namespace {

// Independent bit-serial shift-register encoder: an explicit register array
// advanced element by element, unrelated to the bit-twiddling production
// path. Returns coded bits (0/1) and reports the final register contents.
std::vector<uint8_t> shift_register_oracle(const InfoBits& info, const CodeSpec& code,
                                           std::vector<uint8_t>* final_state = nullptr) {
    std::vector<uint8_t> reg(code.memory, 0);
    std::vector<uint8_t> out;
    for (size_t t = 0; t < info.size() + code.memory; ++t) {
        const uint8_t u = t < info.size() ? info[t] : 0;
        for (unsigned g : code.generators) {
            // tap k of the generator weights input delayed by k symbols
            uint8_t bit = (g & 1u) ? u : 0;
            for (int k = 1; k <= code.memory; ++k)
                if (g & (1u << k)) bit ^= reg[k - 1];
            out.push_back(bit);
        }
        for (int k = code.memory - 1; k > 0; --k) reg[k] = reg[k - 1];
        reg[0] = u;
    }
    if (final_state) *final_state = reg;
    return out;
}

InfoBits random_info(size_t n, Rng& rng) {
    InfoBits info(n);
    for (auto& b : info) b = static_cast<uint8_t>(rng.next_u64() & 1u);
    return info;
}

} // namespace

TEST(Fec, AllZeroInfoGivesAllPlusOne) {
    const InfoBits info(162, 0);
    const Codeword cw = encode(info, CodeSpec::rate_third());
    ASSERT_EQ(cw.size(), 504u);
    for (int8_t s : cw) EXPECT_EQ(s, 1);
}

TEST(Fec, MatchesShiftRegisterOracle) {
    const CodeSpec code = CodeSpec::rate_third();
    Rng rng(11);

    // Impulse response: a single 1 at position 0.
    InfoBits impulse(40, 0);
    impulse[0] = 1;
    const Codeword got = encode(impulse, code);
    const std::vector<uint8_t> want = shift_register_oracle(impulse, code);
    ASSERT_EQ(got.size(), want.size());
    for (size_t i = 0; i < got.size(); ++i) EXPECT_EQ(got[i], want[i] ? -1 : +1) << "at " << i;

    // Random payloads, and the register must end all-zero after the tail.
    for (int rep = 0; rep < 50; ++rep) {
        const InfoBits info = random_info(30, rng);
        std::vector<uint8_t> final_state;
        const std::vector<uint8_t> bits = shift_register_oracle(info, code, &final_state);
        const Codeword sym = encode(info, code);
        ASSERT_EQ(sym.size(), bits.size());
        for (size_t i = 0; i < sym.size(); ++i) ASSERT_EQ(sym[i], bits[i] ? -1 : +1);
        for (uint8_t s : final_state) EXPECT_EQ(s, 0);
    }
}

TEST(Fec, LinearOverGf2) {
    const CodeSpec code = CodeSpec::rate_third();
    Rng rng(22);
    for (int rep = 0; rep < 200; ++rep) {
        const InfoBits a = random_info(50, rng), b = random_info(50, rng);
        InfoBits axb(a.size());
        for (size_t i = 0; i < a.size(); ++i) axb[i] = a[i] ^ b[i];
        const Codeword ca = encode(a, code), cb = encode(b, code), cab = encode(axb, code);
        for (size_t i = 0; i < cab.size(); ++i) ASSERT_EQ(cab[i], ca[i] * cb[i]);
    }
}

TEST(Fec, InterleaverRoundTripAndSeeds) {
    // identity permutation
    Interleaver ident;
    ident.perm = {0, 1, 2, 3};
    const std::vector<int8_t> x = {1, -1, -1, 1};
    EXPECT_EQ(interleave(x, ident), x);

    const Interleaver il8 = Interleaver::make(1, 8);
    const std::vector<double> v = {1, 2, 3, 4, 5, 6, 7, 8};
    EXPECT_EQ(deinterleave(interleave(v, il8), il8), v);

    const Interleaver a = Interleaver::make(1, 504), b = Interleaver::make(2, 504);
    EXPECT_NE(a.perm, b.perm);

    // bijection for a spread of seeds
    for (uint64_t seed : {3ull, 99ull, 12345ull}) {
        const Interleaver il = Interleaver::make(seed, 504);
        std::vector<bool> seen(504, false);
        for (uint32_t p : il.perm) {
            ASSERT_LT(p, 504u);
            ASSERT_FALSE(seen[p]);
            seen[p] = true;
        }
    }
}

TEST(Fec, NoiselessDecodeManyBlocks) {
    const CodeSpec code = CodeSpec::rate_third();
    Rng rng(33);
    for (int rep = 0; rep < 1000; ++rep) {
        const InfoBits info = random_info(162, rng);
        const Codeword cw = encode(info, code);
        const double kappa = rep % 3 == 0 ? 0.25 : (rep % 3 == 1 ? 1.0 : 10.0);
        LlrFrame llrs(cw.size());
        for (size_t i = 0; i < cw.size(); ++i) llrs[i] = kappa * cw[i];
        EXPECT_EQ(viterbi_decode(llrs, code), info);
    }
}

TEST(Fec, PuncturedRatesRoundTrip) {
    Rng rng(44);
    for (const CodeSpec& code : {CodeSpec::rate_two_fifths(), CodeSpec::rate_half()}) {
        for (int rep = 0; rep < 200; ++rep) {
            const InfoBits info = random_info(162, rng);
            const Codeword cw = encode(info, code);
            LlrFrame llrs(cw.size());
            for (size_t i = 0; i < cw.size(); ++i) llrs[i] = static_cast<double>(cw[i]);
            EXPECT_EQ(viterbi_decode(depuncture(llrs, code, info.size()), code), info);
        }
    }
    EXPECT_EQ(coded_length(CodeSpec::rate_two_fifths(), 162), 420u);
    EXPECT_EQ(coded_length(CodeSpec::rate_half(), 162), 336u);
    EXPECT_NEAR(CodeSpec::rate_two_fifths().effective_rate(), 0.4, 1e-12);
    EXPECT_NEAR(CodeSpec::rate_half().effective_rate(), 0.5, 1e-12);
}

TEST(Fec, AllZeroLlrsDecodeDeterministically) {
    const CodeSpec code = CodeSpec::rate_third();
    const LlrFrame zeros(504, 0.0);
    const InfoBits first = viterbi_decode(zeros, code);
    EXPECT_EQ(viterbi_decode(zeros, code), first);
    EXPECT_EQ(first.size(), 162u);
}

TEST(Fec, DecodeMatchesExhaustiveSearch) {
    // Payload of 20 bits: the best codeword by correlation metric over all
    // 2^20 candidates must equal the Viterbi output.
    const CodeSpec code = CodeSpec::rate_third();
    const size_t payload = 20;
    Rng rng(55);
    LlrFrame llrs((payload + code.memory) * code.outputs());
    for (double& v : llrs) v = rng.bernoulli(0.5) ? 1.0 : -1.0;

    double best = -1e300;
    uint32_t best_info = 0;
    for (uint32_t cand = 0; cand < (1u << payload); ++cand) {
        InfoBits info(payload);
        for (size_t i = 0; i < payload; ++i) info[i] = (cand >> i) & 1u;
        const Codeword cw = encode(info, code);
        double corr = 0.0;
        for (size_t i = 0; i < cw.size(); ++i) corr += cw[i] * llrs[i];
        if (corr > best) {
            best = corr;
            best_info = cand;
        }
    }
    const InfoBits decoded = viterbi_decode(llrs, code);
    uint32_t packed = 0;
    for (size_t i = 0; i < payload; ++i) packed |= static_cast<uint32_t>(decoded[i]) << i;
    EXPECT_EQ(packed, best_info);
}

TEST(Fec, ErrorPaths) {
    const CodeSpec code = CodeSpec::rate_third();
    LlrFrame bad(504, 0.0);
    bad[7] = std::numeric_limits<double>::infinity();
    EXPECT_THROW(viterbi_decode(bad, code), std::invalid_argument);
    EXPECT_THROW(viterbi_decode(LlrFrame(503, 0.0), code), std::invalid_argument);

    CodeSpec odd = CodeSpec::rate_third();
    odd.puncture = {1, 1, 1, 1, 0}; // period 5 does not divide 504
    EXPECT_THROW(encode(InfoBits(162, 0), odd), std::invalid_argument);

    EXPECT_THROW(interleave(std::vector<double>(3, 0.0), Interleaver::make(1, 8)),
                 std::invalid_argument);
}
