#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tsim/fec.hpp"
#include "tsim/rng.hpp"
#include "tsim/telegram.hpp"

namespace tsim {

/// AWGN packet-error curve of a code, sampled on an Es/N0 grid. Lookups
/// interpolate linearly in (dB, log PER); values outside the grid clamp to
/// the nearest endpoint.
struct PsiTable {
    std::vector<double> esn0_db;
    std::vector<double> per;
    std::vector<uint64_t> trials;

    double lookup_db(double x_db, bool* clamped = nullptr) const {
        if (esn0_db.empty()) throw std::invalid_argument("psi: empty table");
        if (clamped) *clamped = false;
        if (x_db <= esn0_db.front()) {
            if (clamped) *clamped = x_db < esn0_db.front();
            return per.front();
        }
        if (x_db >= esn0_db.back()) {
            if (clamped) *clamped = x_db > esn0_db.back();
            return per.back();
        }
        const size_t hi = std::upper_bound(esn0_db.begin(), esn0_db.end(), x_db) - esn0_db.begin();
        const size_t lo = hi - 1;
        const double w = (x_db - esn0_db[lo]) / (esn0_db[hi] - esn0_db[lo]);
        const double log_lo = std::log(std::max(per[lo], 1e-300));
        const double log_hi = std::log(std::max(per[hi], 1e-300));
        const double v = std::exp((1.0 - w) * log_lo + w * log_hi);
        return v < 1e-290 ? 0.0 : v;
    }

    void save_csv(const std::string& path) const {
        std::ofstream f(path);
        if (!f) throw std::runtime_error("psi: cannot write " + path);
        f << "esn0_db,per,trials\n";
        for (size_t i = 0; i < esn0_db.size(); ++i)
            f << esn0_db[i] << ',' << per[i] << ',' << trials[i] << '\n';
    }

    static PsiTable load_csv(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw std::runtime_error("psi: cannot read " + path);
        PsiTable t;
        std::string line;
        std::getline(f, line); // header
        while (std::getline(f, line)) {
            if (line.empty()) continue;
            std::istringstream ss(line);
            std::string field;
            std::getline(ss, field, ',');
            t.esn0_db.push_back(std::stod(field));
            std::getline(ss, field, ',');
            t.per.push_back(std::stod(field));
            std::getline(ss, field, ',');
            t.trials.push_back(std::stoull(field));
        }
        return t;
    }
};

/// Per-codeword-position SINR from the per-sub-packet total-variance traces
/// at the data slots: SINR_l = 1 / sigma_tot^2 at the slot carrying c[l]
/// after interleaving. The interleaver only permutes positions, so effective
/// SINR metrics (means over l) are unaffected, but the bookkeeping keeps the
/// per-position association exact.
inline std::vector<double> sinr_trace(const std::vector<std::vector<double>>& subpacket_data_sigma2,
                                      const FrameSpec& fs, const Interleaver& il) {
    const size_t n = subpacket_data_sigma2.size() * fs.data_symbols;
    if (il.perm.size() != n) throw std::invalid_argument("sinr_trace: interleaver length mismatch");
    std::vector<double> sinr(n);
    for (size_t i = 0; i < subpacket_data_sigma2.size(); ++i) {
        if (subpacket_data_sigma2[i].size() != static_cast<size_t>(fs.data_symbols))
            throw std::invalid_argument("sinr_trace: trace length mismatch");
        for (int idx = 0; idx < fs.data_symbols; ++idx) {
            // transmitted position j = i * L_S + idx carries codeword bit perm[j]
            const size_t j = i * fs.data_symbols + idx;
            sinr[il.perm[j]] = 1.0 / subpacket_data_sigma2[i][idx];
        }
    }
    return sinr;
}

/// Capacity effective SINR metric: b * I^{-1}( mean_l I(SINR_l / b) ) with
/// I(y) = log2(1 + y).
inline double effective_sinr_cesm(const std::vector<double>& trace, double b) {
    if (trace.empty()) throw std::invalid_argument("cesm: empty trace");
    if (!(b > 0.0)) throw std::invalid_argument("cesm: b must be positive");
    double acc = 0.0;
    for (double s : trace) acc += std::log2(1.0 + s / b);
    acc /= trace.size();
    return b * (std::exp2(acc) - 1.0);
}

/// High-SINR simplification: the geometric mean of the per-position SINRs.
inline double effective_sinr_geomean(const std::vector<double>& trace) {
    if (trace.empty()) throw std::invalid_argument("geomean: empty trace");
    double acc = 0.0;
    for (double s : trace) {
        if (!(s > 0.0)) throw std::invalid_argument("geomean: non-positive SINR");
        acc += std::log(s);
    }
    return std::exp(acc / trace.size());
}

/// Monte Carlo AWGN PER of the code over an increasing Es/N0 grid, with
/// LLR = 2y / sigma_N^2 and isotonic (non-increasing) post-smoothing.
inline PsiTable calibrate_psi(const CodeSpec& code, int payload_bits,
                              const std::vector<double>& esn0_grid, uint64_t trials_per_point,
                              uint64_t master_seed) {
    if (esn0_grid.empty()) throw std::invalid_argument("psi: empty grid");
    for (size_t i = 1; i < esn0_grid.size(); ++i)
        if (esn0_grid[i] <= esn0_grid[i - 1]) throw std::invalid_argument("psi: grid must increase");

    PsiTable table;
    table.esn0_db = esn0_grid;
    table.trials.assign(esn0_grid.size(), trials_per_point);
    table.per.resize(esn0_grid.size());

    for (size_t pt = 0; pt < esn0_grid.size(); ++pt) {
        const double sigma2 = std::pow(10.0, -esn0_grid[pt] / 10.0);
        const double sigma = std::sqrt(sigma2);
        uint64_t errors = 0;
        for (uint64_t trial = 0; trial < trials_per_point; ++trial) {
            Rng rng(derive_seed(master_seed, StreamTag::PsiCalibration, pt, trial));
            InfoBits info(payload_bits);
            for (auto& b : info) b = static_cast<uint8_t>(rng.next_u64() & 1u);
            Codeword cw = encode(info, code);
            LlrFrame llrs(cw.size());
            for (size_t l = 0; l < cw.size(); ++l)
                llrs[l] = 2.0 * (cw[l] + sigma * rng.gaussian()) / sigma2;
            InfoBits decoded = viterbi_decode(depuncture(llrs, code, payload_bits), code);
            if (decoded != info) ++errors;
        }
        table.per[pt] = static_cast<double>(errors) / trials_per_point;
    }

    // Pool-adjacent-violators: enforce PER non-increasing in Es/N0.
    struct Block {
        double value;
        double weight;
    };
    std::vector<Block> blocks;
    for (size_t i = 0; i < table.per.size(); ++i) {
        blocks.push_back({table.per[i], static_cast<double>(table.trials[i])});
        while (blocks.size() > 1 && blocks[blocks.size() - 2].value < blocks.back().value) {
            Block b = blocks.back();
            blocks.pop_back();
            Block& a = blocks.back();
            a.value = (a.value * a.weight + b.value * b.weight) / (a.weight + b.weight);
            a.weight += b.weight;
        }
    }
    size_t i = 0;
    for (const Block& b : blocks) {
        const size_t count = static_cast<size_t>(b.weight / trials_per_point + 0.5);
        for (size_t k = 0; k < count && i < table.per.size(); ++k) table.per[i++] = b.value;
    }
    return table;
}

/// PER approximation: Psi evaluated at the CESM effective SINR in dB,
/// clamped to [0, 1]. `clamped` reports lookups outside the table range.
inline double approx_per(const std::vector<double>& trace, const PsiTable& psi, double b,
                         bool* clamped = nullptr) {
    const double eff = effective_sinr_cesm(trace, b);
    const double eff_db = 10.0 * std::log10(std::max(eff, 1e-300));
    return std::clamp(psi.lookup_db(eff_db, clamped), 0.0, 1.0);
}

/// Worst-case BCJR multiplication counts per detection window.
struct ComplexityEstimate {
    double exact;      // L * (1 + S + 3 S^2)
    double asymptotic; // 3 L S^2
};

inline ComplexityEstimate complexity_estimate(double num_states, double window_len) {
    if (num_states < 1.0) throw std::invalid_argument("complexity: S must be >= 1");
    return {window_len * (1.0 + num_states + 3.0 * num_states * num_states),
            3.0 * window_len * num_states * num_states};
}

inline double full_chain_states(const std::vector<int>& interferer_lengths) {
    double sum = 0.0;
    for (int l : interferer_lengths) sum += l;
    return 2.0 * std::exp2(sum);
}

inline double reduced_chain_states(const std::vector<int>& interferer_lengths) {
    double prod = 1.0;
    for (int l : interferer_lengths) prod *= l + 1.0;
    return 2.0 * prod;
}

inline double scalable_chain_states(int partitions) { return 2.0 * partitions; }

} // namespace tsim
