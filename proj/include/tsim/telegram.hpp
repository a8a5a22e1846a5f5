#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "tsim/fec.hpp"

namespace tsim {

/// Sub-packet framing: L_S data symbols with an L_tr-symbol training sequence
/// embedded in the middle, observed together with L_add signal-free guard
/// symbols on each side.
struct FrameSpec {
    int data_symbols = 28;                                        // L_S (even)
    int guard_symbols = 10;                                       // L_add per side
    std::vector<int8_t> training = {-1, -1, -1, +1, -1, +1, +1, +1};

    int training_len() const { return static_cast<int>(training.size()); }
    int total() const { return data_symbols + training_len(); }   // L_tot
    int window() const { return total() + 2 * guard_symbols; }    // observed span
    int half() const { return data_symbols / 2; }

    void validate() const {
        if (data_symbols < 2 || data_symbols % 2 != 0)
            throw std::invalid_argument("frame: L_S must be a positive even number");
        if (guard_symbols < 0) throw std::invalid_argument("frame: negative guard length");
        for (int8_t r : training)
            if (r != 1 && r != -1) throw std::invalid_argument("frame: training symbols must be antipodal");
    }

    int num_subpackets(size_t codeword_len) const {
        if (codeword_len == 0 || codeword_len % data_symbols != 0)
            throw std::invalid_argument("frame: codeword length not a multiple of L_S");
        return static_cast<int>(codeword_len) / data_symbols;
    }
};

struct SubPacket {
    int index = 0;
    std::vector<int8_t> symbols; // length L_tot
};

/// Split a codeword into sub-packets: per sub-packet the first L_S/2 data
/// symbols, then the training sequence, then the remaining L_S/2 data symbols.
inline std::vector<SubPacket> split(const Codeword& cw, const FrameSpec& fs) {
    fs.validate();
    const int n_sub = fs.num_subpackets(cw.size());
    const int h = fs.half();
    std::vector<SubPacket> out(n_sub);
    for (int i = 0; i < n_sub; ++i) {
        SubPacket& sp = out[i];
        sp.index = i;
        sp.symbols.resize(fs.total());
        for (int m = 0; m < h; ++m) sp.symbols[m] = cw[i * fs.data_symbols + m];
        for (int v = 0; v < fs.training_len(); ++v) sp.symbols[h + v] = fs.training[v];
        for (int m = h + fs.training_len(); m < fs.total(); ++m)
            sp.symbols[m] = cw[i * fs.data_symbols + m - fs.training_len()];
    }
    return out;
}

/// Data-carrying positions within a sub-packet, in transmission order.
inline std::vector<int> data_positions(const FrameSpec& fs) {
    std::vector<int> pos;
    pos.reserve(fs.data_symbols);
    for (int m = 0; m < fs.half(); ++m) pos.push_back(m);
    for (int m = fs.half() + fs.training_len(); m < fs.total(); ++m) pos.push_back(m);
    return pos;
}

/// Codeword index carried at data slot `m` of sub-packet `i`.
inline int codeword_index(const FrameSpec& fs, int subpacket, int m) {
    if (m < fs.half()) return subpacket * fs.data_symbols + m;
    if (m >= fs.half() + fs.training_len() && m < fs.total())
        return subpacket * fs.data_symbols + m - fs.training_len();
    throw std::invalid_argument("telegram: not a data position");
}

/// Inverse of split on the data positions: collect per-sub-packet data LLRs
/// (L_S values each, in sub-packet order) back into codeword order.
inline LlrFrame reassemble(const std::vector<LlrFrame>& frames, const FrameSpec& fs) {
    fs.validate();
    LlrFrame out;
    out.reserve(frames.size() * fs.data_symbols);
    for (size_t i = 0; i < frames.size(); ++i) {
        if (frames[i].size() != static_cast<size_t>(fs.data_symbols))
            throw std::invalid_argument("reassemble: frame length mismatch");
        out.insert(out.end(), frames[i].begin(), frames[i].end());
    }
    return out;
}

} // namespace tsim
