#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "tsim/rng.hpp"
#include "tsim/telegram.hpp"

namespace tsim {

/// One class of bursty interferers: packets of `length` symbols arriving
/// independently per symbol slot with probability p_a = 1 - exp(-G / L_I).
/// When `node_variances` is nonempty, each arrival draws its variance
/// uniformly from that list (ring-deployment scenarios); otherwise every
/// arrival uses `variance`.
struct InterfererClass {
    int length = 1;             // L_I
    double variance = 0.0;      // sigma_I^2 per interferer
    double load = 0.0;          // G
    double arrival_prob = 0.0;  // p_a
    std::vector<double> node_variances;

    static InterfererClass from_load(int length, double load, double variance) {
        if (length < 1) throw std::invalid_argument("interference: L_I must be >= 1");
        if (load < 0.0) throw std::invalid_argument("interference: negative load");
        if (variance < 0.0) throw std::invalid_argument("interference: negative variance");
        InterfererClass c;
        c.length = length;
        c.variance = variance;
        c.load = load;
        c.arrival_prob = 1.0 - std::exp(-load / length);
        return c;
    }
};

struct ArrivalTrace {
    std::vector<uint8_t> arrivals; // indicator per observed slot
    std::vector<int> active;       // active interferers per observed slot
};

/// Bernoulli(p_a) arrivals per slot; an arrival at slot t overlaps slots
/// t .. t+L_I-1. A warm-up of L_I slots precedes slot 0 so the active-count
/// process is stationary from the first observed slot.
inline ArrivalTrace sample_arrivals(const InterfererClass& cls, size_t num_slots, Rng& rng) {
    if (num_slots < 1) throw std::invalid_argument("interference: num_slots must be >= 1");
    ArrivalTrace tr;
    tr.arrivals.assign(num_slots, 0);
    tr.active.assign(num_slots, 0);
    const long first = -static_cast<long>(cls.length);
    for (long t = first; t < static_cast<long>(num_slots); ++t) {
        if (!rng.bernoulli(cls.arrival_prob)) continue;
        if (t >= 0) tr.arrivals[static_cast<size_t>(t)] = 1;
        const long lo = t > 0 ? t : 0;
        const long hi = std::min<long>(t + cls.length, static_cast<long>(num_slots));
        for (long m = lo; m < hi; ++m) tr.active[static_cast<size_t>(m)]++;
    }
    return tr;
}

/// Per-slot interference variance and active counts for a set of classes,
/// including warm-up. Draw order is fixed: classes in order, slots ascending,
/// node variance drawn immediately after each arrival.
struct InterferenceTrace {
    std::vector<double> variance;          // interference-only variance per slot
    std::vector<std::vector<int>> counts;  // per class per slot
};

inline InterferenceTrace sample_interference(const std::vector<InterfererClass>& classes,
                                             size_t num_slots, Rng& rng) {
    InterferenceTrace tr;
    tr.variance.assign(num_slots, 0.0);
    tr.counts.assign(classes.size(), std::vector<int>(num_slots, 0));
    for (size_t c = 0; c < classes.size(); ++c) {
        const InterfererClass& cls = classes[c];
        if (cls.variance < 0.0) throw std::invalid_argument("interference: negative variance");
        const long first = -static_cast<long>(cls.length);
        for (long t = first; t < static_cast<long>(num_slots); ++t) {
            if (!rng.bernoulli(cls.arrival_prob)) continue;
            double v = cls.variance;
            if (!cls.node_variances.empty())
                v = cls.node_variances[rng.below(cls.node_variances.size())];
            const long lo = t > 0 ? t : 0;
            const long hi = std::min<long>(t + cls.length, static_cast<long>(num_slots));
            for (long m = lo; m < hi; ++m) {
                tr.variance[static_cast<size_t>(m)] += v;
                tr.counts[c][static_cast<size_t>(m)]++;
            }
        }
    }
    return tr;
}

/// Received window for one sub-packet: y over [-L_add, L_tot + L_add) plus
/// the ground-truth total variance trace used by the genie baseline.
struct ChannelRealization {
    int guard = 0;            // L_add
    double sigma2_noise = 0.0;
    std::vector<double> y;
    std::vector<double> sigma2_tot;        // sigma_N^2 + interference variance
    std::vector<std::vector<int>> counts;  // active interferers per class
};

inline ChannelRealization synthesize(const SubPacket& sp, const FrameSpec& fs,
                                     const std::vector<InterfererClass>& classes,
                                     double sigma2_noise, Rng& rng) {
    if (sigma2_noise < 0.0) throw std::invalid_argument("interference: negative noise variance");
    if (sp.symbols.size() != static_cast<size_t>(fs.total()))
        throw std::invalid_argument("interference: sub-packet length mismatch");
    const size_t w = static_cast<size_t>(fs.window());

    ChannelRealization out;
    out.guard = fs.guard_symbols;
    out.sigma2_noise = sigma2_noise;
    InterferenceTrace tr = sample_interference(classes, w, rng);
    out.counts = std::move(tr.counts);
    out.y.resize(w);
    out.sigma2_tot.resize(w);

    const double noise_std = std::sqrt(sigma2_noise);
    for (size_t i = 0; i < w; ++i) {
        const int m = static_cast<int>(i) - fs.guard_symbols;
        const double x = (m >= 0 && m < fs.total()) ? sp.symbols[m] : 0.0;
        out.sigma2_tot[i] = sigma2_noise + tr.variance[i];
        out.y[i] = x + noise_std * rng.gaussian() + std::sqrt(tr.variance[i]) * rng.gaussian();
    }
    return out;
}

} // namespace tsim
