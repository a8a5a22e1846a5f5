#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "tsim/interference.hpp"

namespace tsim {

/// Node of the interference product-chain: per-class counters of symbols
/// still to be overlapped (sorted descending within a class), concatenated
/// with the current BPSK symbol. Counters may be empty for chains whose
/// states are defined by a learned variance alone (scalable detector).
struct InterferenceState {
    std::vector<std::vector<int>> counters;
    int8_t symbol = +1;

    int active_in_class(size_t c) const {
        int n = 0;
        for (int v : counters[c]) n += (v > 0);
        return n;
    }
};

struct MarkovEdge {
    uint32_t to = 0;
    uint32_t from = 0;
    double prob = 0.0;
};

/// Column-stochastic chain: for every `from`, edge probabilities into all
/// `to` states sum to one. `state_variance` holds the total disturbance
/// variance sigma_tot^2 per state (noise included).
struct MarkovChainModel {
    std::vector<InterferenceState> states;
    std::vector<MarkovEdge> edges;
    std::vector<double> state_variance;
    std::vector<double> stationary;

    size_t size() const { return states.size(); }

    std::vector<double> dense_transition() const {
        const size_t s = size();
        std::vector<double> m(s * s, 0.0);
        for (const MarkovEdge& e : edges) m[e.to * s + e.from] += e.prob;
        return m;
    }
};

inline constexpr size_t kStateBudget = 1u << 17;

/// All sorted interferer-state vectors for one class: strictly descending
/// sequences of distinct values from {1..L_I}, zero-padded to length L_I.
/// There are exactly 2^{L_I} of them (one per subset), listed in ascending
/// lexicographic order.
inline std::vector<std::vector<int>> enumerate_full_states(int interferer_len) {
    if (interferer_len < 1) throw std::invalid_argument("markov: L_I must be >= 1");
    if (interferer_len >= 17 || (size_t{1} << interferer_len) > kStateBudget)
        throw std::invalid_argument("markov: state budget exceeded");
    std::vector<std::vector<int>> states;
    states.reserve(size_t{1} << interferer_len);
    for (unsigned mask = 0; mask < (1u << interferer_len); ++mask) {
        std::vector<int> v;
        for (int val = interferer_len; val >= 1; --val)
            if (mask & (1u << (val - 1))) v.push_back(val);
        v.resize(interferer_len, 0);
        states.push_back(std::move(v));
    }
    std::sort(states.begin(), states.end());
    return states;
}

/// Number of states without sorted-state merging:
/// sum over l of binom(L_I, l)^2 * l!.
inline unsigned long long count_unsorted_states(int interferer_len) {
    if (interferer_len < 0) throw std::invalid_argument("markov: negative L_I");
    unsigned long long total = 0;
    for (int l = 0; l <= interferer_len; ++l) {
        unsigned long long binom = 1;
        for (int i = 0; i < l; ++i) binom = binom * (interferer_len - i) / (i + 1);
        unsigned long long factorial = 1;
        for (int i = 2; i <= l; ++i) factorial *= i;
        total += binom * binom * factorial;
    }
    return total;
}

inline double state_variance(const InterferenceState& s, double sigma2_noise,
                             const std::vector<InterfererClass>& classes) {
    double v = sigma2_noise;
    for (size_t c = 0; c < classes.size(); ++c) v += s.active_in_class(c) * classes[c].variance;
    return v;
}

inline std::vector<double> state_variances(const std::vector<InterferenceState>& states,
                                           const std::vector<InterfererClass>& classes,
                                           double sigma2_noise) {
    std::vector<double> out(states.size());
    for (size_t i = 0; i < states.size(); ++i) out[i] = state_variance(states[i], sigma2_noise, classes);
    return out;
}

/// Stationary distribution by power iteration to an infinity-norm residual
/// below 1e-12 (at most 1e5 iterations).
inline std::vector<double> stationary_distribution(const std::vector<MarkovEdge>& edges,
                                                   size_t num_states) {
    std::vector<double> pi(num_states, 1.0 / num_states), next(num_states);
    for (int iter = 0; iter < 100000; ++iter) {
        std::fill(next.begin(), next.end(), 0.0);
        for (const MarkovEdge& e : edges) next[e.to] += e.prob * pi[e.from];
        double sum = 0.0, delta = 0.0;
        for (double v : next) sum += v;
        for (size_t i = 0; i < num_states; ++i) {
            next[i] /= sum;
            delta = std::max(delta, std::abs(next[i] - pi[i]));
        }
        pi.swap(next);
        if (delta < 1e-12) return pi;
    }
    double residual = 0.0;
    std::fill(next.begin(), next.end(), 0.0);
    for (const MarkovEdge& e : edges) next[e.to] += e.prob * pi[e.from];
    for (size_t i = 0; i < num_states; ++i) residual = std::max(residual, std::abs(next[i] - pi[i]));
    throw std::runtime_error("markov: stationary distribution did not converge, residual " +
                             std::to_string(residual));
}

namespace detail {

// Per-class successor list: (next counter vector, probability).
using ClassStates = std::vector<std::vector<int>>;
using ClassSuccessors = std::vector<std::vector<std::pair<size_t, double>>>;

// Full model: every nonzero counter decrements; a new arrival (prob p_a)
// inserts a counter at L_I.
inline ClassSuccessors full_class_successors(const ClassStates& states, const InterfererClass& cls) {
    std::map<std::vector<int>, size_t> index;
    for (size_t i = 0; i < states.size(); ++i) index[states[i]] = i;
    ClassSuccessors succ(states.size());
    for (size_t i = 0; i < states.size(); ++i) {
        std::vector<int> dec;
        for (int v : states[i])
            if (v > 1) dec.push_back(v - 1);
        std::vector<int> no_arrival = dec;
        no_arrival.resize(states[i].size(), 0);
        std::vector<int> arrival = dec;
        arrival.insert(arrival.begin(), cls.length);
        arrival.resize(states[i].size(), 0);
        if (cls.arrival_prob < 1.0)
            succ[i].emplace_back(index.at(no_arrival), 1.0 - cls.arrival_prob);
        if (cls.arrival_prob > 0.0) succ[i].emplace_back(index.at(arrival), cls.arrival_prob);
    }
    return succ;
}

// Reduced model: one counter per class; arrivals are blocked while the
// counter exceeds one, so overlaps within the class are not represented.
inline ClassSuccessors reduced_class_successors(const ClassStates& states,
                                                const InterfererClass& cls) {
    ClassSuccessors succ(states.size());
    for (size_t i = 0; i < states.size(); ++i) {
        const int s = states[i][0];
        if (s > 1) {
            succ[i].emplace_back(static_cast<size_t>(s - 1), 1.0);
        } else {
            if (cls.arrival_prob < 1.0) succ[i].emplace_back(0, 1.0 - cls.arrival_prob);
            if (cls.arrival_prob > 0.0)
                succ[i].emplace_back(static_cast<size_t>(cls.length), cls.arrival_prob);
        }
    }
    return succ;
}

inline MarkovChainModel build_product_chain(const std::vector<ClassStates>& class_states,
                                            const std::vector<ClassSuccessors>& class_succ,
                                            const std::vector<InterfererClass>& classes,
                                            double sigma2_noise) {
    size_t n_interferer = 1;
    for (const ClassStates& cs : class_states) {
        if (cs.size() > kStateBudget / n_interferer)
            throw std::invalid_argument("markov: state budget exceeded");
        n_interferer *= cs.size();
    }
    if (2 * n_interferer > kStateBudget)
        throw std::invalid_argument("markov: state budget exceeded");

    MarkovChainModel model;
    model.states.reserve(2 * n_interferer);
    // Symbol-major order (+1 block then -1), class-0-major within a block;
    // per-class lists are lexicographically ascending, so the product order
    // is ascending on the concatenated counter vectors.
    for (int8_t sym : {int8_t{+1}, int8_t{-1}}) {
        std::vector<size_t> idx(class_states.size(), 0);
        for (size_t flat = 0; flat < n_interferer; ++flat) {
            InterferenceState st;
            st.symbol = sym;
            size_t rem = flat;
            for (size_t c = class_states.size(); c-- > 0;) {
                idx[c] = rem % class_states[c].size();
                rem /= class_states[c].size();
            }
            for (size_t c = 0; c < class_states.size(); ++c)
                st.counters.push_back(class_states[c][idx[c]]);
            model.states.push_back(std::move(st));
        }
    }

    // Product transitions: pick one successor per class, multiply the
    // probabilities, and split 1/2 per BPSK symbol.
    for (size_t from_flat = 0; from_flat < n_interferer; ++from_flat) {
        std::vector<size_t> from_idx(class_states.size());
        size_t rem = from_flat;
        for (size_t c = class_states.size(); c-- > 0;) {
            from_idx[c] = rem % class_states[c].size();
            rem /= class_states[c].size();
        }
        std::vector<std::pair<size_t, double>> combos{{0, 1.0}};
        for (size_t c = 0; c < class_states.size(); ++c) {
            std::vector<std::pair<size_t, double>> next;
            next.reserve(combos.size() * 2);
            for (const auto& [flat, p] : combos)
                for (const auto& [to_c, pc] : class_succ[c][from_idx[c]])
                    next.emplace_back(flat * class_states[c].size() + to_c, p * pc);
            combos = std::move(next);
        }
        for (int from_sym = 0; from_sym < 2; ++from_sym)
            for (int to_sym = 0; to_sym < 2; ++to_sym)
                for (const auto& [to_flat, p] : combos)
                    model.edges.push_back({static_cast<uint32_t>(to_sym * n_interferer + to_flat),
                                           static_cast<uint32_t>(from_sym * n_interferer + from_flat),
                                           0.5 * p});
    }

    model.state_variance = state_variances(model.states, classes, sigma2_noise);
    model.stationary = stationary_distribution(model.edges, model.size());
    return model;
}

} // namespace detail

/// Full-state multiclass chain: 2^{L_I} sorted states per class, product
/// across classes, extended by the BPSK symbol (2 * 2^{sum L_I} states).
inline MarkovChainModel build_full_chain(const std::vector<InterfererClass>& classes,
                                         double sigma2_noise) {
    if (classes.empty()) throw std::invalid_argument("markov: no interferer classes");
    std::vector<detail::ClassStates> class_states;
    std::vector<detail::ClassSuccessors> class_succ;
    for (const InterfererClass& cls : classes) {
        class_states.push_back(enumerate_full_states(cls.length));
        class_succ.push_back(detail::full_class_successors(class_states.back(), cls));
    }
    return detail::build_product_chain(class_states, class_succ, classes, sigma2_noise);
}

/// Reduced-state multiclass chain: L_I + 1 states per class (at most one
/// active interferer per class), 2 * prod(L_I + 1) symbol-extended states.
inline MarkovChainModel build_reduced_chain(const std::vector<InterfererClass>& classes,
                                            double sigma2_noise) {
    if (classes.empty()) throw std::invalid_argument("markov: no interferer classes");
    std::vector<detail::ClassStates> class_states;
    std::vector<detail::ClassSuccessors> class_succ;
    for (const InterfererClass& cls : classes) {
        detail::ClassStates cs;
        for (int s = 0; s <= cls.length; ++s) cs.push_back({s});
        class_states.push_back(cs);
        class_succ.push_back(detail::reduced_class_successors(cs, cls));
    }
    return detail::build_product_chain(class_states, class_succ, classes, sigma2_noise);
}

} // namespace tsim
