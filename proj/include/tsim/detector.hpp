#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tsim/interference.hpp"
#include "tsim/markov.hpp"
#include "tsim/telegram.hpp"

namespace tsim {

inline constexpr double kLlrMax = 50.0; // Viterbi metrics saturate beyond this

enum class SectionMode : uint8_t { Silent, Data, Training };

struct TrellisSection {
    SectionMode mode = SectionMode::Data;
    int8_t pinned = 0; // training symbol when mode == Training
};

/// Section layout over the observation window [-L_add, L_tot + L_add):
/// guards are silent, the mid-packet training symbols are pinned, the rest
/// carries data.
inline std::vector<TrellisSection> make_sections(const FrameSpec& fs) {
    fs.validate();
    std::vector<TrellisSection> sections(fs.window());
    for (int i = 0; i < fs.window(); ++i) {
        const int m = i - fs.guard_symbols;
        if (m < 0 || m >= fs.total()) {
            sections[i] = {SectionMode::Silent, 0};
        } else if (m >= fs.half() && m < fs.half() + fs.training_len()) {
            sections[i] = {SectionMode::Training, fs.training[m - fs.half()]};
        } else {
            sections[i] = {SectionMode::Data, 0};
        }
    }
    return sections;
}

/// Gaussian likelihood of observing y in a state with the given mean and
/// total variance. The variance is floored at 1e-300, so a zero-variance
/// state yields density 0 for y != mean.
inline double emission_likelihood(double y, double mean, double variance) {
    const double v = std::max(variance, 1e-300);
    const double d = y - mean;
    return std::exp(-0.5 * d * d / v) / std::sqrt(6.283185307179586476925286766559 * v);
}

struct PosteriorFrame {
    size_t num_states = 0;
    std::vector<double> posterior_plus; // Pr(x = +1 | y) per window index
    std::vector<double> lambda;         // per-step normalized joints, [step * S + state]

    double joint(size_t step, size_t state) const { return lambda[step * num_states + state]; }
};

namespace detail {

// States sharing (mean, variance) under a section mode are evaluated once.
// A masked state (training symbol mismatch) gets likelihood 0, which removes
// it from every path exactly as zeroing its transitions would.
struct EmissionPlan {
    std::vector<double> mean;
    std::vector<double> var;
    std::vector<int32_t> group; // per state; -1 = masked
};

inline EmissionPlan make_emission_plan(const MarkovChainModel& model,
                                       std::span<const double> variances, SectionMode mode,
                                       int8_t pinned) {
    EmissionPlan plan;
    plan.group.assign(model.size(), -1);
    std::vector<std::pair<double, double>> seen;
    for (size_t s = 0; s < model.size(); ++s) {
        double mean = 0.0;
        if (mode == SectionMode::Data) {
            mean = model.states[s].symbol;
        } else if (mode == SectionMode::Training) {
            if (model.states[s].symbol != pinned) continue;
            mean = pinned;
        }
        const std::pair<double, double> key{mean, variances[s]};
        size_t g = 0;
        for (; g < seen.size(); ++g)
            if (seen[g] == key) break;
        if (g == seen.size()) {
            seen.push_back(key);
            plan.mean.push_back(key.first);
            plan.var.push_back(key.second);
        }
        plan.group[s] = static_cast<int32_t>(g);
    }
    return plan;
}

inline void fill_emissions(const EmissionPlan& plan, double y, std::vector<double>& out) {
    std::vector<double> g(plan.mean.size());
    for (size_t i = 0; i < g.size(); ++i) g[i] = emission_likelihood(y, plan.mean[i], plan.var[i]);
    for (size_t s = 0; s < plan.group.size(); ++s)
        out[s] = plan.group[s] >= 0 ? g[plan.group[s]] : 0.0;
}

inline void normalize_or_throw(double* v, size_t n, size_t step, const char* direction) {
    double sum = 0.0;
    for (size_t i = 0; i < n; ++i) sum += v[i];
    if (!(sum > 0.0) || !std::isfinite(sum))
        throw std::runtime_error(std::string("bcjr: degenerate ") + direction + " vector at step " +
                                 std::to_string(step));
    for (size_t i = 0; i < n; ++i) v[i] /= sum;
}

} // namespace detail

/// Forward-backward pass over the window. Forward values start from the
/// stationary distribution (the process is in steady state before the first
/// observed symbol); backward values start uniform. Both recursions are
/// normalized per step. Posteriors come from summing the per-state joints
/// over the +1 and -1 symbol sets.
///
/// An optional per-state variance override supports detection under an
/// assumed (possibly mismatched) interference variance without rebuilding
/// the chain.
inline PosteriorFrame bcjr(const MarkovChainModel& model,
                           const std::vector<TrellisSection>& sections,
                           const std::vector<double>& observations,
                           std::span<const double> variance_override = {}) {
    const size_t n_states = model.size();
    const size_t window = sections.size();
    if (observations.size() != window) throw std::invalid_argument("bcjr: window length mismatch");
    if (window == 0) throw std::invalid_argument("bcjr: empty window");

    std::span<const double> variances =
        variance_override.empty() ? std::span<const double>(model.state_variance) : variance_override;
    if (variances.size() != n_states) throw std::invalid_argument("bcjr: variance vector size mismatch");

    // One emission plan per distinct section kind.
    detail::EmissionPlan plan_silent = detail::make_emission_plan(model, variances, SectionMode::Silent, 0);
    detail::EmissionPlan plan_data = detail::make_emission_plan(model, variances, SectionMode::Data, 0);
    detail::EmissionPlan plan_train_p =
        detail::make_emission_plan(model, variances, SectionMode::Training, +1);
    detail::EmissionPlan plan_train_m =
        detail::make_emission_plan(model, variances, SectionMode::Training, -1);
    auto plan_for = [&](const TrellisSection& sec) -> const detail::EmissionPlan& {
        switch (sec.mode) {
            case SectionMode::Silent: return plan_silent;
            case SectionMode::Data: return plan_data;
            default: return sec.pinned > 0 ? plan_train_p : plan_train_m;
        }
    };

    std::vector<double> emis(window * n_states);
    std::vector<double> row(n_states);
    for (size_t t = 0; t < window; ++t) {
        detail::fill_emissions(plan_for(sections[t]), observations[t], row);
        std::copy(row.begin(), row.end(), emis.begin() + t * n_states);
    }

    // Forward.
    std::vector<double> alpha(window * n_states, 0.0);
    for (size_t s = 0; s < n_states; ++s) alpha[s] = model.stationary[s] * emis[s];
    detail::normalize_or_throw(alpha.data(), n_states, 0, "forward");
    for (size_t t = 1; t < window; ++t) {
        double* cur = alpha.data() + t * n_states;
        const double* prev = cur - n_states;
        const double* e_t = emis.data() + t * n_states;
        for (const MarkovEdge& e : model.edges) cur[e.to] += e.prob * prev[e.from];
        for (size_t s = 0; s < n_states; ++s) cur[s] *= e_t[s];
        detail::normalize_or_throw(cur, n_states, t, "forward");
    }

    // Backward.
    std::vector<double> beta(n_states, 1.0 / n_states), scratch(n_states);
    PosteriorFrame out;
    out.num_states = n_states;
    out.posterior_plus.assign(window, 0.0);
    out.lambda.assign(window * n_states, 0.0);

    const size_t split = n_states / 2; // +1 block first, then -1 (model state order)
    auto emit_posteriors = [&](size_t t, const std::vector<double>& beta_t) {
        double total = 0.0;
        double* lam = out.lambda.data() + t * n_states;
        const double* a_t = alpha.data() + t * n_states;
        for (size_t s = 0; s < n_states; ++s) {
            lam[s] = a_t[s] * beta_t[s];
            total += lam[s];
        }
        if (!(total > 0.0) || !std::isfinite(total))
            throw std::runtime_error("bcjr: degenerate joint at step " + std::to_string(t));
        double plus = 0.0;
        for (size_t s = 0; s < n_states; ++s) {
            lam[s] /= total;
            if (s < split) plus += lam[s];
        }
        out.posterior_plus[t] = plus;
    };

    emit_posteriors(window - 1, beta);
    for (size_t t = window; t-- > 1;) {
        std::fill(scratch.begin(), scratch.end(), 0.0);
        const double* e_t = emis.data() + t * n_states;
        for (const MarkovEdge& e : model.edges) scratch[e.from] += e.prob * e_t[e.to] * beta[e.to];
        detail::normalize_or_throw(scratch.data(), n_states, t - 1, "backward");
        beta.swap(scratch);
        emit_posteriors(t - 1, beta);
    }
    return out;
}

inline double llr_from_posterior(double p_plus) {
    if (p_plus >= 1.0) return kLlrMax;
    if (p_plus <= 0.0) return -kLlrMax;
    return std::clamp(std::log(p_plus / (1.0 - p_plus)), -kLlrMax, kLlrMax);
}

/// MAP detection over one sub-packet window with an injected chain (full,
/// reduced, or scalable). Returns clamped LLRs for the L_S data positions.
inline LlrFrame detect_map(const ChannelRealization& real, const MarkovChainModel& model,
                           const FrameSpec& fs, std::span<const double> variance_override = {}) {
    const std::vector<TrellisSection> sections = make_sections(fs);
    if (real.y.size() != sections.size()) throw std::invalid_argument("detect: window mismatch");
    PosteriorFrame post = bcjr(model, sections, real.y, variance_override);
    LlrFrame out;
    out.reserve(fs.data_symbols);
    for (int m : data_positions(fs))
        out.push_back(llr_from_posterior(post.posterior_plus[m + fs.guard_symbols]));
    return out;
}

/// Genie baseline: LLR = 2 y / sigma_tot^2 with the true per-symbol total
/// variance taken from the realization.
inline LlrFrame detect_genie(const ChannelRealization& real, const FrameSpec& fs) {
    LlrFrame out;
    out.reserve(fs.data_symbols);
    for (int m : data_positions(fs)) {
        const size_t i = static_cast<size_t>(m + fs.guard_symbols);
        out.push_back(std::clamp(2.0 * real.y[i] / real.sigma2_tot[i], -kLlrMax, kLlrMax));
    }
    return out;
}

/// Constant-variance baseline: the assumed variance is a common scale factor
/// that does not change Viterbi decisions, so the LLR is the sample itself.
inline LlrFrame detect_const_var(const ChannelRealization& real, const FrameSpec& fs) {
    LlrFrame out;
    out.reserve(fs.data_symbols);
    for (int m : data_positions(fs)) out.push_back(real.y[m + fs.guard_symbols]);
    return out;
}

/// Erasure baseline on a two-state (good/bad) chain: a data symbol whose
/// posterior probability of the bad state exceeds 0.5 is erased (LLR 0);
/// otherwise LLR = 2 y / sigma_good^2. A posterior of exactly 0.5 counts as
/// good.
inline LlrFrame detect_erasure(const ChannelRealization& real, const MarkovChainModel& model,
                               const FrameSpec& fs) {
    const std::vector<TrellisSection> sections = make_sections(fs);
    if (real.y.size() != sections.size()) throw std::invalid_argument("detect: window mismatch");
    PosteriorFrame post = bcjr(model, sections, real.y);

    const double good_var = *std::min_element(model.state_variance.begin(), model.state_variance.end());
    std::vector<uint8_t> bad(model.size());
    for (size_t s = 0; s < model.size(); ++s) bad[s] = model.state_variance[s] > good_var;

    LlrFrame out;
    out.reserve(fs.data_symbols);
    for (int m : data_positions(fs)) {
        const size_t i = static_cast<size_t>(m + fs.guard_symbols);
        double p_bad = 0.0;
        for (size_t s = 0; s < model.size(); ++s)
            if (bad[s]) p_bad += post.joint(i, s);
        if (p_bad > 0.5)
            out.push_back(0.0);
        else
            out.push_back(std::clamp(2.0 * real.y[i] / good_var, -kLlrMax, kLlrMax));
    }
    return out;
}

} // namespace tsim
