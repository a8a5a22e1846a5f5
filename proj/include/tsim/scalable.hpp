#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "tsim/markov.hpp"

namespace tsim {

/// Variance model learned blindly from signal-free observations: P partitions
/// of the log-squared-magnitude axis, a linear-domain variance estimate per
/// partition, and a counted transition matrix. This module never sees
/// interferer-class parameters; it works on received samples only.
struct PartitionModel {
    int partitions = 0;
    std::vector<double> boundaries;     // P-1 increasing thresholds, log domain
    std::vector<double> state_variance; // strictly increasing, linear domain
    std::vector<double> transition;     // P x P column-stochastic, [to * P + from]
    size_t train_length = 0;
};

namespace detail {
inline double log_sq(double x) { return std::log(std::max(x * x, 1e-300)); }
} // namespace detail

/// 1-D Lloyd clustering of the logarithmically scaled squared magnitudes.
/// Centroids start at the P quantiles of the sorted data and iterate
/// (assign to nearest centroid, recompute as partition mean) until movement
/// falls below 1e-9 or 500 iterations. An empty partition is reseeded at the
/// sample with the largest distortion. Per-partition variances are means of
/// the *linear* squared magnitudes, which is the consistent estimator for a
/// zero-mean Gaussian; the log domain is used for the clustering geometry
/// only. Duplicate centroids collapse, reducing P with a warning.
inline PartitionModel lloyd_partition(const std::vector<double>& samples, int requested_p) {
    if (requested_p < 1) throw std::invalid_argument("lloyd: P must be >= 1");
    if (samples.size() < 100 * static_cast<size_t>(requested_p))
        throw std::invalid_argument("lloyd: need at least 100 samples per partition");

    const size_t n = samples.size();
    std::vector<double> logs(n), linear(n);
    for (size_t i = 0; i < n; ++i) {
        linear[i] = samples[i] * samples[i];
        logs[i] = detail::log_sq(samples[i]);
    }
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return logs[a] < logs[b]; });
    std::vector<double> sorted_log(n), sorted_lin(n);
    for (size_t i = 0; i < n; ++i) {
        sorted_log[i] = logs[order[i]];
        sorted_lin[i] = linear[order[i]];
    }
    std::vector<double> prefix_log(n + 1, 0.0), prefix_lin(n + 1, 0.0);
    for (size_t i = 0; i < n; ++i) {
        prefix_log[i + 1] = prefix_log[i] + sorted_log[i];
        prefix_lin[i + 1] = prefix_lin[i] + sorted_lin[i];
    }

    int p = requested_p;
    size_t distinct = 1;
    for (size_t i = 1; i < n; ++i) distinct += (sorted_log[i] != sorted_log[i - 1]);
    if (distinct < static_cast<size_t>(p)) {
        std::cerr << "lloyd: only " << distinct << " distinct samples, reducing P from " << p << "\n";
        p = static_cast<int>(distinct);
    }

    std::vector<double> centroid(p);
    for (int j = 0; j < p; ++j)
        centroid[j] = sorted_log[std::min(n - 1, static_cast<size_t>((j + 0.5) * n / p))];
    std::sort(centroid.begin(), centroid.end());

    std::vector<size_t> cut(p + 1); // partition j = sorted indices [cut[j], cut[j+1])
    for (int iter = 0; iter < 500; ++iter) {
        cut[0] = 0;
        cut[p] = n;
        for (int j = 1; j < p; ++j) {
            const double mid = 0.5 * (centroid[j - 1] + centroid[j]);
            cut[j] = std::lower_bound(sorted_log.begin(), sorted_log.end(), mid) - sorted_log.begin();
        }
        // Reseed empty partitions at the worst-represented sample.
        bool reseeded = false;
        for (int j = 0; j < p; ++j) {
            if (cut[j + 1] > cut[j]) continue;
            size_t worst = 0;
            double worst_d = -1.0;
            for (size_t i = 0; i < n; ++i) {
                double best = std::abs(sorted_log[i] - centroid[0]);
                for (int k = 1; k < p; ++k) best = std::min(best, std::abs(sorted_log[i] - centroid[k]));
                if (best > worst_d) {
                    worst_d = best;
                    worst = i;
                }
            }
            centroid[j] = sorted_log[worst];
            reseeded = true;
        }
        if (reseeded) {
            std::sort(centroid.begin(), centroid.end());
            continue;
        }
        double movement = 0.0;
        for (int j = 0; j < p; ++j) {
            const double next = (prefix_log[cut[j + 1]] - prefix_log[cut[j]]) / (cut[j + 1] - cut[j]);
            movement = std::max(movement, std::abs(next - centroid[j]));
            centroid[j] = next;
        }
        if (movement < 1e-9) break;
    }

    // Merge coinciding centroids.
    std::vector<double> merged;
    for (double c : centroid)
        if (merged.empty() || c > merged.back()) merged.push_back(c);
    if (merged.size() < centroid.size()) {
        std::cerr << "lloyd: merged " << centroid.size() - merged.size()
                  << " duplicate centroids, P reduced to " << merged.size() << "\n";
        centroid = merged;
        p = static_cast<int>(centroid.size());
    }

    PartitionModel pm;
    pm.partitions = p;
    pm.train_length = n;
    cut[0] = 0;
    cut[p] = n;
    for (int j = 1; j < p; ++j) {
        const double mid = 0.5 * (centroid[j - 1] + centroid[j]);
        pm.boundaries.push_back(mid);
        cut[j] = std::lower_bound(sorted_log.begin(), sorted_log.end(), mid) - sorted_log.begin();
    }
    for (int j = 0; j < p; ++j) {
        if (cut[j + 1] == cut[j])
            throw std::runtime_error("lloyd: empty partition after convergence");
        pm.state_variance.push_back((prefix_lin[cut[j + 1]] - prefix_lin[cut[j]]) /
                                    (cut[j + 1] - cut[j]));
    }
    for (int j = 1; j < p; ++j)
        if (pm.state_variance[j] <= pm.state_variance[j - 1])
            throw std::runtime_error("lloyd: partition variances not strictly increasing");
    return pm;
}

/// Partition index per sample (log-squared-magnitude domain).
inline std::vector<int> quantize(const std::vector<double>& samples, const PartitionModel& pm) {
    std::vector<int> out(samples.size());
    for (size_t i = 0; i < samples.size(); ++i) {
        const double l = detail::log_sq(samples[i]);
        out[i] = static_cast<int>(std::upper_bound(pm.boundaries.begin(), pm.boundaries.end(), l) -
                                  pm.boundaries.begin());
    }
    return out;
}

/// Transition probabilities by counting consecutive pairs, with add-one
/// smoothing so BCJR never sees a hard-zero transition.
inline std::vector<double> estimate_transitions(const std::vector<int>& sequence, int p) {
    if (sequence.size() < 2) throw std::invalid_argument("transitions: sequence too short");
    std::vector<double> count(static_cast<size_t>(p) * p, 1.0);
    for (size_t i = 1; i < sequence.size(); ++i) count[sequence[i] * p + sequence[i - 1]] += 1.0;
    for (int from = 0; from < p; ++from) {
        double sum = 0.0;
        for (int to = 0; to < p; ++to) sum += count[to * p + from];
        for (int to = 0; to < p; ++to) count[to * p + from] /= sum;
    }
    return count;
}

/// Lloyd partitioning plus counted transitions in one pass.
inline PartitionModel train_partition_model(const std::vector<double>& samples, int p) {
    PartitionModel pm = lloyd_partition(samples, p);
    pm.transition = estimate_transitions(quantize(samples, pm), pm.partitions);
    return pm;
}

/// Symbol-extended chain with 2P states [variance_j, +1] / [variance_j, -1]:
/// the P x P learned block replicated with a 1/2 symbol factor. The learned
/// variances already include the noise floor, so nothing is added here.
inline MarkovChainModel build_scalable_chain(const PartitionModel& pm) {
    if (pm.partitions < 1 || pm.transition.size() != static_cast<size_t>(pm.partitions) * pm.partitions)
        throw std::invalid_argument("scalable: partition model not trained");
    const int p = pm.partitions;
    MarkovChainModel model;
    for (int8_t sym : {int8_t{+1}, int8_t{-1}})
        for (int j = 0; j < p; ++j) {
            InterferenceState st;
            st.symbol = sym;
            model.states.push_back(std::move(st));
            model.state_variance.push_back(pm.state_variance[j]);
        }
    for (int from_sym = 0; from_sym < 2; ++from_sym)
        for (int to_sym = 0; to_sym < 2; ++to_sym)
            for (int from = 0; from < p; ++from)
                for (int to = 0; to < p; ++to)
                    model.edges.push_back({static_cast<uint32_t>(to_sym * p + to),
                                           static_cast<uint32_t>(from_sym * p + from),
                                           0.5 * pm.transition[to * p + from]});
    model.stationary = stationary_distribution(model.edges, model.size());
    return model;
}

/// Optional Baum-Welch refinement of the transition probabilities (and,
/// when requested, the state variances) on signal-free observations.
/// Iterates until the log-likelihood gain drops below 1e-6 or `max_iters`;
/// the log-likelihood must not decrease, otherwise this throws.
inline PartitionModel baum_welch_refine(const PartitionModel& pm,
                                        const std::vector<double>& observations, int max_iters,
                                        std::vector<double>* loglik_trace = nullptr,
                                        bool update_variances = false) {
    PartitionModel out = pm;
    if (loglik_trace) loglik_trace->clear();
    if (max_iters <= 0) return out;

    const int p = out.partitions;
    const size_t n = observations.size();
    if (n < 2) throw std::invalid_argument("baum_welch: observation sequence too short");

    double prev_ll = -std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < max_iters; ++iter) {
        // Scaled forward-backward over the P-state chain with zero-mean
        // Gaussian emissions.
        std::vector<double> emis(n * p);
        for (size_t t = 0; t < n; ++t)
            for (int j = 0; j < p; ++j) {
                const double v = std::max(out.state_variance[j], 1e-300);
                emis[t * p + j] = std::exp(-0.5 * observations[t] * observations[t] / v) /
                                  std::sqrt(6.283185307179586476925286766559 * v);
            }

        std::vector<double> init = stationary_distribution(
            [&] {
                std::vector<MarkovEdge> e;
                for (int to = 0; to < p; ++to)
                    for (int from = 0; from < p; ++from)
                        e.push_back({static_cast<uint32_t>(to), static_cast<uint32_t>(from),
                                     out.transition[to * p + from]});
                return e;
            }(),
            p);

        std::vector<double> alpha(n * p), scale(n, 0.0);
        for (int j = 0; j < p; ++j) {
            alpha[j] = init[j] * emis[j];
            scale[0] += alpha[j];
        }
        for (int j = 0; j < p; ++j) alpha[j] /= scale[0];
        for (size_t t = 1; t < n; ++t) {
            for (int to = 0; to < p; ++to) {
                double a = 0.0;
                for (int from = 0; from < p; ++from)
                    a += out.transition[to * p + from] * alpha[(t - 1) * p + from];
                a *= emis[t * p + to];
                alpha[t * p + to] = a;
                scale[t] += a;
            }
            if (!(scale[t] > 0.0)) throw std::runtime_error("baum_welch: degenerate forward step");
            for (int to = 0; to < p; ++to) alpha[t * p + to] /= scale[t];
        }

        double ll = 0.0;
        for (size_t t = 0; t < n; ++t) ll += std::log(scale[t]);
        if (loglik_trace) loglik_trace->push_back(ll);
        if (iter > 0 && ll + 1e-9 * std::abs(ll) < prev_ll)
            throw std::runtime_error("baum_welch: log-likelihood decreased");
        const double gain = ll - prev_ll;

        std::vector<double> beta(n * p);
        for (int j = 0; j < p; ++j) beta[(n - 1) * p + j] = 1.0;
        for (size_t t = n - 1; t-- > 0;) {
            for (int from = 0; from < p; ++from) {
                double b = 0.0;
                for (int to = 0; to < p; ++to)
                    b += out.transition[to * p + from] * emis[(t + 1) * p + to] *
                         beta[(t + 1) * p + to];
                beta[t * p + from] = b / scale[t + 1];
            }
        }

        std::vector<double> xi(static_cast<size_t>(p) * p, 0.0), gamma_sum(p, 0.0);
        std::vector<double> var_num(p, 0.0), var_den(p, 0.0);
        for (size_t t = 0; t + 1 < n; ++t) {
            for (int from = 0; from < p; ++from) {
                const double g = alpha[t * p + from] * beta[t * p + from];
                gamma_sum[from] += g;
                if (update_variances) {
                    var_num[from] += g * observations[t] * observations[t];
                    var_den[from] += g;
                }
                for (int to = 0; to < p; ++to)
                    xi[to * p + from] += alpha[t * p + from] * out.transition[to * p + from] *
                                         emis[(t + 1) * p + to] * beta[(t + 1) * p + to] /
                                         scale[t + 1];
            }
        }
        for (int from = 0; from < p; ++from) {
            if (gamma_sum[from] <= 0.0) continue;
            for (int to = 0; to < p; ++to) out.transition[to * p + from] = xi[to * p + from] / gamma_sum[from];
        }
        if (update_variances) {
            for (int j = 0; j < p; ++j) {
                const double g = alpha[(n - 1) * p + j] * beta[(n - 1) * p + j];
                var_num[j] += g * observations[n - 1] * observations[n - 1];
                var_den[j] += g;
                if (var_den[j] > 0.0) out.state_variance[j] = var_num[j] / var_den[j];
            }
        }

        prev_ll = ll;
        if (iter > 0 && gain < 1e-6) break;
    }
    return out;
}

} // namespace tsim
