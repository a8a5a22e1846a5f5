#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <mutex>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "tsim/detector.hpp"
#include "tsim/fec.hpp"
#include "tsim/interference.hpp"
#include "tsim/markov.hpp"
#include "tsim/perf.hpp"
#include "tsim/scalable.hpp"
#include "tsim/telegram.hpp"

namespace tsim {

enum class DetectorKind { Genie, Erasure, ConstVar, MapFull, MapReduced, MapScalable };

inline const char* detector_name(DetectorKind k) {
    switch (k) {
        case DetectorKind::Genie: return "genie";
        case DetectorKind::Erasure: return "erasure";
        case DetectorKind::ConstVar: return "const-var";
        case DetectorKind::MapFull: return "map-full";
        case DetectorKind::MapReduced: return "map-reduced";
        case DetectorKind::MapScalable: return "map-scalable";
    }
    return "?";
}

inline DetectorKind parse_detector(const std::string& name) {
    for (DetectorKind k : {DetectorKind::Genie, DetectorKind::Erasure, DetectorKind::ConstVar,
                           DetectorKind::MapFull, DetectorKind::MapReduced, DetectorKind::MapScalable})
        if (name == detector_name(k)) return k;
    throw std::invalid_argument("unknown detector: " + name);
}

struct ScalableParams {
    int partitions = 10;
    size_t train_length = 100000;
    int baum_welch_iters = 0; // 0 = counting only
};

/// Ring-deployment scenario: interfering nodes scattered uniformly over a
/// ring around the receiver, per-node variance from a power-law path loss,
/// node positions resampled per trial.
struct RingParams {
    double inner_radius = 100.0;
    double outer_radius = 1000.0;
    double path_loss_exp = 3.5;
    double ref_variance = 2.0; // variance of a node at the outer radius
    int num_nodes = 50;
    std::vector<int> lengths = {10, 6, 3}; // class skeleton L_I values
    double load = 0.1;                     // G per class
};

struct ScenarioConfig {
    CodeSpec code;
    FrameSpec frame;
    int payload_bits = 162;
    std::vector<InterfererClass> classes;
    std::vector<double> esn0_db;
    std::vector<DetectorKind> detectors;
    ScalableParams scalable;
    double cesm_b = 1.0;
    uint64_t trials = 20000;
    uint64_t seed = 1;
    double variance_error_std = 0.0;
    std::optional<RingParams> ring;
    int threads = 0; // 0 = hardware concurrency

    void validate() const {
        code.validate();
        frame.validate();
        if (payload_bits < 1) throw std::invalid_argument("config: payload_bits must be >= 1");
        if (trials < 1) throw std::invalid_argument("config: trials must be >= 1");
        if (esn0_db.empty()) throw std::invalid_argument("config: empty Es/N0 grid");
        if (detectors.empty()) throw std::invalid_argument("config: no detectors selected");
        if (!ring && classes.empty()) throw std::invalid_argument("config: no interferer classes");
        for (DetectorKind k : detectors)
            if (ring && (k == DetectorKind::MapFull || k == DetectorKind::MapReduced))
                throw std::invalid_argument(
                    "config: full/reduced MAP assume fixed per-class variances and do not "
                    "support the ring scenario");
        const size_t n_tx = coded_length(code, payload_bits);
        frame.num_subpackets(n_tx); // throws unless n is a multiple of L_S
    }
};

struct PerPoint {
    std::string detector;
    double esn0_db = 0.0;
    uint64_t errors = 0;
    uint64_t trials = 0;
    double per = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    double seconds = 0.0;
};

/// 95% Wilson score interval for a binomial proportion.
inline std::pair<double, double> wilson_interval(uint64_t errors, uint64_t trials) {
    const double z = 1.959963984540054;
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(errors) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

/// Sample one ring deployment: node distances uniform over the ring area,
/// per-node variance ref_variance * (d / outer)^{-path_loss_exp}, each node
/// assigned to a uniformly random class from the skeleton.
inline std::vector<InterfererClass> generate_ring_scenario(const RingParams& ring, Rng& rng) {
    if (ring.inner_radius <= 0.0 || ring.outer_radius < ring.inner_radius)
        throw std::invalid_argument("ring: invalid radii");
    if (ring.lengths.empty() || ring.num_nodes < 1)
        throw std::invalid_argument("ring: empty skeleton");
    std::vector<InterfererClass> classes;
    for (int l : ring.lengths) {
        InterfererClass c = InterfererClass::from_load(l, ring.load, ring.ref_variance);
        classes.push_back(std::move(c));
    }
    const double in2 = ring.inner_radius * ring.inner_radius;
    const double out2 = ring.outer_radius * ring.outer_radius;
    for (int node = 0; node < ring.num_nodes; ++node) {
        const double d = std::sqrt(in2 + rng.uniform() * (out2 - in2));
        const double var = ring.ref_variance * std::pow(d / ring.outer_radius, -ring.path_loss_exp);
        classes[rng.below(classes.size())].node_variances.push_back(var);
    }
    return classes;
}

namespace detail {

/// Signal-free observation stream (noise + interference, x = 0) used to
/// train the scalable and erasure detectors. Ring deployments are resampled
/// every sub-packet window so the stream matches the per-trial statistics.
inline std::vector<double> signal_free_samples(const ScenarioConfig& cfg, double sigma2_noise,
                                               size_t length, Rng& rng) {
    std::vector<double> out;
    out.reserve(length);
    const double noise_std = std::sqrt(sigma2_noise);
    const size_t chunk = cfg.ring ? static_cast<size_t>(cfg.frame.window()) : length;
    while (out.size() < length) {
        const std::vector<InterfererClass> classes =
            cfg.ring ? generate_ring_scenario(*cfg.ring, rng) : cfg.classes;
        const size_t todo = std::min(chunk, length - out.size());
        InterferenceTrace tr = sample_interference(classes, todo, rng);
        for (size_t i = 0; i < todo; ++i)
            out.push_back(noise_std * rng.gaussian() + std::sqrt(tr.variance[i]) * rng.gaussian());
    }
    return out;
}

struct PointModels {
    std::optional<MarkovChainModel> full;
    std::optional<MarkovChainModel> reduced;
    std::optional<MarkovChainModel> scalable_chain;
    std::optional<MarkovChainModel> erasure_chain;
};

inline PointModels build_point_models(const ScenarioConfig& cfg, double sigma2_noise,
                                      size_t point_index) {
    PointModels m;
    bool want_scalable = false, want_erasure = false;
    for (DetectorKind k : cfg.detectors) {
        if (k == DetectorKind::MapFull) m.full = build_full_chain(cfg.classes, sigma2_noise);
        if (k == DetectorKind::MapReduced) m.reduced = build_reduced_chain(cfg.classes, sigma2_noise);
        if (k == DetectorKind::MapScalable) want_scalable = true;
        if (k == DetectorKind::Erasure) want_erasure = true;
    }
    if (want_scalable || want_erasure) {
        Rng rng(derive_seed(cfg.seed, StreamTag::TrainingObservation, point_index));
        const std::vector<double> samples =
            signal_free_samples(cfg, sigma2_noise, cfg.scalable.train_length, rng);
        if (want_scalable) {
            PartitionModel pm = train_partition_model(samples, cfg.scalable.partitions);
            if (cfg.scalable.baum_welch_iters > 0)
                pm = baum_welch_refine(pm, samples, cfg.scalable.baum_welch_iters);
            m.scalable_chain = build_scalable_chain(pm);
        }
        if (want_erasure) {
            PartitionModel pm = train_partition_model(samples, 2);
            pm.state_variance[0] = sigma2_noise; // good state: noise only
            m.erasure_chain = build_scalable_chain(pm);
        }
    }
    return m;
}

} // namespace detail

/// Monte Carlo packet-error experiment. Per trial: encode, interleave,
/// split, synthesize each sub-packet once, run every selected detector on
/// the same realization, reassemble, deinterleave, Viterbi-decode, and count
/// a packet error on any payload bit mismatch. All randomness is derived
/// from (seed, stream tag, trial index), so results are independent of
/// threading and batch splits.
///
/// `mismatch_fraction` > 0 perturbs the per-class variance assumed by the
/// full/reduced MAP detectors with a Gaussian of that relative STD (floored
/// at 10% of the true value); the channel always uses the true values.
inline std::vector<PerPoint> run_per_experiment(const ScenarioConfig& cfg,
                                                double mismatch_fraction = 0.0) {
    cfg.validate();
    if (mismatch_fraction < 0.0) throw std::invalid_argument("mismatch fraction must be >= 0");

    const size_t n_tx = coded_length(cfg.code, cfg.payload_bits);
    const int n_sub = cfg.frame.num_subpackets(n_tx);
    const Interleaver il = Interleaver::make(cfg.seed, n_tx);
    const size_t n_det = cfg.detectors.size();

    unsigned n_threads = cfg.threads > 0 ? cfg.threads : std::thread::hardware_concurrency();
    if (n_threads == 0) n_threads = 1;
    n_threads = std::min<unsigned>(n_threads, 64);

    std::vector<PerPoint> results;
    for (size_t pt = 0; pt < cfg.esn0_db.size(); ++pt) {
        const double sigma2_noise = std::pow(10.0, -cfg.esn0_db[pt] / 10.0);
        const detail::PointModels models = detail::build_point_models(cfg, sigma2_noise, pt);

        std::vector<std::atomic<uint64_t>> errors(n_det);
        std::vector<std::atomic<uint64_t>> nanos(n_det);
        for (auto& e : errors) e = 0;
        for (auto& t : nanos) t = 0;
        std::atomic<uint64_t> next_trial{0};

        auto worker = [&]() {
            std::vector<LlrFrame> frames(n_sub);
            for (;;) {
                const uint64_t trial = next_trial.fetch_add(1);
                if (trial >= cfg.trials) return;

                const std::vector<InterfererClass> classes =
                    cfg.ring ? [&] {
                        Rng rng(derive_seed(cfg.seed, StreamTag::RingDeployment, trial));
                        return generate_ring_scenario(*cfg.ring, rng);
                    }()
                             : cfg.classes;

                // Assumed variances for mismatched detection, one draw per class.
                std::vector<double> full_var, reduced_var;
                if (mismatch_fraction > 0.0 && (models.full || models.reduced)) {
                    Rng rng(derive_seed(cfg.seed, StreamTag::VarianceMismatch, trial));
                    std::vector<InterfererClass> assumed = classes;
                    for (InterfererClass& c : assumed) {
                        const double perturbed =
                            c.variance * (1.0 + mismatch_fraction * rng.gaussian());
                        c.variance = std::max(0.1 * c.variance, perturbed);
                    }
                    if (models.full)
                        full_var = state_variances(models.full->states, assumed, sigma2_noise);
                    if (models.reduced)
                        reduced_var = state_variances(models.reduced->states, assumed, sigma2_noise);
                }

                Rng info_rng(derive_seed(cfg.seed, StreamTag::InfoBits, trial));
                InfoBits info(cfg.payload_bits);
                for (auto& b : info) b = static_cast<uint8_t>(info_rng.next_u64() & 1u);
                const Codeword tx = interleave(encode(info, cfg.code), il);
                const std::vector<SubPacket> subs = split(tx, cfg.frame);

                std::vector<ChannelRealization> reals(n_sub);
                for (int i = 0; i < n_sub; ++i) {
                    Rng ch_rng(derive_seed(cfg.seed, StreamTag::Channel, trial, i));
                    reals[i] = synthesize(subs[i], cfg.frame, classes, sigma2_noise, ch_rng);
                }

                for (size_t d = 0; d < n_det; ++d) {
                    const auto t0 = std::chrono::steady_clock::now();
                    for (int i = 0; i < n_sub; ++i) {
                        switch (cfg.detectors[d]) {
                            case DetectorKind::Genie:
                                frames[i] = detect_genie(reals[i], cfg.frame);
                                break;
                            case DetectorKind::ConstVar:
                                frames[i] = detect_const_var(reals[i], cfg.frame);
                                break;
                            case DetectorKind::Erasure:
                                frames[i] = detect_erasure(reals[i], *models.erasure_chain, cfg.frame);
                                break;
                            case DetectorKind::MapFull:
                                frames[i] = detect_map(reals[i], *models.full, cfg.frame,
                                                       std::span<const double>(full_var));
                                break;
                            case DetectorKind::MapReduced:
                                frames[i] = detect_map(reals[i], *models.reduced, cfg.frame,
                                                       std::span<const double>(reduced_var));
                                break;
                            case DetectorKind::MapScalable:
                                frames[i] = detect_map(reals[i], *models.scalable_chain, cfg.frame);
                                break;
                        }
                    }
                    const LlrFrame llrs =
                        depuncture(deinterleave(reassemble(frames, cfg.frame), il), cfg.code,
                                   cfg.payload_bits);
                    const InfoBits decoded = viterbi_decode(llrs, cfg.code);
                    if (decoded != info) errors[d].fetch_add(1);
                    nanos[d].fetch_add(std::chrono::duration_cast<std::chrono::nanoseconds>(
                                           std::chrono::steady_clock::now() - t0)
                                           .count());
                }
            }
        };

        if (n_threads <= 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
            for (std::thread& t : pool) t.join();
        }

        for (size_t d = 0; d < n_det; ++d) {
            PerPoint row;
            row.detector = detector_name(cfg.detectors[d]);
            row.esn0_db = cfg.esn0_db[pt];
            row.errors = errors[d].load();
            row.trials = cfg.trials;
            row.per = static_cast<double>(row.errors) / cfg.trials;
            std::tie(row.ci_lo, row.ci_hi) = wilson_interval(row.errors, cfg.trials);
            row.seconds = static_cast<double>(nanos[d].load()) * 1e-9;
            results.push_back(std::move(row));
        }
    }
    return results;
}

inline std::vector<PerPoint> run_variance_mismatch(const ScenarioConfig& cfg, double fraction) {
    return run_per_experiment(cfg, fraction);
}

/// Semi-analytic PER: average of Psi(CESM effective SINR) over sampled
/// interference realizations of a whole telegram. Shares the interference
/// statistics with the Monte Carlo pipeline but needs no noise realizations,
/// detection, or decoding.
inline std::vector<PerPoint> run_approx(const ScenarioConfig& cfg, const PsiTable& psi,
                                        uint64_t realizations) {
    cfg.validate();
    const size_t n_tx = coded_length(cfg.code, cfg.payload_bits);
    const int n_sub = cfg.frame.num_subpackets(n_tx);
    const Interleaver il = Interleaver::make(cfg.seed, n_tx);
    const std::vector<int> dpos = data_positions(cfg.frame);

    std::vector<PerPoint> results;
    for (size_t pt = 0; pt < cfg.esn0_db.size(); ++pt) {
        const double sigma2_noise = std::pow(10.0, -cfg.esn0_db[pt] / 10.0);
        const auto t0 = std::chrono::steady_clock::now();
        double acc = 0.0;
        for (uint64_t r = 0; r < realizations; ++r) {
            const std::vector<InterfererClass> classes = cfg.ring ? [&] {
                Rng rng(derive_seed(cfg.seed, StreamTag::RingDeployment, r));
                return generate_ring_scenario(*cfg.ring, rng);
            }()
                                                                  : cfg.classes;
            std::vector<std::vector<double>> traces(n_sub);
            for (int i = 0; i < n_sub; ++i) {
                Rng rng(derive_seed(cfg.seed, StreamTag::Channel, r, i));
                InterferenceTrace tr =
                    sample_interference(classes, cfg.frame.window(), rng);
                traces[i].reserve(dpos.size());
                for (int m : dpos)
                    traces[i].push_back(sigma2_noise + tr.variance[m + cfg.frame.guard_symbols]);
            }
            acc += approx_per(sinr_trace(traces, cfg.frame, il), psi, cfg.cesm_b);
        }
        PerPoint row;
        row.detector = "approx";
        row.esn0_db = cfg.esn0_db[pt];
        row.errors = 0;
        row.trials = realizations;
        row.per = acc / realizations;
        row.ci_lo = row.ci_hi = row.per;
        row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        results.push_back(std::move(row));
    }
    return results;
}

/// CSV rows in the fixed column order; each row is flushed as written so an
/// interrupted run leaves a readable partial file.
inline void write_csv_header(std::ostream& os) {
    os << "detector,esn0_db,per,ci_lo,ci_hi,trials,seconds\n";
    os.flush();
}

inline void write_csv_row(std::ostream& os, const PerPoint& row) {
    std::ostringstream ss;
    ss.precision(9);
    ss << row.detector << ',' << row.esn0_db << ',' << row.per << ',' << row.ci_lo << ','
       << row.ci_hi << ',' << row.trials << ',' << row.seconds << '\n';
    os << ss.str();
    os.flush();
}

} // namespace tsim
