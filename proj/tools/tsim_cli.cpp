// tsim command-line front end: Monte Carlo PER sweeps, variance-mismatch
// sweeps, AWGN curve calibration, semi-analytic PER approximation, chain
// state counting, complexity tables, and scalable-model training.
//
// Exit codes: 0 ok, 1 configuration error, 2 runtime error.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tsim/serialize.hpp"
#include "tsim/tsim.hpp"

namespace {

volatile std::sig_atomic_t g_interrupted = 0;
void on_interrupt(int) { g_interrupted = 1; }

struct CommonOpts {
    std::string config_path;
    std::vector<double> esn0_db;
    std::optional<uint64_t> trials;
    std::optional<uint64_t> seed;
    std::vector<std::string> detectors;
    std::string out_path;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool config_required = true) {
    auto* c = cmd->add_option("-c,--config", o.config_path, "scenario config JSON");
    if (config_required) c->required();
    cmd->add_option("--esn0-db", o.esn0_db, "override the Es/N0 grid (dB)");
    cmd->add_option("--trials", o.trials, "override the trial count");
    cmd->add_option("--seed", o.seed, "override the master seed");
    cmd->add_option("--detector", o.detectors, "override the detector list");
    cmd->add_option("-o,--out", o.out_path, "output CSV path (default stdout)");
}

tsim::ScenarioConfig load_with_overrides(const CommonOpts& o) {
    tsim::ScenarioConfig cfg = tsim::load_config(o.config_path);
    if (!o.esn0_db.empty()) cfg.esn0_db = o.esn0_db;
    if (o.trials) cfg.trials = *o.trials;
    if (o.seed) cfg.seed = *o.seed;
    if (!o.detectors.empty()) {
        cfg.detectors.clear();
        for (const std::string& d : o.detectors) cfg.detectors.push_back(tsim::parse_detector(d));
    }
    return cfg;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::invalid_argument("cannot open output file " + path);
    return f;
}

// Runs point-by-point so an interrupt still leaves the finished rows in the
// output file.
int run_sweep(const tsim::ScenarioConfig& cfg, double mismatch_fraction, std::ostream& os) {
    tsim::write_csv_header(os);
    tsim::ScenarioConfig point_cfg = cfg;
    for (double esn0 : cfg.esn0_db) {
        if (g_interrupted) {
            std::cerr << "interrupted, partial results written\n";
            return 2;
        }
        point_cfg.esn0_db = {esn0};
        for (const tsim::PerPoint& row : tsim::run_per_experiment(point_cfg, mismatch_fraction))
            tsim::write_csv_row(os, row);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"telegram-splitting link simulator with bursty-interference MAP detection"};
    app.require_subcommand(1);
    std::signal(SIGINT, on_interrupt);

    CommonOpts sim_opts;
    auto* sim = app.add_subcommand("simulate", "Monte Carlo PER sweep over the configured detectors");
    add_common(sim, sim_opts);

    CommonOpts mis_opts;
    double mismatch_fraction = 0.2;
    auto* mis = app.add_subcommand("mismatch", "PER sweep with mismatched interference variance");
    add_common(mis, mis_opts);
    mis->add_option("--fraction", mismatch_fraction, "relative STD of the variance error");

    CommonOpts psi_opts;
    double psi_lo = -2.0, psi_hi = 12.0, psi_step = 0.25;
    uint64_t psi_trials = 3000;
    auto* psi = app.add_subcommand("calibrate-psi", "AWGN PER curve of the configured code");
    add_common(psi, psi_opts);
    psi->add_option("--from-db", psi_lo, "grid start (dB)");
    psi->add_option("--to-db", psi_hi, "grid end (dB)");
    psi->add_option("--step-db", psi_step, "grid step (dB)");
    psi->add_option("--trials-per-point", psi_trials, "Monte Carlo trials per grid point");

    CommonOpts approx_opts;
    std::string psi_path;
    uint64_t realizations = 10000;
    auto* approx = app.add_subcommand("approx", "semi-analytic PER via the effective-SINR model");
    add_common(approx, approx_opts);
    approx->add_option("--psi", psi_path, "calibrated AWGN curve CSV")->required();
    approx->add_option("--realizations", realizations, "interference realizations to average");

    int states_li = 6;
    auto* states = app.add_subcommand("states", "chain state counts for one interferer length");
    states->add_option("--li", states_li, "interferer length L_I")->required();

    int complexity_example = 0;
    double cx_states = 0, cx_window = 36;
    auto* cx = app.add_subcommand("complexity", "BCJR multiplication counts");
    cx->add_option("--example", complexity_example, "reproduce a reference example (1 or 2)");
    cx->add_option("--states", cx_states, "number of chain states");
    cx->add_option("--window", cx_window, "window length L_tot + 2 L_add");

    CommonOpts train_opts;
    double train_esn0 = 6.0;
    auto* train = app.add_subcommand("train-scalable", "train and persist a partition model");
    add_common(train, train_opts);
    train->add_option("--at-esn0-db", train_esn0, "operating point for the training stream");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) {
            tsim::ScenarioConfig cfg = load_with_overrides(sim_opts);
            cfg.validate();
            if (!sim_opts.out_path.empty()) {
                std::ofstream f = open_out(sim_opts.out_path);
                return run_sweep(cfg, 0.0, f);
            }
            return run_sweep(cfg, 0.0, std::cout);
        }
        if (mis->parsed()) {
            tsim::ScenarioConfig cfg = load_with_overrides(mis_opts);
            cfg.validate();
            if (mismatch_fraction < 0) throw std::invalid_argument("fraction must be >= 0");
            if (!mis_opts.out_path.empty()) {
                std::ofstream f = open_out(mis_opts.out_path);
                return run_sweep(cfg, mismatch_fraction, f);
            }
            return run_sweep(cfg, mismatch_fraction, std::cout);
        }
        if (psi->parsed()) {
            tsim::ScenarioConfig cfg = load_with_overrides(psi_opts);
            std::vector<double> grid;
            for (double x = psi_lo; x <= psi_hi + 1e-9; x += psi_step) grid.push_back(x);
            tsim::PsiTable table =
                tsim::calibrate_psi(cfg.code, cfg.payload_bits, grid, psi_trials, cfg.seed);
            if (psi_opts.out_path.empty()) throw std::invalid_argument("calibrate-psi needs --out");
            table.save_csv(psi_opts.out_path);
            std::cerr << "wrote " << psi_opts.out_path << " (" << grid.size() << " points)\n";
            return 0;
        }
        if (approx->parsed()) {
            tsim::ScenarioConfig cfg = load_with_overrides(approx_opts);
            cfg.validate();
            tsim::PsiTable table = tsim::PsiTable::load_csv(psi_path);
            std::ostream* os = &std::cout;
            std::ofstream f;
            if (!approx_opts.out_path.empty()) {
                f = open_out(approx_opts.out_path);
                os = &f;
            }
            tsim::write_csv_header(*os);
            for (const tsim::PerPoint& row : tsim::run_approx(cfg, table, realizations))
                tsim::write_csv_row(*os, row);
            return 0;
        }
        if (states->parsed()) {
            std::printf("sorted states (2^L_I):      %llu\n",
                        static_cast<unsigned long long>(1ull << states_li));
            std::printf("unsorted states:            %llu\n",
                        static_cast<unsigned long long>(tsim::count_unsorted_states(states_li)));
            return 0;
        }
        if (cx->parsed()) {
            auto print_row = [&](const char* name, double s, double window) {
                const tsim::ComplexityEstimate est = tsim::complexity_estimate(s, window);
                std::printf("%-14s states: %10.0f  multiplications: %.3g (exact %.4g)\n", name, s,
                            est.asymptotic, est.exact);
            };
            if (complexity_example == 1 || complexity_example == 2) {
                const int li = complexity_example == 1 ? 5 : 10;
                const int p = complexity_example == 1 ? 3 : 5;
                print_row("full MAP", tsim::full_chain_states({li, li}), cx_window);
                print_row("reduced MAP", tsim::reduced_chain_states({li, li}), cx_window);
                print_row("scalable MAP", tsim::scalable_chain_states(p), cx_window);
            } else if (cx_states >= 1) {
                print_row("custom", cx_states, cx_window);
            } else {
                throw std::invalid_argument("complexity: give --example 1|2 or --states");
            }
            return 0;
        }
        if (train->parsed()) {
            tsim::ScenarioConfig cfg = load_with_overrides(train_opts);
            if (train_opts.out_path.empty()) throw std::invalid_argument("train-scalable needs --out");
            const double sigma2 = std::pow(10.0, -train_esn0 / 10.0);
            tsim::Rng rng(tsim::derive_seed(cfg.seed, tsim::StreamTag::TrainingObservation, 0));
            const std::vector<double> samples =
                tsim::detail::signal_free_samples(cfg, sigma2, cfg.scalable.train_length, rng);
            tsim::PartitionModel pm =
                tsim::train_partition_model(samples, cfg.scalable.partitions);
            if (cfg.scalable.baum_welch_iters > 0)
                pm = tsim::baum_welch_refine(pm, samples, cfg.scalable.baum_welch_iters);
            std::ofstream f = open_out(train_opts.out_path);
            f << tsim::to_json(pm).dump(2) << '\n';
            std::cerr << "wrote " << train_opts.out_path << " (P = " << pm.partitions << ")\n";
            return 0;
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
