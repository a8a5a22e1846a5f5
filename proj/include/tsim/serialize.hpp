#pragma once

#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "tsim/harness.hpp"
#include "tsim/markov.hpp"
#include "tsim/scalable.hpp"

namespace tsim {

using nlohmann::json;

inline json to_json(const CodeSpec& code) {
    json j;
    j["memory"] = code.memory;
    json gens = json::array();
    char buf[16];
    for (unsigned g : code.generators) {
        std::snprintf(buf, sizeof buf, "%o", g);
        gens.push_back(std::string(buf));
    }
    j["generators_octal"] = gens;
    j["puncture"] = code.puncture;
    return j;
}

inline CodeSpec code_from_json(const json& j) {
    CodeSpec code;
    if (j.contains("memory")) code.memory = j.at("memory").get<int>();
    if (j.contains("generators_octal")) {
        code.generators.clear();
        for (const auto& g : j.at("generators_octal"))
            code.generators.push_back(
                static_cast<unsigned>(std::stoul(g.get<std::string>(), nullptr, 8)));
    }
    if (j.contains("puncture")) code.puncture = j.at("puncture").get<std::vector<uint8_t>>();
    code.validate();
    return code;
}

inline json to_json(const FrameSpec& fs) {
    json j;
    j["data_symbols"] = fs.data_symbols;
    j["guard_symbols"] = fs.guard_symbols;
    j["training"] = std::vector<int>(fs.training.begin(), fs.training.end());
    return j;
}

inline FrameSpec frame_from_json(const json& j) {
    FrameSpec fs;
    if (j.contains("data_symbols")) fs.data_symbols = j.at("data_symbols").get<int>();
    if (j.contains("guard_symbols")) fs.guard_symbols = j.at("guard_symbols").get<int>();
    if (j.contains("training")) {
        fs.training.clear();
        for (int v : j.at("training").get<std::vector<int>>())
            fs.training.push_back(static_cast<int8_t>(v));
    }
    fs.validate();
    return fs;
}

inline json to_json(const InterfererClass& c) {
    return json{{"length", c.length}, {"variance", c.variance}, {"load", c.load}};
}

inline InterfererClass class_from_json(const json& j) {
    return InterfererClass::from_load(j.at("length").get<int>(), j.at("load").get<double>(),
                                      j.at("variance").get<double>());
}

inline json to_json(const ScenarioConfig& cfg) {
    json j;
    j["code"] = to_json(cfg.code);
    j["frame"] = to_json(cfg.frame);
    j["payload_bits"] = cfg.payload_bits;
    json classes = json::array();
    for (const InterfererClass& c : cfg.classes) classes.push_back(to_json(c));
    j["classes"] = classes;
    j["esn0_db"] = cfg.esn0_db;
    json dets = json::array();
    for (DetectorKind k : cfg.detectors) dets.push_back(detector_name(k));
    j["detectors"] = dets;
    j["scalable"] = {{"partitions", cfg.scalable.partitions},
                     {"train_length", cfg.scalable.train_length},
                     {"baum_welch_iters", cfg.scalable.baum_welch_iters}};
    j["cesm_b"] = cfg.cesm_b;
    j["trials"] = cfg.trials;
    j["seed"] = cfg.seed;
    j["variance_error_std"] = cfg.variance_error_std;
    j["threads"] = cfg.threads;
    if (cfg.ring) {
        j["ring"] = {{"inner_radius", cfg.ring->inner_radius},
                     {"outer_radius", cfg.ring->outer_radius},
                     {"path_loss_exp", cfg.ring->path_loss_exp},
                     {"ref_variance", cfg.ring->ref_variance},
                     {"num_nodes", cfg.ring->num_nodes},
                     {"lengths", cfg.ring->lengths},
                     {"load", cfg.ring->load}};
    }
    return j;
}

inline ScenarioConfig config_from_json(const json& j) {
    ScenarioConfig cfg;
    if (j.contains("code")) cfg.code = code_from_json(j.at("code"));
    if (j.contains("frame")) cfg.frame = frame_from_json(j.at("frame"));
    if (j.contains("payload_bits")) cfg.payload_bits = j.at("payload_bits").get<int>();
    if (j.contains("classes")) {
        cfg.classes.clear();
        for (const auto& c : j.at("classes")) cfg.classes.push_back(class_from_json(c));
    }
    if (j.contains("esn0_db")) cfg.esn0_db = j.at("esn0_db").get<std::vector<double>>();
    if (j.contains("detectors")) {
        cfg.detectors.clear();
        for (const auto& d : j.at("detectors")) cfg.detectors.push_back(parse_detector(d));
    }
    if (j.contains("scalable")) {
        const json& s = j.at("scalable");
        if (s.contains("partitions")) cfg.scalable.partitions = s.at("partitions").get<int>();
        if (s.contains("train_length")) cfg.scalable.train_length = s.at("train_length").get<size_t>();
        if (s.contains("baum_welch_iters"))
            cfg.scalable.baum_welch_iters = s.at("baum_welch_iters").get<int>();
    }
    if (j.contains("cesm_b")) cfg.cesm_b = j.at("cesm_b").get<double>();
    if (j.contains("trials")) cfg.trials = j.at("trials").get<uint64_t>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<uint64_t>();
    if (j.contains("variance_error_std"))
        cfg.variance_error_std = j.at("variance_error_std").get<double>();
    if (j.contains("threads")) cfg.threads = j.at("threads").get<int>();
    if (j.contains("ring")) {
        const json& r = j.at("ring");
        RingParams ring;
        if (r.contains("inner_radius")) ring.inner_radius = r.at("inner_radius").get<double>();
        if (r.contains("outer_radius")) ring.outer_radius = r.at("outer_radius").get<double>();
        if (r.contains("path_loss_exp")) ring.path_loss_exp = r.at("path_loss_exp").get<double>();
        if (r.contains("ref_variance")) ring.ref_variance = r.at("ref_variance").get<double>();
        if (r.contains("num_nodes")) ring.num_nodes = r.at("num_nodes").get<int>();
        if (r.contains("lengths")) ring.lengths = r.at("lengths").get<std::vector<int>>();
        if (r.contains("load")) ring.load = r.at("load").get<double>();
        cfg.ring = ring;
    }
    return cfg;
}

inline ScenarioConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("config: cannot open " + path);
    json j;
    try {
        f >> j;
        return config_from_json(j);
    } catch (const json::exception& e) {
        throw std::invalid_argument("config: " + std::string(e.what()));
    }
}

inline json to_json(const PartitionModel& pm) {
    return json{{"partitions", pm.partitions},
                {"boundaries", pm.boundaries},
                {"state_variance", pm.state_variance},
                {"transition", pm.transition},
                {"train_length", pm.train_length}};
}

inline PartitionModel partition_from_json(const json& j) {
    PartitionModel pm;
    pm.partitions = j.at("partitions").get<int>();
    pm.boundaries = j.at("boundaries").get<std::vector<double>>();
    pm.state_variance = j.at("state_variance").get<std::vector<double>>();
    pm.transition = j.at("transition").get<std::vector<double>>();
    pm.train_length = j.at("train_length").get<size_t>();
    return pm;
}

/// Debug dump of a chain: states as counter arrays plus symbol, transition
/// matrix dense row-major.
inline json to_json(const MarkovChainModel& model) {
    json states = json::array();
    for (const InterferenceState& s : model.states) {
        json st;
        st["counters"] = s.counters;
        st["symbol"] = static_cast<int>(s.symbol);
        states.push_back(std::move(st));
    }
    return json{{"states", states},
                {"transition_dense_row_major", model.dense_transition()},
                {"state_variance", model.state_variance},
                {"stationary", model.stationary}};
}

} // namespace tsim
