#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fedloc/errors.hpp"
#include "fedloc/ledger.hpp"
#include "fedloc/rssi.hpp"

namespace fedloc {

enum class Mode { Fkf, Skf };

inline const char* mode_name(Mode m) { return m == Mode::Fkf ? "fkf" : "skf"; }

struct FogSpec {
    std::string id;
    Eigen::Vector2d anchor;
};

struct EdgeSpec {
    std::string id;
    Eigen::Vector2d position;
};

// Scalar random-walk filter parameters shared by every local filter.
struct FilterParams {
    double A = 1.0;
    double C = 1.0;
    double Q = 0.01;
    double R = 4.0;
    double x0 = 0.0;
    double P0 = 100.0;
};

struct BetaSpec {
    enum class Kind { Equal, Adaptive, Explicit };
    Kind kind = Kind::Equal;
    std::vector<double> values;  // Explicit only
};

struct ExperimentConfig {
    std::vector<Mode> modes;  // which configurations to run
    int rounds = 500;
    std::uint64_t seed = 1;
    std::vector<FogSpec> fogs;
    std::vector<EdgeSpec> edges;
    ChannelParams channel;
    FilterParams filter;
    BetaSpec betas;
    int burn_in = 20;
    std::vector<std::string> trusted_ids;
    // FKF calibration: locals filter distance-normalized RSSI referenced to
    // 1 m, so that all local filters estimate the same quantity and fusion
    // is coherent across anchors at different ranges.
    bool calibrate_fkf = true;
};

// Collects every validation failure, not just the first.
inline std::vector<std::string> validate(const ExperimentConfig& c) {
    std::vector<std::string> errs;
    if (c.modes.empty()) errs.push_back("mode: none selected");
    if (c.rounds <= 0) errs.push_back("rounds: must be positive");
    if (c.burn_in < 0) errs.push_back("burn_in: must be non-negative");
    if (c.rounds <= c.burn_in) errs.push_back("rounds: must exceed burn_in");
    if (c.fogs.empty()) errs.push_back("fogs: at least one fog required");
    if (c.edges.empty()) errs.push_back("edges: at least one edge required");
    for (std::size_t i = 0; i < c.fogs.size(); ++i)
        for (std::size_t j = i + 1; j < c.fogs.size(); ++j) {
            if (c.fogs[i].id == c.fogs[j].id)
                errs.push_back("fogs: duplicate id '" + c.fogs[i].id + "'");
            if ((c.fogs[i].anchor - c.fogs[j].anchor).norm() < 1e-12)
                errs.push_back("fogs: anchors of '" + c.fogs[i].id + "' and '" +
                               c.fogs[j].id + "' coincide");
        }
    for (const auto& e : c.edges)
        for (const auto& f : c.fogs)
            if ((e.position - f.anchor).norm() < 1e-12)
                errs.push_back("edges: '" + e.id + "' coincides with anchor '" + f.id + "'");
    if (!(c.channel.n > 0)) errs.push_back("channel.n: must be positive");
    if (c.channel.A < 0) errs.push_back("channel.A: must be non-negative");
    if (c.channel.sigma < 0) errs.push_back("channel.sigma: must be non-negative");
    if (c.channel.spike_prob < 0 || c.channel.spike_prob > 1)
        errs.push_back("channel.spike_prob: must be in [0, 1]");
    if (!(c.filter.Q >= 0)) errs.push_back("filter.Q: must be non-negative");
    if (!(c.filter.R > 0)) errs.push_back("filter.R: must be positive");
    if (!(c.filter.P0 > 0)) errs.push_back("filter.P0: must be positive");
    if (c.betas.kind == BetaSpec::Kind::Explicit) {
        if (c.betas.values.size() != c.fogs.size())
            errs.push_back("betas: " + std::to_string(c.betas.values.size()) +
                           " weights for " + std::to_string(c.fogs.size()) + " fogs");
        double sum = 0.0;
        bool positive = true;
        for (double b : c.betas.values) {
            sum += b;
            positive = positive && b > 0;
        }
        if (!positive) errs.push_back("betas: all weights must be positive");
        if (std::abs(sum - 1.0) > 1e-9)
            errs.push_back("betas: weights sum to " + std::to_string(sum) + ", expected 1");
    }
    return errs;
}

inline void require_valid(const ExperimentConfig& c) {
    const auto errs = validate(c);
    if (errs.empty()) return;
    std::string msg = "invalid config:";
    for (const auto& e : errs) msg += "\n  - " + e;
    throw ConfigError(msg);
}

namespace detail {

inline std::vector<Mode> parse_modes(const std::string& s) {
    if (s == "fkf" || s == "FKF") return {Mode::Fkf};
    if (s == "skf" || s == "SKF") return {Mode::Skf};
    if (s == "both") return {Mode::Fkf, Mode::Skf};
    throw ConfigError("mode: expected fkf, skf, or both, got '" + s + "'");
}

inline Eigen::Vector2d parse_point(const nlohmann::json& j, const std::string& field) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw ConfigError(field + ": expected [x, y]");
    return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace detail

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    try {
        c.modes = detail::parse_modes(j.value("mode", "both"));
        c.rounds = j.value("rounds", c.rounds);
        c.seed = j.value("seed", c.seed);
        c.burn_in = j.value("burn_in", c.burn_in);
        c.calibrate_fkf = j.value("calibrate_fkf", c.calibrate_fkf);
        for (const auto& f : j.at("fogs"))
            c.fogs.push_back({f.at("id").get<std::string>(),
                              detail::parse_point(f.at("anchor"), "fogs.anchor")});
        for (const auto& e : j.at("edges"))
            c.edges.push_back({e.at("id").get<std::string>(),
                               detail::parse_point(e.at("position"), "edges.position")});
        if (j.contains("channel")) {
            const auto& ch = j["channel"];
            c.channel.n = ch.value("n", c.channel.n);
            c.channel.A = ch.value("A", c.channel.A);
            c.channel.sigma = ch.value("sigma", c.channel.sigma);
            c.channel.spike_prob = ch.value("spike_prob", c.channel.spike_prob);
            c.channel.spike_mag = ch.value("spike_mag", c.channel.spike_mag);
        }
        if (j.contains("filter")) {
            const auto& f = j["filter"];
            c.filter.A = f.value("A", c.filter.A);
            c.filter.C = f.value("C", c.filter.C);
            c.filter.Q = f.value("Q", c.filter.Q);
            c.filter.R = f.value("R", c.filter.R);
            c.filter.x0 = f.value("x0", c.filter.x0);
            c.filter.P0 = f.value("P0", c.filter.P0);
        }
        if (j.contains("betas")) {
            const auto& b = j["betas"];
            if (b.is_string()) {
                const std::string s = b.get<std::string>();
                if (s == "equal")
                    c.betas.kind = BetaSpec::Kind::Equal;
                else if (s == "adaptive")
                    c.betas.kind = BetaSpec::Kind::Adaptive;
                else
                    throw ConfigError("betas: expected equal, adaptive, or a list");
            } else if (b.is_array()) {
                c.betas.kind = BetaSpec::Kind::Explicit;
                for (const auto& v : b) c.betas.values.push_back(v.get<double>());
            } else {
                throw ConfigError("betas: expected equal, adaptive, or a list");
            }
        }
        if (j.contains("trusted_ids"))
            for (const auto& id : j["trusted_ids"])
                c.trusted_ids.push_back(id.get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    require_valid(c);
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(f);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    return config_from_json(j);
}

// Canonical serialization, used for the config hash recorded in output CSVs.
inline nlohmann::json config_to_json(const ExperimentConfig& c) {
    nlohmann::json j;
    j["mode"] = c.modes.size() == 2 ? "both" : (c.modes[0] == Mode::Fkf ? "fkf" : "skf");
    j["rounds"] = c.rounds;
    j["seed"] = c.seed;
    j["burn_in"] = c.burn_in;
    j["calibrate_fkf"] = c.calibrate_fkf;
    for (const auto& f : c.fogs)
        j["fogs"].push_back({{"id", f.id}, {"anchor", {f.anchor.x(), f.anchor.y()}}});
    for (const auto& e : c.edges)
        j["edges"].push_back({{"id", e.id}, {"position", {e.position.x(), e.position.y()}}});
    j["channel"] = {{"n", c.channel.n},
                    {"A", c.channel.A},
                    {"sigma", c.channel.sigma},
                    {"spike_prob", c.channel.spike_prob},
                    {"spike_mag", c.channel.spike_mag}};
    j["filter"] = {{"A", c.filter.A}, {"C", c.filter.C}, {"Q", c.filter.Q},
                   {"R", c.filter.R}, {"x0", c.filter.x0}, {"P0", c.filter.P0}};
    if (c.betas.kind == BetaSpec::Kind::Explicit)
        j["betas"] = c.betas.values;
    else
        j["betas"] = c.betas.kind == BetaSpec::Kind::Equal ? "equal" : "adaptive";
    j["trusted_ids"] = c.trusted_ids;
    return j;
}

inline std::string config_hash(const ExperimentConfig& c) {
    return sha256_hex(config_to_json(c).dump());
}

// The in-repo testbed preset: four fog anchors at 1, 1.5, 2 and 2.5 m from an
// edge device at the origin, free-space path loss, 57 dB system loss.
inline ExperimentConfig reference_preset() {
    ExperimentConfig c;
    c.modes = {Mode::Fkf, Mode::Skf};
    c.rounds = 500;
    c.seed = 1;
    c.burn_in = 20;
    c.fogs = {{"fog-1", {1.0, 0.0}},
              {"fog-2", {0.0, 1.5}},
              {"fog-3", {-2.0, 0.0}},
              {"fog-4", {0.0, -2.5}}};
    c.edges = {{"edge-1", {0.0, 0.0}}};
    c.channel = {2.0, 57.0, 2.0, 0.05, 8.0};
    c.filter = {1.0, 1.0, 0.01, 4.0, 0.0, 100.0};
    c.betas.kind = BetaSpec::Kind::Equal;
    c.trusted_ids = {"fog-1", "fog-2", "fog-3", "fog-4", "edge-1"};
    return c;
}

}  // namespace fedloc
