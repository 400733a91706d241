#pragma once

#include <cmath>
#include <cstdio>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fedloc/config.hpp"
#include "fedloc/federation.hpp"
#include "fedloc/kalman.hpp"
#include "fedloc/ledger.hpp"
#include "fedloc/rssi.hpp"
#include "fedloc/trilateration.hpp"

namespace fedloc {

// One fog's view of one edge device in one round.
struct FogRecord {
    std::string fog_id;
    std::string edge_id;
    double raw_rssi = 0.0;
    double filtered_rssi = 0.0;
    double est_distance = 0.0;
    double true_distance = 0.0;
    bool in_fusion = false;
};

struct Rejection {
    std::string device_id;
    std::string reason;
};

struct EdgeRoundResult {
    std::string edge_id;
    double fused_x = 0.0;
    double fused_P = 0.0;
    std::optional<PositionFix> fix;
};

struct RoundTrace {
    long k = 0;
    std::vector<FogRecord> fogs;
    std::vector<EdgeRoundResult> edges;
    std::vector<Rejection> rejections;
    std::vector<std::string> cloud_messages;  // serialized fog->cloud packets
    std::vector<double> raw_samples;          // every channel sample this round
};

// All node state for the lockstep simulation. Cross-node communication is by
// value; fog filter banks are independent per (edge, fog) pair.
struct Topology {
    ExperimentConfig config;
    Chain cloud_chain;
    std::vector<Chain> fog_chains;  // one copy per fog
    std::vector<KfModel> models;    // per fog
    AnchorSet anchors;
    // Indexed [edge][fog]:
    std::vector<std::vector<StateEstimate>> skf_states;
    std::vector<std::vector<double>> true_distances;
    std::vector<std::vector<double>> offsets;  // FKF calibration, 10 n log10(d)
    // Indexed [edge]:
    std::vector<FusionShare> shares;
};

inline Topology build_topology(const ExperimentConfig& config) {
    require_valid(config);
    Topology t;
    t.config = config;

    Chain chain = genesis(0);
    if (!config.trusted_ids.empty()) chain = append_block(chain, config.trusted_ids, 1);
    t.cloud_chain = chain;
    t.fog_chains.assign(config.fogs.size(), chain);

    const std::size_t nf = config.fogs.size();
    std::vector<double> betas;
    if (config.betas.kind == BetaSpec::Kind::Explicit)
        betas = config.betas.values;
    else
        betas.assign(nf, 1.0 / double(nf));

    for (const auto& fog : config.fogs) {
        t.models.push_back(
            KfModel::scalar(config.filter.A, config.filter.C, config.filter.Q, config.filter.R));
        t.anchors.positions.push_back(fog.anchor);
    }

    for (const auto& edge : config.edges) {
        std::vector<StateEstimate> bank;
        std::vector<double> dists, offs;
        for (const auto& fog : config.fogs) {
            bank.push_back({Vec::Constant(1, config.filter.x0),
                            Mat::Constant(1, 1, config.filter.P0), 0});
            const double d = (fog.anchor - edge.position).norm();
            dists.push_back(d);
            offs.push_back(config.calibrate_fkf ? 10.0 * config.channel.n * std::log10(d) : 0.0);
        }
        t.skf_states.push_back(std::move(bank));
        t.true_distances.push_back(std::move(dists));
        t.offsets.push_back(std::move(offs));
        t.shares.push_back({Vec::Constant(1, config.filter.x0),
                            Mat::Constant(1, 1, config.filter.P0), betas,
                            Mat::Constant(1, 1, config.filter.Q)});
    }
    return t;
}

namespace detail {

inline std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void append_field(std::string& out, const std::string& name, const std::string& value) {
    const std::string field = name + "=" + value;
    out += std::to_string(field.size());
    out.push_back(':');
    out += field;
}

}  // namespace detail

// Wire format of one fog->cloud message: a length-prefixed field list with
// the fixed field names filter_id, k, x, P.
inline std::string serialize_packet(const LocalPacket& p) {
    std::string out;
    detail::append_field(out, "filter_id", std::to_string(p.filter_id));
    detail::append_field(out, "k", std::to_string(p.k));
    std::string xs, ps;
    for (Eigen::Index i = 0; i < p.x.size(); ++i) {
        if (i) xs.push_back(' ');
        xs += detail::fmt_double(p.x(i));
    }
    for (Eigen::Index i = 0; i < p.P.size(); ++i) {
        if (i) ps.push_back(' ');
        ps += detail::fmt_double(p.P.data()[i]);
    }
    detail::append_field(out, "x", xs);
    detail::append_field(out, "P", ps);
    return out;
}

// Splits a serialized message back into name -> value pairs.
inline std::vector<std::pair<std::string, std::string>> parse_packet_fields(
    const std::string& msg) {
    std::vector<std::pair<std::string, std::string>> fields;
    std::size_t pos = 0;
    while (pos < msg.size()) {
        const std::size_t colon = msg.find(':', pos);
        if (colon == std::string::npos) throw ShapeError("malformed message: missing length");
        const std::size_t len = std::stoul(msg.substr(pos, colon - pos));
        const std::string field = msg.substr(colon + 1, len);
        const std::size_t eq = field.find('=');
        if (eq == std::string::npos) throw ShapeError("malformed message: missing '='");
        fields.emplace_back(field.substr(0, eq), field.substr(eq + 1));
        pos = colon + 1 + len;
    }
    return fields;
}

// One lockstep round. Sequence: edges emit samples, fogs gate the edge and run
// local filters, the cloud gates the fogs and fuses, distances and a position
// fix are derived from the filtered values.
inline RoundTrace run_round(Topology& t, long k, Rng& rng, Mode mode) {
    const ExperimentConfig& cfg = t.config;
    const std::size_t nf = cfg.fogs.size();
    RoundTrace trace;
    trace.k = k;

    for (std::size_t e = 0; e < cfg.edges.size(); ++e) {
        const EdgeSpec& edge = cfg.edges[e];

        // (1) channel samples, one per fog link. Drawn before any gating so
        // the RNG stream is independent of authorization outcomes.
        std::vector<double> raw(nf);
        for (std::size_t f = 0; f < nf; ++f) {
            raw[f] = sample_noisy_rssi(t.true_distances[e][f], cfg.channel, rng);
            trace.raw_samples.push_back(raw[f]);
        }

        // (2) fog-side edge gate.
        std::vector<bool> edge_ok(nf);
        bool any_ok = false;
        for (std::size_t f = 0; f < nf; ++f) {
            edge_ok[f] = is_authorized(t.fog_chains[f], edge.id);
            if (!edge_ok[f])
                trace.rejections.push_back({edge.id, "unauthorized edge at " + cfg.fogs[f].id});
            any_ok = any_ok || edge_ok[f];
        }
        if (!any_ok) continue;  // silent to the edge; no filter state changes

        // (3) local filter steps.
        const std::vector<LocalInit> inits =
            mode == Mode::Fkf ? share(t.shares[e]) : std::vector<LocalInit>{};
        std::vector<std::optional<LocalPacket>> packets(nf);
        std::vector<double> filtered(nf, 0.0);
        for (std::size_t f = 0; f < nf; ++f) {
            if (!edge_ok[f]) continue;
            KfModel m = t.models[f];
            StateEstimate s;
            if (mode == Mode::Fkf) {
                s = {inits[f].x, inits[f].P, k};
                m.Q = inits[f].Q;
            } else {
                s = t.skf_states[e][f];
                s.k = k;
            }
            const double z = mode == Mode::Fkf ? raw[f] + t.offsets[e][f] : raw[f];
            s = predict(s, m);
            s = update(s, m, Vec::Constant(1, z));
            if (mode == Mode::Skf) t.skf_states[e][f] = s;
            packets[f] = LocalPacket{int(f) + 1, s.x, s.P, s.k};
            filtered[f] = mode == Mode::Fkf ? s.x(0) - t.offsets[e][f] : s.x(0);
        }

        // (4) cloud-side fog gate; only (x_i, P_i, ids, k) ever travel
        // fog -> cloud.
        std::vector<LocalPacket> fused_inputs;
        std::vector<bool> in_fusion(nf, false);
        for (std::size_t f = 0; f < nf; ++f) {
            if (!packets[f]) continue;
            if (!is_authorized(t.cloud_chain, cfg.fogs[f].id)) {
                trace.rejections.push_back({cfg.fogs[f].id, "unauthorized fog at cloud"});
                continue;
            }
            trace.cloud_messages.push_back(serialize_packet(*packets[f]));
            fused_inputs.push_back(*packets[f]);
            in_fusion[f] = true;
        }
        if (fused_inputs.empty())
            throw AuthorizationError("round " + std::to_string(k) +
                                     ": every fog was rejected at the cloud");

        // (5) fusion; in SKF mode the result is recorded for metric parity
        // but never fed back into the locals.
        const StateEstimate fused = fuse(fused_inputs);
        if (mode == Mode::Fkf) {
            std::vector<double> betas = t.shares[e].betas;
            if (cfg.betas.kind == BetaSpec::Kind::Adaptive)
                betas = reweight(BetaRule::Adaptive, betas, fused_inputs);
            t.shares[e] = {fused.x, fused.P, betas, t.shares[e].Q_global};
        }

        // (6) distances and trilateration from the filtered values.
        EdgeRoundResult er;
        er.edge_id = edge.id;
        er.fused_x = fused.x(0);
        er.fused_P = fused.P(0, 0);
        std::vector<Eigen::Vector2d> used_anchors;
        std::vector<double> used_dists;
        for (std::size_t f = 0; f < nf; ++f) {
            if (!packets[f]) continue;
            FogRecord rec;
            rec.fog_id = cfg.fogs[f].id;
            rec.edge_id = edge.id;
            rec.raw_rssi = raw[f];
            rec.filtered_rssi = filtered[f];
            rec.est_distance = distance_from_rssi(filtered[f], cfg.channel);
            rec.true_distance = t.true_distances[e][f];
            rec.in_fusion = in_fusion[f];
            used_anchors.push_back(cfg.fogs[f].anchor);
            used_dists.push_back(rec.est_distance);
            trace.fogs.push_back(std::move(rec));
        }
        if (used_anchors.size() >= 3) {
            try {
                er.fix = trilaterate({used_anchors}, used_dists);
            } catch (const ShapeError&) {
                // degenerate geometry this round; no fix
            }
        }
        trace.edges.push_back(std::move(er));
    }
    return trace;
}

inline std::vector<RoundTrace> run_experiment(const ExperimentConfig& config, Mode mode) {
    Topology t = build_topology(config);
    Rng rng(config.seed);
    std::vector<RoundTrace> traces;
    traces.reserve(config.rounds);
    for (long k = 0; k < config.rounds; ++k) traces.push_back(run_round(t, k, rng, mode));
    return traces;
}

// Privacy audit: scans every serialized fog->cloud message for any value
// numerically equal to a raw channel sample emitted anywhere in the run.
// Returns the number of leaks found.
inline std::size_t audit_privacy(const std::vector<RoundTrace>& traces) {
    std::set<double> samples;
    for (const auto& tr : traces)
        samples.insert(tr.raw_samples.begin(), tr.raw_samples.end());
    std::size_t leaks = 0;
    for (const auto& tr : traces) {
        for (const auto& msg : tr.cloud_messages) {
            for (const auto& [name, value] : parse_packet_fields(msg)) {
                if (name != "x" && name != "P") continue;
                std::size_t start = 0;
                while (start < value.size()) {
                    std::size_t sp = value.find(' ', start);
                    if (sp == std::string::npos) sp = value.size();
                    if (samples.count(std::stod(value.substr(start, sp - start)))) ++leaks;
                    start = sp + 1;
                }
            }
        }
    }
    return leaks;
}

}  // namespace fedloc
