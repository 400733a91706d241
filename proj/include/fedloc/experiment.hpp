#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <limits>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "fedloc/config.hpp"
#include "fedloc/metrics.hpp"
#include "fedloc/simnet.hpp"

namespace fedloc {

namespace detail {

inline std::string csv_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

inline std::string csv_header_comment(const ExperimentConfig& config) {
    return "# config_sha256=" + config_hash(config) + " seed=" + std::to_string(config.seed) +
           "\n";
}

// Writes via a temp file in the target directory; nothing lands on failure.
inline void write_file(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write " + path.string());
        f << content;
        if (!f) {
            f.close();
            std::filesystem::remove(tmp);
            throw std::runtime_error("write failed for " + path.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace detail

inline std::string trace_csv(const std::vector<RoundTrace>& traces,
                             const ExperimentConfig& config) {
    std::string out = detail::csv_header_comment(config);
    out +=
        "round,fog_id,raw_rssi_dbm,filtered_rssi_dbm,est_distance_m,true_distance_m,"
        "fix_x_m,fix_y_m,rejections\n";
    for (const auto& tr : traces) {
        std::string rej;
        for (const auto& r : tr.rejections) {
            if (!rej.empty()) rej.push_back(';');
            rej += r.device_id + ":" + r.reason;
        }
        for (const auto& rec : tr.fogs) {
            std::string fx, fy;
            for (const auto& er : tr.edges) {
                if (er.edge_id == rec.edge_id && er.fix) {
                    fx = detail::csv_num(er.fix->p.x());
                    fy = detail::csv_num(er.fix->p.y());
                }
            }
            out += std::to_string(tr.k) + "," + rec.fog_id + "," +
                   detail::csv_num(rec.raw_rssi) + "," + detail::csv_num(rec.filtered_rssi) +
                   "," + detail::csv_num(rec.est_distance) + "," +
                   detail::csv_num(rec.true_distance) + "," + fx + "," + fy + "," + rej + "\n";
        }
    }
    return out;
}

inline std::string metrics_csv(const std::vector<MetricReport>& reports,
                               const ExperimentConfig& config) {
    std::string out = detail::csv_header_comment(config);
    out += "mode,distance_m,rmse_m,mean_accuracy_pct,samples\n";
    for (const auto& rep : reports) {
        for (const auto& s : rep.per_distance)
            out += rep.mode + "," + detail::csv_num(s.distance_m) + "," +
                   detail::csv_num(s.rmse_m) + "," + detail::csv_num(s.mean_accuracy_pct) +
                   "," + std::to_string(s.samples) + "\n";
        out += rep.mode + ",all," + detail::csv_num(rep.mean_rmse_m) + "," +
               detail::csv_num(rep.mean_accuracy_pct) + "," + std::to_string(rep.samples) +
               "\n";
    }
    return out;
}

// Runs every requested mode, writes per-round trace CSVs and the metrics CSV,
// and prints the comparison table. Returns the reports in run order.
inline std::vector<MetricReport> cmd_run(const ExperimentConfig& config,
                                         const std::filesystem::path& out_dir,
                                         std::ostream& console = std::cout) {
    require_valid(config);
    std::filesystem::create_directories(out_dir);

    std::vector<MetricReport> reports;
    std::vector<std::pair<std::filesystem::path, std::string>> files;
    for (Mode mode : config.modes) {
        const auto traces = run_experiment(config, mode);
        reports.push_back(report(traces, config, mode));
        const std::string name =
            std::string("trace_") + (mode == Mode::Fkf ? "fkf" : "skf") + ".csv";
        files.emplace_back(out_dir / name, trace_csv(traces, config));
    }
    files.emplace_back(out_dir / "metrics.csv", metrics_csv(reports, config));
    for (const auto& [path, content] : files) detail::write_file(path, content);

    console << "mode   mean_rmse_m   mean_accuracy_pct   samples\n";
    for (const auto& rep : reports) {
        char line[128];
        std::snprintf(line, sizeof(line), "%-6s %11.4f %19.2f %9zu\n", rep.mode.c_str(),
                      rep.mean_rmse_m, rep.mean_accuracy_pct, rep.samples);
        console << line;
    }
    return reports;
}

struct BenchResult {
    long rounds = 0;
    double skf_local_us = 0.0;   // per-round local measurement phase, standard KF
    double fkf_round_us = 0.0;   // per-round total, FKF (single timer pair)
    double fkf_local_us = 0.0;   // per-round local measurement phase, FKF
    double fkf_share_us = 0.0;   // per-round global broadcast phase
    double fkf_fuse_us = 0.0;    // per-round global fusion phase
    double skf_total_us() const { return skf_local_us; }
    double fkf_total_us() const { return fkf_round_us; }
};

// Times the per-round filter phases over `rounds` iterations of the filter
// arithmetic alone (no channel sampling, gating, or tracing).
inline BenchResult run_bench(const ExperimentConfig& config, long rounds = 20000) {
    require_valid(config);
    Topology t = build_topology(config);
    Rng rng(config.seed);
    const std::size_t nf = config.fogs.size();

    // Pre-draw measurements so sampling stays outside the timers.
    std::vector<std::vector<double>> zs(rounds, std::vector<double>(nf));
    for (long k = 0; k < rounds; ++k)
        for (std::size_t f = 0; f < nf; ++f)
            zs[k][f] = sample_noisy_rssi(t.true_distances[0][f], config.channel, rng);

    using clock = std::chrono::steady_clock;
    auto us = [](clock::duration d) {
        return std::chrono::duration<double, std::micro>(d).count();
    };

    BenchResult res;
    res.rounds = rounds;

    // One timer pair around each pass, fastest-of-several per method, with the
    // two methods interleaved so a load burst cannot fall on only one of them.
    // Scheduler noise only ever inflates a timing, never deflates it.
    constexpr int kReps = 7;

    auto skf_pass = [&]() {
        std::vector<StateEstimate> states = t.skf_states[0];
        const auto start = clock::now();
        for (long k = 0; k < rounds; ++k)
            for (std::size_t f = 0; f < nf; ++f) {
                states[f] = predict(states[f], t.models[f]);
                states[f] = update(states[f], t.models[f], Vec::Constant(1, zs[k][f]));
            }
        return us(clock::now() - start) / double(rounds);
    };

    auto fkf_pass = [&]() {
        FusionShare fs = t.shares[0];
        std::vector<KfModel> models = t.models;  // per-local copies; only Q varies per round
        const auto start = clock::now();
        for (long k = 0; k < rounds; ++k) {
            const auto inits = share(fs);
            std::vector<LocalPacket> packets(nf);
            for (std::size_t f = 0; f < nf; ++f) {
                models[f].Q = inits[f].Q;
                StateEstimate s{inits[f].x, inits[f].P, k};
                s = predict(s, models[f]);
                s = update(s, models[f], Vec::Constant(1, zs[k][f] + t.offsets[0][f]));
                packets[f] = {int(f) + 1, s.x, s.P, s.k};
            }
            const StateEstimate fused = fuse(packets);
            fs = {fused.x, fused.P, fs.betas, fs.Q_global};
        }
        return us(clock::now() - start) / double(rounds);
    };

    res.skf_local_us = std::numeric_limits<double>::infinity();
    res.fkf_round_us = std::numeric_limits<double>::infinity();
    for (int rep = 0; rep < kReps; ++rep) {
        res.skf_local_us = std::min(res.skf_local_us, skf_pass());
        res.fkf_round_us = std::min(res.fkf_round_us, fkf_pass());
    }

    // One instrumented pass for the per-phase breakdown (display only; the
    // interleaved timer reads would bias a total taken from it).
    {
        FusionShare fs = t.shares[0];
        std::vector<KfModel> models = t.models;
        clock::duration share_d{}, local_d{}, fuse_d{};
        for (long k = 0; k < rounds; ++k) {
            auto t0 = clock::now();
            const auto inits = share(fs);
            auto t1 = clock::now();
            std::vector<LocalPacket> packets(nf);
            for (std::size_t f = 0; f < nf; ++f) {
                models[f].Q = inits[f].Q;
                StateEstimate s{inits[f].x, inits[f].P, k};
                s = predict(s, models[f]);
                s = update(s, models[f], Vec::Constant(1, zs[k][f] + t.offsets[0][f]));
                packets[f] = {int(f) + 1, s.x, s.P, s.k};
            }
            auto t2 = clock::now();
            const StateEstimate fused = fuse(packets);
            fs = {fused.x, fused.P, fs.betas, fs.Q_global};
            auto t3 = clock::now();
            share_d += t1 - t0;
            local_d += t2 - t1;
            fuse_d += t3 - t2;
        }
        res.fkf_share_us = us(share_d) / double(rounds);
        res.fkf_local_us = us(local_d) / double(rounds);
        res.fkf_fuse_us = us(fuse_d) / double(rounds);
    }
    return res;
}

inline void print_bench(const BenchResult& res, std::ostream& console = std::cout) {
    char line[96];
    console << "phase            mean_us_per_round\n";
    const std::pair<const char*, double> rows[] = {
        {"skf_local", res.skf_local_us},
        {"fkf_local", res.fkf_local_us},
        {"fkf_share", res.fkf_share_us},
        {"fkf_fuse", res.fkf_fuse_us},
    };
    for (const auto& [name, v] : rows) {
        std::snprintf(line, sizeof(line), "%-16s %17.3f\n", name, v);
        console << line;
    }
    std::snprintf(line, sizeof(line), "skf_total=%.3fus fkf_total=%.3fus ratio=%.2f (%ld rounds)\n",
                  res.skf_total_us(), res.fkf_total_us(),
                  res.fkf_total_us() / res.skf_total_us(), res.rounds);
    console << line;
}

}  // namespace fedloc
