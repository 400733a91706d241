#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedloc/config.hpp"
#include "fedloc/errors.hpp"
#include "fedloc/simnet.hpp"

namespace fedloc {

inline double rmse(std::span<const double> predicted, std::span<const double> observed) {
    if (predicted.empty() || predicted.size() != observed.size())
        throw ShapeError("rmse: inputs must be equal-length and non-empty");
    double ss = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const double d = predicted[i] - observed[i];
        ss += d * d;
    }
    return std::sqrt(ss / double(predicted.size()));
}

// Percent accuracy: (1 - |(theoretical - measured) / theoretical|) * 100.
// May be negative when the error exceeds |theoretical|; callers clamp.
inline double rssi_accuracy(double theoretical, double measured) {
    if (theoretical == 0.0) throw std::domain_error("rssi_accuracy: theoretical value is zero");
    return (1.0 - std::abs((theoretical - measured) / theoretical)) * 100.0;
}

struct DistanceStat {
    double distance_m = 0.0;
    double rmse_m = 0.0;
    double mean_accuracy_pct = 0.0;
    std::size_t samples = 0;
};

struct MetricReport {
    std::string mode;
    std::vector<DistanceStat> per_distance;
    double mean_rmse_m = 0.0;
    double mean_accuracy_pct = 0.0;
    double mean_raw_accuracy_pct = 0.0;  // unclamped, for verbose output
    std::size_t samples = 0;
};

// Aggregates a run: per known distance, RMSE of the estimated distances, and
// the mean percent accuracy of the filter estimate relative to the
// raw measured RSSI. The first burn_in rounds are excluded.
inline MetricReport report(const std::vector<RoundTrace>& traces, const ExperimentConfig& config,
                           Mode mode) {
    if (traces.empty()) throw ShapeError("report: no traces");
    struct Acc {
        std::vector<double> est, truth;
        double acc_sum = 0.0, raw_acc_sum = 0.0;
        std::size_t n = 0;
    };
    std::map<double, Acc> by_distance;
    for (const auto& tr : traces) {
        if (tr.k < config.burn_in) continue;
        for (const auto& rec : tr.fogs) {
            Acc& a = by_distance[rec.true_distance];
            a.est.push_back(rec.est_distance);
            a.truth.push_back(rec.true_distance);
            const double raw = rssi_accuracy(rec.filtered_rssi, rec.raw_rssi);
            a.raw_acc_sum += raw;
            a.acc_sum += std::clamp(raw, 0.0, 100.0);
            a.n += 1;
        }
    }
    if (by_distance.empty()) throw ShapeError("report: every round fell inside burn-in");

    MetricReport rep;
    rep.mode = mode_name(mode);
    double acc_total = 0.0, raw_acc_total = 0.0, rmse_total = 0.0;
    for (const auto& [dist, a] : by_distance) {
        DistanceStat s;
        s.distance_m = dist;
        s.rmse_m = rmse(a.est, a.truth);
        s.mean_accuracy_pct = a.acc_sum / double(a.n);
        s.samples = a.n;
        rep.per_distance.push_back(s);
        rmse_total += s.rmse_m;
        acc_total += a.acc_sum;
        raw_acc_total += a.raw_acc_sum;
        rep.samples += a.n;
    }
    rep.mean_rmse_m = rmse_total / double(rep.per_distance.size());
    rep.mean_accuracy_pct = acc_total / double(rep.samples);
    rep.mean_raw_accuracy_pct = raw_acc_total / double(rep.samples);
    return rep;
}

}  // namespace fedloc
