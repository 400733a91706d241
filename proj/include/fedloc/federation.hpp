#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "fedloc/kalman.hpp"

namespace fedloc {

// Weight-assignment rule applied after each fusion.
enum class BetaRule {
    Equal,     // beta_i = 1/N
    Adaptive,  // beta_i proportional to 1/trace(P_i), renormalized each round
    Fixed,     // keep the incoming betas
};

// Global filter state broadcast to the locals each round.
struct FusionShare {
    Vec x_f;
    Mat P_f;
    std::vector<double> betas;
    Mat Q_global;

    std::size_t filter_count() const { return betas.size(); }
};

// Per-local initialization produced by the information-sharing rule.
struct LocalInit {
    Vec x;
    Mat P;
    Mat Q;
};

// What one local filter sends to the global filter.
struct LocalPacket {
    int filter_id = 0;
    Vec x;
    Mat P;
    long k = 0;
};

// Optional global-side prediction-only filter.
struct MasterEstimate {
    bool present = false;
    Vec x;
    Mat P;
};

namespace detail {

inline void check_betas(const std::vector<double>& betas) {
    if (betas.empty()) throw InvalidWeightsError("betas: at least one weight required");
    double sum = 0.0;
    for (std::size_t i = 0; i < betas.size(); ++i) {
        if (!(betas[i] > 0.0))
            throw InvalidWeightsError("betas: beta_" + std::to_string(i + 1) +
                                      " = " + std::to_string(betas[i]) + " is not positive");
        sum += betas[i];
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw InvalidWeightsError("betas: sum " + std::to_string(sum) + " != 1");
}

// Solves M^{-1}, rejecting singular input. Covariances here are tiny (state
// dimension), so take Eigen's direct cofactor path when it exists and fall
// back to a rank-revealing decomposition above 4x4.
inline Mat invert(const Mat& m, const std::string& what) {
    if (m.rows() <= 4) {
        const Mat inv = m.inverse();
        if (!inv.allFinite()) throw SingularError(what + " is singular");
        return inv;
    }
    Eigen::FullPivLU<Mat> lu(m);
    if (!lu.isInvertible()) throw SingularError(what + " is singular");
    return lu.inverse();
}

}  // namespace detail

// Information-sharing broadcast: every local gets
//   x_i = x_f,  P_i = P_f / beta_i,  Q_i = Q_global / beta_i.
inline std::vector<LocalInit> share(const FusionShare& fusion) {
    detail::check_betas(fusion.betas);
    std::vector<LocalInit> out;
    out.reserve(fusion.betas.size());
    for (double beta : fusion.betas)
        out.push_back({fusion.x_f, fusion.P_f / beta, fusion.Q_global / beta});
    return out;
}

// Information-space fusion of local posteriors (plus the master, when present):
//   P_f^{-1} = sum_i P_i^{-1} + P_M^{-1}
//   x_f      = P_f (sum_i P_i^{-1} x_i + P_M^{-1} x_M)
inline StateEstimate fuse(const std::vector<LocalPacket>& locals,
                          const MasterEstimate& master = {}) {
    if (locals.empty()) throw ShapeError("fuse: no local packets");
    const long k = locals.front().k;
    for (const auto& p : locals)
        if (p.k != k)
            throw StalenessError("fuse: filter " + std::to_string(p.filter_id) +
                                 " has time index " + std::to_string(p.k) +
                                 ", expected " + std::to_string(k));
    if (locals.size() == 1 && !master.present) {
        // One-term sum: the fused estimate is the packet itself.
        return {locals.front().x, locals.front().P, k};
    }
    const Eigen::Index n = locals.front().x.size();
    Mat info = Mat::Zero(n, n);
    Vec info_x = Vec::Zero(n);
    for (const auto& p : locals) {
        const Mat pinv =
            detail::invert(p.P, "fuse: covariance of filter " + std::to_string(p.filter_id));
        info += pinv;
        info_x += pinv * p.x;
    }
    if (master.present) {
        const Mat pinv = detail::invert(master.P, "fuse: master covariance");
        info += pinv;
        info_x += pinv * master.x;
    }
    StateEstimate out;
    out.P = detail::invert(info, "fuse: summed information matrix");
    out.x = out.P * info_x;
    out.k = k;
    return out;
}

// Prediction-only step for the master filter. Absent master is a no-op.
inline MasterEstimate master_step(const MasterEstimate& master, const KfModel& model) {
    if (!master.present) return master;
    StateEstimate s{master.x, master.P, 0};
    s = predict(s, model);
    return {true, s.x, s.P};
}

inline std::vector<double> reweight(BetaRule rule, const std::vector<double>& prior_betas,
                                    const std::vector<LocalPacket>& locals) {
    switch (rule) {
        case BetaRule::Fixed:
            return prior_betas;
        case BetaRule::Equal:
            return std::vector<double>(prior_betas.size(), 1.0 / double(prior_betas.size()));
        case BetaRule::Adaptive: {
            std::vector<double> b(locals.size());
            double sum = 0.0;
            for (std::size_t i = 0; i < locals.size(); ++i) {
                b[i] = 1.0 / locals[i].P.trace();
                sum += b[i];
            }
            for (double& v : b) v /= sum;
            return b;
        }
    }
    return prior_betas;
}

struct FkfRoundResult {
    FusionShare share;
    std::vector<LocalPacket> locals;
    MasterEstimate master;
};

// One full federated round: broadcast -> per-local predict+update -> master
// prediction -> fusion. Measurement i goes to local filter i.
inline FkfRoundResult fkf_round(const std::vector<Vec>& measurements,
                                const FusionShare& prior,
                                const std::vector<KfModel>& models, long k,
                                const MasterEstimate& master = {},
                                const KfModel* master_model = nullptr,
                                BetaRule rule = BetaRule::Fixed) {
    const std::size_t n = prior.betas.size();
    if (measurements.size() != n)
        throw ShapeError("fkf_round: expected " + std::to_string(n) + " measurements, got " +
                         std::to_string(measurements.size()));
    if (models.size() != n)
        throw ShapeError("fkf_round: expected " + std::to_string(n) + " models, got " +
                         std::to_string(models.size()));

    const std::vector<LocalInit> inits = share(prior);
    std::vector<LocalPacket> packets(n);
    // Locals are mutually independent within a round; order does not affect output.
    for (std::size_t i = 0; i < n; ++i) {
        KfModel m = models[i];
        m.Q = inits[i].Q;
        StateEstimate s{inits[i].x, inits[i].P, k};
        s = predict(s, m);
        s = update(s, m, measurements[i]);
        packets[i] = {int(i) + 1, s.x, s.P, s.k};
    }

    MasterEstimate next_master = master;
    if (master.present && master_model != nullptr)
        next_master = master_step(master, *master_model);

    const StateEstimate fused = fuse(packets, next_master);
    FkfRoundResult out;
    out.share = {fused.x, fused.P, reweight(rule, prior.betas, packets), prior.Q_global};
    out.locals = std::move(packets);
    out.master = next_master;
    return out;
}

}  // namespace fedloc
