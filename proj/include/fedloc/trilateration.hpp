#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "fedloc/errors.hpp"

namespace fedloc {

struct AnchorSet {
    std::vector<Eigen::Vector2d> positions;  // >= 3, not all collinear
};

struct PositionFix {
    Eigen::Vector2d p;
    double residual = 0.0;  // RMS of range residuals, meters
};

// Position from ranges to known anchors, via the linearized least-squares
// system obtained by subtracting the first anchor's range equation from the
// rest:  2 (a_i - a_0)^T p = d_0^2 - d_i^2 + |a_i|^2 - |a_0|^2.
inline PositionFix trilaterate(const AnchorSet& anchors, const std::vector<double>& distances) {
    const std::size_t m = anchors.positions.size();
    if (m < 3) throw ShapeError("trilaterate: at least 3 anchors required");
    if (distances.size() != m)
        throw ShapeError("trilaterate: " + std::to_string(m) + " anchors but " +
                         std::to_string(distances.size()) + " distances");
    for (double d : distances)
        if (!(d > 0.0)) throw ShapeError("trilaterate: distances must be positive");

    const Eigen::Vector2d a0 = anchors.positions[0];
    Eigen::MatrixXd M(m - 1, 2);
    Eigen::VectorXd b(m - 1);
    for (std::size_t i = 1; i < m; ++i) {
        const Eigen::Vector2d ai = anchors.positions[i];
        M.row(i - 1) = 2.0 * (ai - a0).transpose();
        b(i - 1) = distances[0] * distances[0] - distances[i] * distances[i] +
                   ai.squaredNorm() - a0.squaredNorm();
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(M);
    qr.setThreshold(1e-9);
    if (qr.rank() < 2)
        throw ShapeError("trilaterate: anchors are collinear (degenerate geometry)");
    PositionFix fix;
    fix.p = qr.solve(b);

    double ss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double r = (fix.p - anchors.positions[i]).norm() - distances[i];
        ss += r * r;
    }
    fix.residual = std::sqrt(ss / double(m));
    return fix;
}

}  // namespace fedloc
