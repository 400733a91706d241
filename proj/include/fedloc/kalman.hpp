#pragma once

#include <Eigen/Dense>
#include <string>

#include "fedloc/errors.hpp"

namespace fedloc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// State vector with covariance at a discrete time index.
struct StateEstimate {
    Vec x;
    Mat P;
    long k = 0;

    Eigen::Index dim() const { return x.size(); }
};

// System matrices for one linear filter:
//   x' = A x + B u + w,  w ~ N(0, Q)
//   z  = C x + v,        v ~ N(0, R)
struct KfModel {
    Mat A;
    Mat B;
    Mat C;
    Mat Q;
    Mat R;

    Eigen::Index state_dim() const { return A.rows(); }
    Eigen::Index meas_dim() const { return C.rows(); }
    Eigen::Index control_dim() const { return B.cols(); }

    // Random-walk scalar model (the default for RSSI smoothing).
    static KfModel scalar(double a, double c, double q, double r) {
        KfModel m;
        m.A = Mat::Constant(1, 1, a);
        m.B = Mat::Zero(1, 1);
        m.C = Mat::Constant(1, 1, c);
        m.Q = Mat::Constant(1, 1, q);
        m.R = Mat::Constant(1, 1, r);
        return m;
    }
};

namespace detail {

inline void require_square(const Mat& m, Eigen::Index n, const char* name) {
    if (m.rows() != n || m.cols() != n)
        throw ShapeError(std::string(name) + ": expected " + std::to_string(n) + "x" +
                         std::to_string(n) + ", got " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()));
}

inline void check_model_shapes(const StateEstimate& s, const KfModel& m) {
    const Eigen::Index n = s.x.size();
    require_square(m.A, n, "A");
    require_square(m.Q, n, "Q");
    require_square(s.P, n, "P");
    if (m.B.size() > 0 && m.B.rows() != n)
        throw ShapeError("B: expected " + std::to_string(n) + " rows, got " +
                         std::to_string(m.B.rows()));
    if (m.C.cols() != n)
        throw ShapeError("C: expected " + std::to_string(n) + " columns, got " +
                         std::to_string(m.C.cols()));
    require_square(m.R, m.C.rows(), "R");
}

}  // namespace detail

// Prediction step: x' = A x + B u, P' = A P A^T + Q, k' = k + 1.
// u may be empty, standing in for the zero control vector.
inline StateEstimate predict(const StateEstimate& state, const KfModel& model,
                             const Vec& u = Vec()) {
    detail::check_model_shapes(state, model);
    StateEstimate out;
    out.x = model.A * state.x;
    if (u.size() > 0) {
        if (u.size() != model.B.cols())
            throw ShapeError("u: expected " + std::to_string(model.B.cols()) +
                             " entries, got " + std::to_string(u.size()));
        out.x += model.B * u;
    }
    out.P = model.A * state.P * model.A.transpose() + model.Q;
    out.k = state.k + 1;
    return out;
}

// Kalman gain K = P C^T (C P C^T + R)^{-1}, computed via a linear solve.
inline Mat gain(const Mat& P, const Mat& C, const Mat& R) {
    if (C.cols() != P.rows())
        throw ShapeError("C: expected " + std::to_string(P.rows()) + " columns, got " +
                         std::to_string(C.cols()));
    if (R.rows() != C.rows() || R.cols() != C.rows())
        throw ShapeError("R: expected " + std::to_string(C.rows()) + "x" +
                         std::to_string(C.rows()));
    const Mat S = C * P * C.transpose() + R;
    Eigen::FullPivLU<Mat> lu(S);
    if (!lu.isInvertible())
        throw SingularError("gain: innovation covariance C P C^T + R is singular");
    // K S = P C^T  =>  S^T K^T = C P^T; S is symmetric.
    return lu.solve(C * P.transpose()).transpose();
}

// Measurement update with the Joseph-form covariance recursion
//   P' = (I - K C) P (I - K C)^T + K R K^T
// which preserves symmetry and positive semidefiniteness.
inline StateEstimate update(const StateEstimate& state, const KfModel& model, const Vec& z) {
    detail::check_model_shapes(state, model);
    if (z.size() != model.C.rows())
        throw ShapeError("z: expected " + std::to_string(model.C.rows()) +
                         " entries, got " + std::to_string(z.size()));
    const Mat K = gain(state.P, model.C, model.R);
    StateEstimate out;
    out.x = state.x + K * (z - model.C * state.x);
    const Mat IKC = Mat::Identity(state.x.size(), state.x.size()) - K * model.C;
    out.P = IKC * state.P * IKC.transpose() + K * model.R * K.transpose();
    out.k = state.k;
    return out;
}

}  // namespace fedloc
