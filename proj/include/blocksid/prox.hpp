#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "blocksid/error.hpp"

namespace blocksid {

namespace detail {

/// Threshold theta with sum_i max(a_i - theta, 0) = radius, for a nonnegative
/// vector a with sum(a) > radius. Sort-and-threshold: O(p log p). Ties are
/// broken by index so the scan order is reproducible.
template <class Derived>
double simplex_threshold(const Eigen::MatrixBase<Derived>& a, double radius) {
    const Eigen::Index p = a.size();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(p));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index x, Eigen::Index y) { return a(x) > a(y); });
    double cumsum = 0.0;
    double theta = 0.0;
    for (Eigen::Index k = 0; k < p; ++k) {
        const double value = a(order[static_cast<std::size_t>(k)]);
        cumsum += value;
        const double candidate = (cumsum - radius) / static_cast<double>(k + 1);
        if (value > candidate)
            theta = candidate;
        else
            break;
    }
    return theta;
}

/// Splits |v_i| into (kept, shrunk) with kept + shrunk == |v_i| exactly in
/// floating point: shrunk = max(|v_i| - theta, 0) is rounded once, then kept
/// and the final shrunk value come from one Fast2Sum step.
inline void split_magnitude(double mag, double theta, double& kept, double& shrunk) {
    const double raw = std::max(mag - theta, 0.0);
    kept = mag - raw;
    shrunk = mag - kept;
}

}  // namespace detail

/// Euclidean projection onto {z : sum|z_i| <= radius}. Inputs already inside
/// the ball are returned unchanged.
template <class Derived>
Eigen::VectorXd project_l1_ball(const Eigen::MatrixBase<Derived>& v, double radius) {
    if (!(radius > 0.0)) throw Error(Errc::invalid_argument, "l1-ball radius must be positive");
    Eigen::VectorXd out = v.reshaped();
    const Eigen::VectorXd mag = out.cwiseAbs();
    if (mag.sum() <= radius) return out;
    const double theta = detail::simplex_threshold(mag, radius);
    for (Eigen::Index k = 0; k < out.size(); ++k) {
        double kept = 0.0, shrunk = 0.0;
        detail::split_magnitude(mag[k], theta, kept, shrunk);
        out[k] = std::copysign(shrunk, out[k]);
    }
    return out;
}

/// argmin_x 1/2 ||x - v||^2 + tau * max_i |x_i|.
///
/// By Moreau decomposition this is v minus the projection of v onto the l1
/// ball of radius tau. Both share one threshold theta: the projection keeps
/// sign(v_i) * max(|v_i| - theta, 0) and the prox keeps sign(v_i) *
/// min(|v_i|, theta), up to the rounding that makes prox + projection == v
/// hold exactly. The result is exactly zero iff sum|v_i| <= tau.
template <class Derived>
Eigen::VectorXd prox_linf(const Eigen::MatrixBase<Derived>& v, double tau) {
    if (!(tau >= 0.0)) throw Error(Errc::invalid_argument, "prox weight must be nonnegative");
    Eigen::VectorXd out = v.reshaped();
    if (tau == 0.0) return out;
    const Eigen::VectorXd mag = out.cwiseAbs();
    if (mag.sum() <= tau) return Eigen::VectorXd::Zero(out.size());
    const double theta = detail::simplex_threshold(mag, tau);
    for (Eigen::Index k = 0; k < out.size(); ++k) {
        double kept = 0.0, shrunk = 0.0;
        detail::split_magnitude(mag[k], theta, kept, shrunk);
        out[k] = std::copysign(kept, out[k]);
    }
    return out;
}

/// Euclidean projection onto the probability simplex {eta >= 0, sum eta = 1}.
template <class Derived>
Eigen::VectorXd project_simplex(const Eigen::MatrixBase<Derived>& q) {
    Eigen::VectorXd out = q.reshaped();
    if (out.size() == 0) return out;
    // max(q - t, 0) = max(a - (t - shift), 0) with a = q - shift >= 1, so the
    // search runs on a positive vector whose sum is at least 1.
    const double shift = out.minCoeff() - 1.0;
    const Eigen::VectorXd a = out.array() - shift;
    const double theta = a.sum() > 1.0 ? detail::simplex_threshold(a, 1.0) : 0.0;
    return (a.array() - theta).cwiseMax(0.0);
}

}  // namespace blocksid
