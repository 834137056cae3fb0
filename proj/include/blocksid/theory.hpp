#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "blocksid/blockstruct.hpp"
#include "blocksid/error.hpp"
#include "blocksid/lti.hpp"

namespace blocksid {

struct AssumptionReport {
    double gamma = 0.0;         // incoherence margin
    double lambda_min = 0.0;    // eigen-bounds of the design covariance
    double lambda_max = 0.0;
    double kappa = 0.0;
    double sigma_max_sq = 0.0;
    double t_min = 0.0;         // smallest nonzero-block magnitude
    double alpha_n = 0.0;       // log n_max / log(nbar+mbar), informational
    double alpha_m = 0.0;       // log m_max / log(nbar+mbar), informational
    Index k_max = 0;
    bool incoherence = false;
    bool bounded_eigenvalue = false;
    bool bounded_minimum = false;
};

/**
 * gamma = 1 - max_j max_{i in A_j^c} || Sigma_{(i),A_j} Sigma_{A_j,A_j}^{-1} ||,
 * where the norm is the entrywise absolute sum. An empty off-support set
 * contributes 0.
 */
inline double mutual_incoherence(const Matrix& sigma_tilde, const BlockPartition& partition,
                                 const BlockSupport& support) {
    const Index p = partition.n() + partition.m();
    if (sigma_tilde.rows() != p || sigma_tilde.cols() != p)
        throw Error(Errc::shape_mismatch, "sigma_tilde must be (n+m) x (n+m)");
    if (support.rows() != partition.row_blocks() || support.cols() != partition.col_blocks())
        throw Error(Errc::shape_mismatch, "support shape does not match the partition");

    double worst = 0.0;
    for (Index j = 0; j < partition.col_blocks(); ++j) {
        const auto active = support.active_rows(j);
        const auto inactive = support.inactive_rows(j);
        if (active.empty() || inactive.empty()) continue;
        const auto on = scalar_rows(partition, active);
        const Matrix S_on = sigma_tilde(on, on);
        Eigen::SelfAdjointEigenSolver<Matrix> eig(S_on, Eigen::EigenvaluesOnly);
        const double lo = eig.eigenvalues().minCoeff();
        const double hi = eig.eigenvalues().maxCoeff();
        if (!(hi > 0.0) || lo <= 1e-10 * hi)
            throw Error(Errc::incoherence_undefined,
                        "on-support covariance is singular in column block " + std::to_string(j));
        Eigen::LDLT<Matrix> ldlt(S_on);
        for (Index i : inactive) {
            const auto rr = partition.row_range(i);
            // (Sigma_{(i),A} Sigma_AA^{-1})^T = Sigma_AA^{-1} Sigma_{A,(i)}
            const Matrix cross = sigma_tilde(on, Eigen::seqN(rr.begin, rr.size()));
            const Matrix product = ldlt.solve(cross);
            worst = std::max(worst, product.cwiseAbs().sum());
        }
    }
    return 1.0 - worst;
}

/// Smallest max-abs entry over the nonzero blocks.
inline double min_block_magnitude(const Matrix& theta_star, const BlockPartition& partition) {
    partition.check_shape(theta_star.rows(), theta_star.cols());
    double best = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < partition.col_blocks(); ++j)
        for (Index i = 0; i < partition.row_blocks(); ++i) {
            const double mag = block_view(theta_star, partition, i, j).cwiseAbs().maxCoeff();
            if (mag > 0.0) best = std::min(best, mag);
        }
    if (!std::isfinite(best)) throw Error(Errc::tmin_undefined, "parameter has no nonzero block");
    return best;
}

/// lambda_d = sqrt(2 (D^2 + D log(nbar + mbar)) / d), the regularization used
/// across all reported experiments.
inline double lambda_schedule(Index D, Index n_bar, Index m_bar, Index d) {
    if (d < 1 || D < 1 || n_bar + m_bar < 1)
        throw Error(Errc::invalid_argument, "lambda_schedule needs d, D, nbar+mbar >= 1");
    const double Dd = static_cast<double>(D);
    const double blocks = static_cast<double>(n_bar + m_bar);
    return std::sqrt(2.0 * (Dd * Dd + Dd * std::log(blocks)) / static_cast<double>(d));
}

inline double lambda_schedule(const BlockPartition& partition, Index d) {
    return lambda_schedule(partition.D(), partition.n_bar(), partition.m_bar(), d);
}

enum class SparsityCount {
    per_column,         // k_max nonzeros per column: factor k_max
    per_row_and_column  // k_max bounds rows and columns: factor k_max^2
};

struct SampleThresholdInputs {
    double kappa = 1.0;
    double k_max = 1.0;
    double D = 1.0;
    Index n_bar = 1;
    Index m_bar = 0;
    double delta = 0.05;
    double c_mult = 1.0;
    SparsityCount count = SparsityCount::per_column;
};

/// Unscaled sample-count requirement c * kappa^2 * k (D log(nbar+mbar) + D^2 log(1/delta)).
inline double sample_threshold_raw(const SampleThresholdInputs& in) {
    if (!(in.kappa > 0.0) || !(in.k_max > 0.0) || !(in.D > 0.0) || !(in.c_mult > 0.0) || in.n_bar + in.m_bar < 1)
        throw Error(Errc::invalid_argument, "sample_threshold arguments must be positive");
    if (!(in.delta > 0.0 && in.delta < 1.0)) throw Error(Errc::invalid_argument, "delta must lie in (0, 1)");
    const double k = in.count == SparsityCount::per_row_and_column ? in.k_max * in.k_max : in.k_max;
    const double blocks = static_cast<double>(in.n_bar + in.m_bar);
    return in.c_mult * in.kappa * in.kappa * k *
           (in.D * std::log(blocks) + in.D * in.D * std::log(1.0 / in.delta));
}

inline Index sample_threshold(const SampleThresholdInputs& in) {
    return static_cast<Index>(std::ceil(sample_threshold_raw(in)));
}

inline AssumptionReport check_assumptions(const SystemModel& model, int T) {
    const auto cov = design_covariance(model, T);
    const Matrix theta = model.theta();
    const auto& partition = model.partition;
    const auto support = support_pattern(theta, partition, 0.0);

    AssumptionReport r;
    r.lambda_min = cov.lambda_min;
    r.lambda_max = cov.lambda_max;
    r.kappa = cov.kappa;
    r.sigma_max_sq = cov.sigma_max_sq;
    r.gamma = mutual_incoherence(cov.sigma_tilde, partition, support);
    r.t_min = min_block_magnitude(theta, partition);
    r.k_max = support.k_max();
    const double log_blocks = std::log(static_cast<double>(partition.row_blocks()));
    if (log_blocks > 0.0) {
        r.alpha_n = std::log(static_cast<double>(partition.n_max())) / log_blocks;
        r.alpha_m = partition.m_bar() > 0 ? std::log(static_cast<double>(partition.m_max())) / log_blocks : 0.0;
    }
    r.incoherence = r.gamma > 0.0;
    r.bounded_eigenvalue = r.lambda_max > 0.0 && r.lambda_min > 1e-10 * r.lambda_max;
    r.bounded_minimum = r.t_min > 0.0;
    return r;
}

}  // namespace blocksid
