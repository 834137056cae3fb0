#pragma once

#include <Eigen/Dense>

#include "blocksid/blockstruct.hpp"
#include "blocksid/error.hpp"

namespace blocksid {

struct ErrorReport {
    double linf_elementwise = 0.0;
    double op_norm = 0.0;
    double frob = 0.0;
    double normalized_2 = 0.0;
};

/// Number of false-positive plus false-negative blocks.
inline Index mismatch_error(const BlockSupport& est, const BlockSupport& truth) {
    if (est.rows() != truth.rows() || est.cols() != truth.cols())
        throw Error(Errc::shape_mismatch, "support masks differ in shape");
    Index count = 0;
    for (Index i = 0; i < est.rows(); ++i)
        for (Index j = 0; j < est.cols(); ++j) count += est(i, j) != truth(i, j) ? 1 : 0;
    return count;
}

/// Relative mismatch error: mismatch / ((nbar+mbar) * nbar).
inline double rme(Index mismatch, const BlockPartition& partition) {
    const Index total = partition.row_blocks() * partition.col_blocks();
    if (mismatch < 0 || mismatch > total) throw Error(Errc::invalid_argument, "mismatch exceeds the block count");
    return static_cast<double>(mismatch) / static_cast<double>(total);
}

/// Relative number of sample trajectories d / (n+m).
inline double rst(Index d, Index n, Index m) {
    if (n + m <= 0) throw Error(Errc::invalid_argument, "system dimension must be positive");
    return static_cast<double>(d) / static_cast<double>(n + m);
}

inline double operator_norm(const Matrix& M) {
    if (M.size() == 0) return 0.0;
    Eigen::BDCSVD<Matrix> svd(M);
    return svd.singularValues()(0);
}

inline ErrorReport error_norms(const Matrix& theta_hat, const Matrix& theta_star) {
    if (theta_hat.rows() != theta_star.rows() || theta_hat.cols() != theta_star.cols())
        throw Error(Errc::shape_mismatch, "estimate and truth differ in shape");
    const double reference = operator_norm(theta_star);
    if (!(reference > 0.0)) throw Error(Errc::invalid_argument, "normalized error needs a nonzero truth");
    const Matrix diff = theta_hat - theta_star;
    ErrorReport r;
    r.linf_elementwise = diff.size() ? diff.cwiseAbs().maxCoeff() : 0.0;
    r.op_norm = operator_norm(diff);
    r.frob = diff.norm();
    r.normalized_2 = r.op_norm / reference;
    return r;
}

}  // namespace blocksid
