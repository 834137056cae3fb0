#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <span>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "blocksid/blockstruct.hpp"
#include "blocksid/error.hpp"
#include "blocksid/lti.hpp"
#include "blocksid/prox.hpp"
#include "blocksid/random.hpp"

namespace blocksid {

enum class StepPolicy { fixed_lipschitz, backtracking };

struct EstimatorConfig {
    double lambda_d = 0.0;
    int max_iter = 50000;
    double kkt_tol = 1e-7;
    double zero_tol = default_zero_tol;
    StepPolicy step_policy = StepPolicy::backtracking;
    /// Column-block subproblems solved concurrently; results do not depend on it.
    int workers = 1;

    void validate() const {
        if (!(lambda_d >= 0.0) || !std::isfinite(lambda_d))
            throw Error(Errc::invalid_argument, "lambda_d must be finite and nonnegative");
        if (max_iter < 1) throw Error(Errc::invalid_argument, "max_iter must be at least 1");
        if (!(kkt_tol > 0.0)) throw Error(Errc::invalid_argument, "kkt_tol must be positive");
        if (!(zero_tol >= 0.0)) throw Error(Errc::invalid_argument, "zero_tol must be nonnegative");
        if (workers < 1) throw Error(Errc::invalid_argument, "workers must be at least 1");
    }
};

struct EstimateResult {
    Matrix theta_hat;
    BlockSupport support;
    double objective = 0.0;
    double kkt_residual = 0.0;
    std::vector<int> iterations;  // one entry per column block
    bool converged = false;
};

struct DualNorm {
    Index row_block = 0;
    Index col_block = 0;
    double value = 0.0;
};

struct PdwReport {
    std::vector<DualNorm> dual_norms;  // off-support blocks only
    bool success = true;
    double gamma_margin = 1.0;
    Matrix restricted_theta;  // Step 1 solution, zero off the support
    Matrix witness;           // full dual S-tilde
    bool restricted_converged = true;
};

namespace detail {

/// Sufficient statistics of the least-squares loss (1/2d)||Y - X Theta||^2:
/// gram = X^T X / d and cross = X^T Y / d.
struct Moments {
    Matrix gram;
    Matrix cross;
    double y_energy = 0.0;  // ||Y||_F^2 / (2d)
};

inline void check_batch(const TrajectoryBatch& batch, const BlockPartition& partition) {
    const Index p = partition.n() + partition.m();
    if (batch.X.cols() != p || batch.Y.cols() != partition.n() || batch.X.rows() != batch.Y.rows())
        throw Error(Errc::shape_mismatch, "batch shapes do not match the partition");
    if (batch.X.rows() < 1) throw Error(Errc::invalid_argument, "batch is empty");
    if (!batch.X.allFinite() || !batch.Y.allFinite()) throw Error(Errc::non_finite, "batch has non-finite entries");
}

inline Moments moments(const TrajectoryBatch& batch) {
    const double d = static_cast<double>(batch.d());
    Moments mo;
    mo.gram = Matrix::Zero(batch.X.cols(), batch.X.cols());
    mo.gram.selfadjointView<Eigen::Lower>().rankUpdate(batch.X.transpose(), 1.0 / d);
    mo.gram = mo.gram.selfadjointView<Eigen::Lower>();
    mo.cross = batch.X.transpose() * batch.Y / d;
    mo.y_energy = batch.Y.squaredNorm() / (2.0 * d);
    return mo;
}

/// Largest eigenvalue of a PSD matrix by power iteration from a fixed
/// pseudo-random start (50 iterations, 1e-10 relative tolerance).
inline double power_iteration(const Matrix& sym, int iterations = 50, double tol = 1e-10) {
    if (sym.size() == 0) return 0.0;
    Engine rng = substream(0x6c697073ULL, 0);
    std::uniform_real_distribution<double> unif(0.5, 1.5);
    Vector v(sym.rows());
    for (Index k = 0; k < v.size(); ++k) v[k] = unif(rng);
    v.normalize();
    double lambda = 0.0;
    for (int it = 0; it < iterations; ++it) {
        const Vector w = sym * v;
        const double next = v.dot(w);
        const double norm = w.norm();
        if (norm == 0.0) return 0.0;
        v = w / norm;
        const bool done = std::abs(next - lambda) <= tol * std::max(1.0, std::abs(next));
        lambda = next;
        if (done) break;
    }
    return lambda;
}

/// Euclidean distance from the scaled negative gradient block s to the
/// subdifferential of max-abs at a nonzero block x: s must vanish off the
/// argmax set M and s_k * sign(x_k) must lie in the simplex on M.
inline double nonzero_block_distance(const Vector& x, const Vector& s) {
    const double top = x.cwiseAbs().maxCoeff();
    const double cut = top * (1.0 - 1e-9);
    double off = 0.0;
    std::vector<double> on;
    for (Index k = 0; k < x.size(); ++k) {
        if (std::abs(x[k]) >= cut)
            on.push_back(s[k] * (x[k] > 0.0 ? 1.0 : -1.0));
        else
            off += s[k] * s[k];
    }
    const Eigen::Map<const Vector> q(on.data(), static_cast<Index>(on.size()));
    const Vector eta = project_simplex(q);
    return std::sqrt(off + (q - eta).squaredNorm());
}

/// Block-wise KKT residual for a p x c iterate with gradient `grad`, over
/// the local block grid rows x cols. Scaled back to gradient units by lambda.
inline double block_kkt_residual(const Matrix& theta, const Matrix& grad, std::span<const IndexRange> rows,
                                 std::span<const IndexRange> cols, double lambda) {
    if (lambda == 0.0) return grad.size() == 0 ? 0.0 : grad.cwiseAbs().maxCoeff();
    double worst = 0.0;
    Vector x, g;
    for (const auto& c : cols) {
        for (const auto& r : rows) {
            x = theta.block(r.begin, c.begin, r.size(), c.size()).reshaped();
            g = grad.block(r.begin, c.begin, r.size(), c.size()).reshaped();
            double res = 0.0;
            if ((x.array() == 0.0).all()) {
                res = std::max(0.0, g.cwiseAbs().sum() - lambda);
            } else {
                const Vector s = -g / lambda;
                res = lambda * nonzero_block_distance(x, s);
            }
            worst = std::max(worst, res);
        }
    }
    return worst;
}

/// out = G * x, skipping row blocks of x that are identically zero.
inline void gram_times(const Matrix& G, const Matrix& x, std::span<const IndexRange> rows,
                       std::span<const IndexRange> cols, Matrix& out) {
    out.setZero(G.rows(), x.cols());
    for (const auto& c : cols) {
        for (const auto& r : rows) {
            const auto blk = x.block(r.begin, c.begin, r.size(), c.size());
            if ((blk.array() == 0.0).all()) continue;
            out.middleCols(c.begin, c.size()).noalias() += G.middleCols(r.begin, r.size()) * blk;
        }
    }
}

inline void prox_blocks(Matrix& z, std::span<const IndexRange> rows, std::span<const IndexRange> cols,
                        double tau) {
    if (tau == 0.0) return;
    for (const auto& c : cols) {
        for (const auto& r : rows) {
            auto blk = z.block(r.begin, c.begin, r.size(), c.size());
            const Vector out = prox_linf(blk, tau);
            blk = out.reshaped(r.size(), c.size());
        }
    }
}

struct FistaOutcome {
    Matrix theta;
    int iterations = 0;
    double residual = 0.0;
    bool converged = false;
};

/**
 * Accelerated proximal gradient with gradient-based adaptive restart for
 *
 *   min_Theta  1/2 tr(Theta^T G Theta) - tr(C^T Theta) + lambda * sum_blocks max|Theta_block|
 *
 * over a p x c variable whose blocks are rows x cols. Stops once the block KKT
 * residual drops to config.kkt_tol or after config.max_iter iterations.
 */
inline FistaOutcome fista(const Matrix& G, const Matrix& C, std::span<const IndexRange> rows,
                          std::span<const IndexRange> cols, double lambda, double lipschitz,
                          const EstimatorConfig& config) {
    const Index p = G.rows();
    const Index c = C.cols();
    double L = lipschitz > 0.0 ? lipschitz : 1.0;

    FistaOutcome out;
    Matrix x = Matrix::Zero(p, c);
    Matrix Gx = Matrix::Zero(p, c);
    Matrix y = x;
    Matrix Gy = Gx;
    Matrix x_new(p, c), Gx_new(p, c), grad(p, c);

    grad = -C;
    out.residual = block_kkt_residual(x, grad, rows, cols, lambda);
    if (out.residual <= config.kkt_tol) {
        out.theta = std::move(x);
        out.converged = true;
        return out;
    }

    double t = 1.0;
    for (int it = 1; it <= config.max_iter; ++it) {
        grad = Gy - C;
        for (;;) {
            x_new = y - grad / L;
            prox_blocks(x_new, rows, cols, lambda / L);
            gram_times(G, x_new, rows, cols, Gx_new);
            if (config.step_policy == StepPolicy::fixed_lipschitz) break;
            // The loss is quadratic, so the descent-lemma gap is exactly
            // 1/2 <dx, G dx> - L/2 ||dx||^2.
            const double curvature = (x_new - y).cwiseProduct(Gx_new - Gy).sum();
            const double bound = L * (x_new - y).squaredNorm();
            if (curvature <= bound * (1.0 + 1e-9)) break;
            L *= 2.0;
        }
        out.iterations = it;
        grad = Gx_new - C;
        out.residual = block_kkt_residual(x_new, grad, rows, cols, lambda);
        if (out.residual <= config.kkt_tol) {
            out.converged = true;
            x.swap(x_new);
            break;
        }
        if ((y - x_new).cwiseProduct(x_new - x).sum() > 0.0) {
            t = 1.0;
            y = x_new;
            Gy = Gx_new;
        } else {
            const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
            const double beta = (t - 1.0) / t_next;
            y = x_new + beta * (x_new - x);
            if (it % 256 == 0)
                gram_times(G, y, rows, cols, Gy);
            else
                Gy = Gx_new + beta * (Gx_new - Gx);
            t = t_next;
        }
        x.swap(x_new);
        Gx.swap(Gx_new);
    }
    out.theta = std::move(x);
    return out;
}

inline std::vector<IndexRange> row_ranges(const BlockPartition& partition) {
    std::vector<IndexRange> rows;
    for (Index i = 0; i < partition.row_blocks(); ++i) rows.push_back(partition.row_range(i));
    return rows;
}

inline std::vector<IndexRange> col_ranges(const BlockPartition& partition) {
    std::vector<IndexRange> cols;
    for (Index j = 0; j < partition.col_blocks(); ++j) cols.push_back(partition.col_range(j));
    return cols;
}

/// Runs body(k) for k in [0, count) on up to `workers` threads.
template <class Body>
void parallel_for(Index count, int workers, Body&& body) {
    const int threads = static_cast<int>(std::min<Index>(std::max(workers, 1), count));
    if (threads <= 1) {
        for (Index k = 0; k < count; ++k) body(k);
        return;
    }
    std::atomic<Index> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    {
        std::vector<std::jthread> pool;
        for (int w = 0; w < threads; ++w) {
            pool.emplace_back([&] {
                for (Index k = next++; k < count; k = next++) {
                    try {
                        body(k);
                    } catch (...) {
                        if (!failed.exchange(true)) failure = std::current_exception();
                    }
                }
            });
        }
    }
    if (failure) std::rethrow_exception(failure);
}

inline double objective(const Moments& mo, const Matrix& theta, const BlockPartition& partition, double lambda) {
    const double quad = 0.5 * (theta.transpose() * mo.gram * theta).trace() - (mo.cross.transpose() * theta).trace();
    return mo.y_energy + quad + lambda * block_norm_sum(theta, partition);
}

inline double kkt_residual(const Moments& mo, const Matrix& theta, const BlockPartition& partition, double lambda) {
    const Matrix grad = mo.gram * theta - mo.cross;
    const auto rows = row_ranges(partition);
    const auto cols = col_ranges(partition);
    return block_kkt_residual(theta, grad, rows, cols, lambda);
}

inline EstimateResult finalize(const TrajectoryBatch& batch, const BlockPartition& partition, const Moments& mo,
                               const EstimatorConfig& config, Matrix theta) {
    EstimateResult result;
    const Matrix residual = batch.Y - batch.X * theta;
    result.objective = residual.squaredNorm() / (2.0 * static_cast<double>(batch.d())) +
                       config.lambda_d * block_norm_sum(theta, partition);
    result.kkt_residual = kkt_residual(mo, theta, partition, config.lambda_d);
    result.support = support_pattern(theta, partition, config.zero_tol);
    result.theta_hat = std::move(theta);
    return result;
}

}  // namespace detail

/// (1/2d)||Y - X Theta||_F^2 + lambda * ||Theta||_block.
inline double block_objective(const Matrix& theta, const TrajectoryBatch& batch, const BlockPartition& partition,
                              double lambda) {
    detail::check_batch(batch, partition);
    partition.check_shape(theta.rows(), theta.cols());
    const Matrix residual = batch.Y - batch.X * theta;
    return residual.squaredNorm() / (2.0 * static_cast<double>(batch.d())) +
           lambda * block_norm_sum(theta, partition);
}

/**
 * Block-regularized least squares
 *
 *   argmin_Theta (1/2d)||Y - X Theta||_F^2 + lambda_d * sum_{i,j} max|Theta^{(i,j)}|
 *
 * solved independently per column block by accelerated proximal gradient.
 * Hitting max_iter is reported through `converged`, not thrown.
 */
inline EstimateResult solve_block_regularized(const TrajectoryBatch& batch, const BlockPartition& partition,
                                              const EstimatorConfig& config) {
    config.validate();
    detail::check_batch(batch, partition);
    const auto mo = detail::moments(batch);
    const double lipschitz = detail::power_iteration(mo.gram);
    const auto rows = detail::row_ranges(partition);

    const Index p = partition.n() + partition.m();
    Matrix theta = Matrix::Zero(p, partition.n());
    std::vector<int> iterations(static_cast<std::size_t>(partition.col_blocks()), 0);
    std::vector<char> converged(iterations.size(), 0);

    detail::parallel_for(partition.col_blocks(), config.workers, [&](Index j) {
        const auto cr = partition.col_range(j);
        const Matrix C = mo.cross.middleCols(cr.begin, cr.size());
        const IndexRange local{0, cr.size()};
        auto sub = detail::fista(mo.gram, C, rows, std::span<const IndexRange>(&local, 1), config.lambda_d,
                                 lipschitz, config);
        theta.middleCols(cr.begin, cr.size()) = sub.theta;
        iterations[static_cast<std::size_t>(j)] = sub.iterations;
        converged[static_cast<std::size_t>(j)] = sub.converged ? 1 : 0;
    });

    auto result = detail::finalize(batch, partition, mo, config, std::move(theta));
    result.iterations = std::move(iterations);
    result.converged = std::all_of(converged.begin(), converged.end(), [](char c) { return c != 0; });
    return result;
}

/// Same objective solved as one joint problem over all column blocks (shared
/// step size, momentum and stopping rule). Used to cross-check separability.
inline EstimateResult solve_block_regularized_joint(const TrajectoryBatch& batch, const BlockPartition& partition,
                                                    const EstimatorConfig& config) {
    config.validate();
    detail::check_batch(batch, partition);
    const auto mo = detail::moments(batch);
    const double lipschitz = detail::power_iteration(mo.gram);
    const auto rows = detail::row_ranges(partition);
    const auto cols = detail::col_ranges(partition);
    auto sub = detail::fista(mo.gram, mo.cross, rows, cols, config.lambda_d, lipschitz, config);
    auto result = detail::finalize(batch, partition, mo, config, std::move(sub.theta));
    result.iterations = {sub.iterations};
    result.converged = sub.converged;
    return result;
}

/// Theta_ls = (X^T X)^{-1} X^T Y via column-pivoted QR of X. Undefined unless
/// d >= n+m and X has full column rank.
inline Matrix solve_least_squares(const TrajectoryBatch& batch) {
    const Index p = batch.X.cols();
    if (batch.X.rows() != batch.Y.rows()) throw Error(Errc::shape_mismatch, "X and Y row counts differ");
    if (!batch.X.allFinite() || !batch.Y.allFinite()) throw Error(Errc::non_finite, "batch has non-finite entries");
    if (batch.d() < p)
        throw Error(Errc::ls_undefined, "d = " + std::to_string(batch.d()) + " < n+m = " + std::to_string(p));
    Eigen::ColPivHouseholderQR<Matrix> qr(batch.X);
    if (qr.rank() < p) throw Error(Errc::ls_undefined, "X^T X is singular (rank " + std::to_string(qr.rank()) + ")");
    return qr.solve(batch.Y);
}

/// Block-wise distance of the scaled negative gradient -(1/d)X^T(X Theta - Y)/lambda
/// to the subdifferential of ||Theta||_block, times lambda. Zero blocks
/// contribute max(0, ||grad block||_1 - lambda). With lambda = 0 this is the
/// max-abs gradient entry.
inline double kkt_residual(const Matrix& theta, const TrajectoryBatch& batch, const BlockPartition& partition,
                           double lambda) {
    detail::check_batch(batch, partition);
    partition.check_shape(theta.rows(), theta.cols());
    if (!(lambda >= 0.0)) throw Error(Errc::invalid_argument, "lambda must be nonnegative");
    return detail::kkt_residual(detail::moments(batch), theta, partition, lambda);
}

/**
 * Primal-dual witness construction for a known block support.
 *
 * Per column block: solve the problem restricted to the support, take the
 * restricted KKT multiplier as the on-support dual, extend it off the
 * support through the KKT equations, and check every off-support dual block
 * has l1 norm strictly below 1.
 */
inline PdwReport pdw_check(const TrajectoryBatch& batch, const BlockPartition& partition, double lambda,
                           const BlockSupport& true_support, const EstimatorConfig& config) {
    config.validate();
    detail::check_batch(batch, partition);
    if (!(lambda > 0.0)) throw Error(Errc::invalid_argument, "pdw_check needs lambda > 0");
    if (true_support.rows() != partition.row_blocks() || true_support.cols() != partition.col_blocks())
        throw Error(Errc::shape_mismatch, "support shape does not match the partition");

    const auto mo = detail::moments(batch);
    const Index p = partition.n() + partition.m();
    PdwReport report;
    report.restricted_theta = Matrix::Zero(p, partition.n());
    report.witness = Matrix::Zero(p, partition.n());

    double worst = 0.0;
    for (Index j = 0; j < partition.col_blocks(); ++j) {
        const auto cr = partition.col_range(j);
        const auto active = true_support.active_rows(j);
        const auto inactive = true_support.inactive_rows(j);
        const auto on = scalar_rows(partition, active);
        const Index q = static_cast<Index>(on.size());

        Matrix theta_on = Matrix::Zero(q, cr.size());
        if (q > 0) {
            const Matrix G_on = mo.gram(on, on);
            Eigen::LDLT<Matrix> ldlt(G_on);
            const Vector diag = ldlt.vectorD();
            const double scale = std::max(diag.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
            if (ldlt.info() != Eigen::Success || diag.minCoeff() <= 1e-12 * scale)
                throw Error(Errc::witness_undefined,
                            "restricted design is rank-deficient in column block " + std::to_string(j));

            std::vector<IndexRange> local_rows;
            Index offset = 0;
            for (Index i : active) {
                const Index size = partition.row_block_size(i);
                local_rows.push_back({offset, offset + size});
                offset += size;
            }
            const IndexRange local_col{0, cr.size()};
            const Matrix C_on = mo.cross(on, Eigen::seqN(cr.begin, cr.size()));
            auto sub = detail::fista(G_on, C_on, local_rows, std::span<const IndexRange>(&local_col, 1), lambda,
                                     detail::power_iteration(G_on), config);
            report.restricted_converged = report.restricted_converged && sub.converged;
            theta_on = std::move(sub.theta);
        }

        // Dual on the support is the restricted multiplier -grad_A / lambda;
        // off the support the KKT equations give -grad_{A^c} / lambda.
        Matrix grad = -mo.cross.middleCols(cr.begin, cr.size());
        if (q > 0) grad.noalias() += mo.gram(Eigen::all, on) * theta_on;
        const Matrix dual = -grad / lambda;
        report.witness.middleCols(cr.begin, cr.size()) = dual;
        for (Index k = 0; k < q; ++k)
            report.restricted_theta.row(on[static_cast<std::size_t>(k)]).segment(cr.begin, cr.size()) = theta_on.row(k);

        for (Index i : inactive) {
            const auto rr = partition.row_range(i);
            const double norm = dual.middleRows(rr.begin, rr.size()).cwiseAbs().sum();
            report.dual_norms.push_back({i, j, norm});
            worst = std::max(worst, norm);
        }
    }
    report.success = std::all_of(report.dual_norms.begin(), report.dual_norms.end(),
                                 [](const DualNorm& dn) { return dn.value < 1.0; });
    report.gamma_margin = 1.0 - worst;
    return report;
}

}  // namespace blocksid
