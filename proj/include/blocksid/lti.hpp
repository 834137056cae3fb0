#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "blocksid/blockstruct.hpp"
#include "blocksid/error.hpp"
#include "blocksid/random.hpp"

namespace blocksid {

/// x[t+1] = A x[t] + B u[t] + w[t] with u ~ N(0, sigma_u), w ~ N(0, sigma_w).
struct SystemModel {
    Matrix A;
    Matrix B;
    Matrix sigma_u;
    Matrix sigma_w;
    BlockPartition partition;

    Index n() const noexcept { return A.rows(); }
    Index m() const noexcept { return B.cols(); }

    /// Theta* = [A B]^T, shape (n+m) x n.
    Matrix theta() const {
        Matrix t(n() + m(), n());
        t.topRows(n()) = A.transpose();
        t.bottomRows(m()) = B.transpose();
        return t;
    }

    void validate() const {
        const Index nn = A.rows();
        if (A.cols() != nn || B.rows() != nn)
            throw Error(Errc::shape_mismatch, "A must be n x n and B must be n x m");
        if (sigma_u.rows() != m() || sigma_u.cols() != m())
            throw Error(Errc::shape_mismatch, "sigma_u must be m x m");
        if (sigma_w.rows() != nn || sigma_w.cols() != nn)
            throw Error(Errc::shape_mismatch, "sigma_w must be n x n");
        if (partition.n() != nn || partition.m() != m())
            throw Error(Errc::shape_mismatch, "partition sizes do not sum to (n, m)");
        if (!A.allFinite() || !B.allFinite() || !sigma_u.allFinite() || !sigma_w.allFinite())
            throw Error(Errc::non_finite, "model has non-finite entries");
        check_psd(sigma_u, "sigma_u");
        check_psd(sigma_w, "sigma_w");
    }

private:
    static void check_psd(const Matrix& cov, const char* name) {
        if (cov.size() == 0) return;
        if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12)
            throw Error(Errc::not_psd, std::string(name) + " is not symmetric");
        Eigen::SelfAdjointEigenSolver<Matrix> eig(cov, Eigen::EigenvaluesOnly);
        const double scale = std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
        if (eig.eigenvalues().minCoeff() < -1e-12 * scale)
            throw Error(Errc::not_psd, std::string(name) + " has a negative eigenvalue");
    }
};

/// Last-step regression data: row i of X is [x_i[T-1]^T u_i[T-1]^T], row i of
/// Y is x_i[T]^T and row i of W is the disturbance w_i[T-1]^T, so that
/// Y = X Theta* + W.
struct TrajectoryBatch {
    Matrix X;
    Matrix Y;
    Matrix W;  // may be empty when loaded from a file
    int T = 0;
    std::uint64_t seed = 0;

    Index d() const noexcept { return X.rows(); }
};

struct CovarianceReport {
    Matrix sigma_tilde;
    Matrix F_T;
    Matrix G_T;
    double kappa = 0.0;
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    double sigma_max_sq = 0.0;
};

namespace detail {

/// Extreme eigenvalues and condition number of a symmetric PSD matrix; the
/// condition number is infinite when lambda_min <= 1e-10 * lambda_max.
struct Spectrum {
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    double kappa = 0.0;
};

inline Spectrum spectrum(const Matrix& sym) {
    Spectrum s;
    if (sym.size() == 0) return s;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
    s.lambda_min = eig.eigenvalues().minCoeff();
    s.lambda_max = eig.eigenvalues().maxCoeff();
    s.kappa = (s.lambda_max > 0.0 && s.lambda_min > 1e-10 * s.lambda_max)
                  ? s.lambda_max / s.lambda_min
                  : std::numeric_limits<double>::infinity();
    return s;
}

}  // namespace detail

inline TrajectoryBatch simulate_batch(const SystemModel& model, int T, Index d, std::uint64_t seed) {
    if (T < 2) throw Error(Errc::invalid_argument, "horizon T must be at least 2");
    if (d < 1) throw Error(Errc::invalid_argument, "trajectory count d must be at least 1");
    model.validate();
    const Index n = model.n();
    const Index m = model.m();
    const GaussianSampler input(model.sigma_u);
    const GaussianSampler noise(model.sigma_w);

    TrajectoryBatch batch;
    batch.X.resize(d, n + m);
    batch.Y.resize(d, n);
    batch.W.resize(d, n);
    batch.T = T;
    batch.seed = seed;

    // One substream per trajectory, so any evaluation order gives the same batch.
    for (Index i = 0; i < d; ++i) {
        Engine rng = substream(seed, static_cast<std::uint64_t>(i));
        Vector x = Vector::Zero(n);
        for (int t = 0; t < T - 1; ++t) {  // realizes x[T-1]
            const Vector u = input(rng);
            const Vector w = noise(rng);
            x = model.A * x + model.B * u + w;
        }
        const Vector u = input(rng);
        batch.X.row(i).head(n) = x.transpose();
        batch.X.row(i).tail(m) = u.transpose();
        const Vector w = noise(rng);
        batch.W.row(i) = w.transpose();
        batch.Y.row(i) = (model.A * x + model.B * u + w).transpose();
    }
    return batch;
}

inline CovarianceReport design_covariance(const SystemModel& model, int T) {
    if (T < 2) throw Error(Errc::invalid_argument, "horizon T must be at least 2");
    model.validate();
    const Index n = model.n();
    const Index m = model.m();
    const Index steps = T - 1;

    CovarianceReport r;
    r.F_T.resize(n, m * steps);
    r.G_T.resize(n, n * steps);
    // Column block k holds A^{T-2-k} B (resp. A^{T-2-k}), so the last block is B (resp. I).
    Matrix power = Matrix::Identity(n, n);
    for (Index k = steps - 1; k >= 0; --k) {
        r.F_T.middleCols(k * m, m) = power * model.B;
        r.G_T.middleCols(k * n, n) = power;
        power = model.A * power;
    }

    Matrix state_cov = Matrix::Zero(n, n);
    for (Index k = 0; k < steps; ++k) {
        const auto F = r.F_T.middleCols(k * m, m);
        const auto G = r.G_T.middleCols(k * n, n);
        state_cov.noalias() += F * model.sigma_u * F.transpose();
        state_cov.noalias() += G * model.sigma_w * G.transpose();
    }
    state_cov = 0.5 * (state_cov + state_cov.transpose()).eval();

    r.sigma_tilde = Matrix::Zero(n + m, n + m);
    r.sigma_tilde.topLeftCorner(n, n) = state_cov;
    r.sigma_tilde.bottomRightCorner(m, m) = model.sigma_u;

    const auto s = detail::spectrum(r.sigma_tilde);
    r.lambda_min = s.lambda_min;
    r.lambda_max = s.lambda_max;
    r.kappa = s.kappa;
    r.sigma_max_sq = r.sigma_tilde.diagonal().maxCoeff();
    return r;
}

/// kappa(F_T F_T^T + G_T G_T^T): the identity-covariance excitation
/// conditioning of the state part.
inline double excitation_condition_number(const SystemModel& model, int T) {
    const auto r = design_covariance(model, T);
    const Matrix gram = r.F_T * r.F_T.transpose() + r.G_T * r.G_T.transpose();
    return detail::spectrum(gram).kappa;
}

// ---------------------------------------------------------------------------
// Benchmark generators
// ---------------------------------------------------------------------------

/// Banded random system with unit blocks and m = n. Diagonals of A and B are 1,
/// the first w off-diagonals are +-0.3, and every row of A gets w more +-0.3
/// entries outside the band.
inline SystemModel gen_synthetic(Index n, Index w, std::uint64_t seed) {
    if (w < 0) throw Error(Errc::invalid_argument, "band width must be nonnegative");
    if (n < 2 * w + 1) throw Error(Errc::invalid_argument, "n must be at least 2w+1");
    // Interior rows have n - (2w+1) positions outside the band and need w of them.
    if (w > 0 && n - (2 * w + 1) < w)
        throw Error(Errc::invalid_argument, "n too small for band plus w extra entries per row");
    constexpr double magnitude = 0.3;
    Engine rng = substream(seed, 0);

    SystemModel model;
    model.A = Matrix::Identity(n, n);
    model.B = Matrix::Identity(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = std::max<Index>(0, i - w); j <= std::min(n - 1, i + w); ++j) {
            if (j == i) continue;
            model.A(i, j) = magnitude * random_sign(rng);
            model.B(i, j) = magnitude * random_sign(rng);
        }
    }
    for (Index i = 0; i < n; ++i) {
        std::vector<Index> outside;
        for (Index j = 0; j < n; ++j)
            if (std::abs(j - i) > w) outside.push_back(j);
        // Partial Fisher-Yates: the first w entries become a uniform sample.
        for (Index k = 0; k < w; ++k) {
            std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(k), outside.size() - 1);
            std::swap(outside[static_cast<std::size_t>(k)], outside[pick(rng)]);
            model.A(i, outside[static_cast<std::size_t>(k)]) = magnitude * random_sign(rng);
        }
    }
    model.sigma_u = Matrix::Identity(n, n);
    model.sigma_w = 0.5 * Matrix::Identity(n, n);
    model.partition = BlockPartition::unit(n, n);
    return model;
}

/// Path of N unit masses and unit springs, forward-Euler discretized with
/// step dt. States are positions then velocities; inputs are forces.
inline SystemModel gen_mass_spring(Index N, double dt) {
    if (N < 1) throw Error(Errc::invalid_argument, "mass count must be at least 1");
    if (!(dt > 0.0)) throw Error(Errc::invalid_argument, "sampling time must be positive");
    Matrix S = Matrix::Zero(N, N);
    for (Index i = 0; i < N; ++i) {
        S(i, i) = -2.0;
        if (i + 1 < N) S(i, i + 1) = S(i + 1, i) = 1.0;
    }
    Matrix Ac = Matrix::Zero(2 * N, 2 * N);
    Ac.topRightCorner(N, N) = Matrix::Identity(N, N);
    Ac.bottomLeftCorner(N, N) = S;
    Matrix Bc = Matrix::Zero(2 * N, N);
    Bc.bottomRows(N) = Matrix::Identity(N, N);

    SystemModel model;
    model.A = Matrix::Identity(2 * N, 2 * N) + dt * Ac;
    model.B = dt * Bc;
    model.sigma_u = Matrix::Identity(N, N);
    model.sigma_w = 0.5 * Matrix::Identity(2 * N, 2 * N);
    model.partition = BlockPartition::unit(2 * N, N);
    return model;
}

/// Neighbor lists of the multi-agent generator: agent i followed by `degree`
/// distinct other agents drawn uniformly (directed graph).
inline std::vector<std::vector<Index>> sample_agent_neighbors(Index agents, Index degree, Engine& rng) {
    std::vector<std::vector<Index>> neighbors(static_cast<std::size_t>(agents));
    for (Index i = 0; i < agents; ++i) {
        std::vector<Index> others;
        for (Index j = 0; j < agents; ++j)
            if (j != i) others.push_back(j);
        auto& list = neighbors[static_cast<std::size_t>(i)];
        list.push_back(i);
        for (Index k = 0; k < degree; ++k) {
            std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(k), others.size() - 1);
            std::swap(others[static_cast<std::size_t>(k)], others[pick(rng)]);
            list.push_back(others[static_cast<std::size_t>(k)]);
        }
    }
    return neighbors;
}

/// Network of `agents` subsystems with state size state_size and input size
/// input_size. Each agent couples to itself and `degree` random neighbors in
/// both A and B; populated continuous-time entries are uniform on
/// [-0.4, -0.3] U [0.3, 0.4]. Discretized by forward Euler with step dt.
inline SystemModel gen_multi_agent(Index agents, Index degree, Index state_size, Index input_size, double dt,
                                   std::uint64_t seed) {
    if (agents < 1) throw Error(Errc::invalid_argument, "agent count must be at least 1");
    if (degree < 0 || degree >= agents) throw Error(Errc::invalid_argument, "degree must be in [0, agents)");
    if (state_size < 1 || input_size < 1) throw Error(Errc::invalid_argument, "agent sizes must be positive");
    if (!(dt > 0.0)) throw Error(Errc::invalid_argument, "sampling time must be positive");

    Engine rng = substream(seed, 0);
    const auto neighbors = sample_agent_neighbors(agents, degree, rng);
    std::uniform_real_distribution<double> magnitude(0.3, 0.4);
    auto entry = [&] {
        const double mag = magnitude(rng);
        return mag * random_sign(rng);
    };

    const Index n = agents * state_size;
    const Index m = agents * input_size;
    Matrix Ac = Matrix::Zero(n, n);
    Matrix Bc = Matrix::Zero(n, m);
    for (Index i = 0; i < agents; ++i) {
        for (Index j : neighbors[static_cast<std::size_t>(i)]) {
            for (Index r = 0; r < state_size; ++r) {
                for (Index c = 0; c < state_size; ++c) Ac(i * state_size + r, j * state_size + c) = entry();
                for (Index c = 0; c < input_size; ++c) Bc(i * state_size + r, j * input_size + c) = entry();
            }
        }
    }

    SystemModel model;
    model.A = Matrix::Identity(n, n) + dt * Ac;
    model.B = dt * Bc;
    model.sigma_u = Matrix::Identity(m, m);
    model.sigma_w = 0.5 * Matrix::Identity(n, n);
    model.partition = BlockPartition::uniform(agents, agents, state_size, input_size);
    return model;
}

}  // namespace blocksid
