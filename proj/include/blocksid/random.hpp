#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "blocksid/error.hpp"

namespace blocksid {

using Engine = std::mt19937_64;

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed of substream `stream` under `master`. Distinct (master, stream)
/// pairs give statistically independent engines.
inline constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept {
    return splitmix64(splitmix64(master) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

inline Engine substream(std::uint64_t master, std::uint64_t stream) {
    return Engine(derive_seed(master, stream));
}

/// Uniform sign in {-1, +1}.
inline double random_sign(Engine& rng) { return (rng() & 1ULL) ? 1.0 : -1.0; }

/// Draws from N(0, cov) via a spectral square root of cov. Singular
/// (positive semidefinite) covariances are allowed.
class GaussianSampler {
public:
    explicit GaussianSampler(const Eigen::MatrixXd& cov) {
        if (cov.rows() != cov.cols()) throw Error(Errc::shape_mismatch, "covariance must be square");
        if (!cov.allFinite()) throw Error(Errc::non_finite, "covariance has non-finite entries");
        if (cov.size() > 0 && (cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12)
            throw Error(Errc::not_psd, "covariance is not symmetric");
        if (cov.size() == 0) return;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
        const Eigen::VectorXd& ev = eig.eigenvalues();
        const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
        if (ev.minCoeff() < -1e-12 * scale) throw Error(Errc::not_psd, "covariance has a negative eigenvalue");
        factor_ = eig.eigenvectors() * ev.cwiseMax(0.0).cwiseSqrt().asDiagonal();
    }

    Eigen::Index dim() const noexcept { return factor_.rows(); }

    Eigen::VectorXd operator()(Engine& rng) const {
        std::normal_distribution<double> normal;
        Eigen::VectorXd z(factor_.cols());
        for (Eigen::Index k = 0; k < z.size(); ++k) z[k] = normal(rng);
        return factor_ * z;
    }

private:
    Eigen::MatrixXd factor_;
};

}  // namespace blocksid
