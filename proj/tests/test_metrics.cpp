#include <random>

#include <gtest/gtest.h>

#include "blocksid/metrics.hpp"
#include "oracles.hpp"

using namespace blocksid;

namespace {

BlockSupport random_mask(Index rows, Index cols, std::mt19937_64& rng) {
    std::bernoulli_distribution on(0.4);
    BlockSupport s(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) s.set(i, j, on(rng));
    return s;
}

}  // namespace

TEST(Mismatch, Examples) {
    std::mt19937_64 rng(1);
    const auto a = random_mask(6, 4, rng);
    EXPECT_EQ(mismatch_error(a, a), 0);

    BlockSupport truth(5, 3);
    truth.set(0, 0, true);
    truth.set(4, 2, true);
    EXPECT_EQ(mismatch_error(BlockSupport(5, 3, true), truth), 13);

    BlockSupport x(4, 2), y(4, 2);
    x.set(0, 0, true);
    x.set(1, 0, true);
    y.set(3, 1, true);
    EXPECT_EQ(mismatch_error(x, y), 3);
    EXPECT_THROW(mismatch_error(x, BlockSupport(4, 3)), Error);
}

TEST(Mismatch, MetricProperties) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 200; ++trial) {
        const auto a = random_mask(5, 4, rng), b = random_mask(5, 4, rng), c = random_mask(5, 4, rng);
        EXPECT_EQ(mismatch_error(a, b), mismatch_error(b, a));
        EXPECT_LE(mismatch_error(a, c), mismatch_error(a, b) + mismatch_error(b, c));
    }
}

TEST(Rme, Examples) {
    const auto part = BlockPartition::unit(100, 100);
    EXPECT_EQ(rme(0, part), 0.0);
    EXPECT_DOUBLE_EQ(rme(40, part), 0.002);
    EXPECT_EQ(rme(20000, part), 1.0);
    EXPECT_THROW(rme(20001, part), Error);
    EXPECT_DOUBLE_EQ(rme(3, BlockPartition({2, 2}, {1})), 0.5);
}

TEST(Rst, Examples) {
    EXPECT_DOUBLE_EQ(rst(400, 100, 100), 2.0);
    EXPECT_EQ(rst(0, 3, 4), 0.0);
    // Mass-spring: n = 2N, m = N, so the ratio is d / (3N).
    const Index N = 30, d = 270;
    EXPECT_DOUBLE_EQ(rst(d, 2 * N, N), 3.0);
    EXPECT_THROW(rst(5, 0, 0), Error);
}

TEST(ErrorNorms, Examples) {
    std::mt19937_64 rng(3);
    const Matrix truth = oracle::random_matrix(4, 3, rng);
    const auto same = error_norms(truth, truth);
    EXPECT_EQ(same.linf_elementwise, 0.0);
    EXPECT_EQ(same.op_norm, 0.0);
    EXPECT_EQ(same.frob, 0.0);
    EXPECT_EQ(same.normalized_2, 0.0);

    Matrix diff = Matrix::Zero(2, 2);
    diff.diagonal() << 3, 4;
    const Matrix base = Matrix::Identity(2, 2);
    const auto r = error_norms(base + diff, base);
    EXPECT_NEAR(r.op_norm, 4.0, 1e-14);
    EXPECT_NEAR(r.frob, 5.0, 1e-14);
    EXPECT_NEAR(r.linf_elementwise, 4.0, 1e-14);
    EXPECT_NEAR(r.normalized_2, 4.0, 1e-14);

    const Vector u = oracle::random_matrix(5, 1, rng), v = oracle::random_matrix(3, 1, rng);
    const Matrix t2 = oracle::random_matrix(5, 3, rng);
    EXPECT_NEAR(error_norms(t2 + u * v.transpose(), t2).op_norm, u.norm() * v.norm(), 1e-12);
}

TEST(ErrorNorms, Errors) {
    EXPECT_THROW(error_norms(Matrix::Ones(2, 2), Matrix::Zero(2, 2)), Error);
    EXPECT_THROW(error_norms(Matrix::Ones(2, 2), Matrix::Ones(2, 3)), Error);
}

TEST(ErrorNorms, NormInequalities) {
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<int> dim(1, 8);
    for (int trial = 0; trial < 200; ++trial) {
        const Index r = dim(rng), c = dim(rng);
        const Matrix truth = oracle::random_matrix(r, c, rng);
        const Matrix est = oracle::random_matrix(r, c, rng);
        const auto e = error_norms(est, truth);
        const double rank = static_cast<double>(Eigen::FullPivLU<Matrix>(est - truth).rank());
        EXPECT_LE(e.op_norm, e.frob + 1e-12);
        EXPECT_LE(e.frob, std::sqrt(rank) * e.op_norm + 1e-12);
        EXPECT_LE(e.linf_elementwise, e.op_norm + 1e-12);
        EXPECT_GE(e.linf_elementwise, 0.0);
    }
}
