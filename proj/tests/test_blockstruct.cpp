#include <random>

#include <gtest/gtest.h>

#include "blocksid/blockstruct.hpp"
#include "oracles.hpp"

using namespace blocksid;

TEST(BlockPartition, DerivedSizes) {
    const BlockPartition part({2, 3}, {4, 1, 1});
    EXPECT_EQ(part.n_bar(), 2);
    EXPECT_EQ(part.m_bar(), 3);
    EXPECT_EQ(part.n(), 5);
    EXPECT_EQ(part.m(), 6);
    EXPECT_EQ(part.n_max(), 3);
    EXPECT_EQ(part.m_max(), 4);
    EXPECT_EQ(part.p_max(), 4);
    EXPECT_EQ(part.D(), 12);
    EXPECT_EQ(part.D_j(0), 8);
    EXPECT_EQ(part.D_j(1), 12);
    EXPECT_EQ(part.row_sizes(), (std::vector<Index>{2, 3, 4, 1, 1}));
    EXPECT_EQ(part.col_sizes(), (std::vector<Index>{2, 3}));
}

TEST(BlockPartition, RejectsBadSizes) {
    EXPECT_THROW(BlockPartition({}, {1}), Error);
    EXPECT_THROW(BlockPartition({1, 0}, {1}), Error);
    EXPECT_THROW(BlockPartition::from_sizes({1, 2}, {2}), Error);
    EXPECT_NO_THROW(BlockPartition::from_sizes({2, 1}, {2}));
}

TEST(BlockRange, UnitBlocks) {
    const auto part = BlockPartition::from_sizes({1, 1}, {1});
    const auto r = block_range(part, 1, 0);
    EXPECT_EQ(r.rows.begin, 1);
    EXPECT_EQ(r.rows.end, 2);
    EXPECT_EQ(r.cols.begin, 0);
    EXPECT_EQ(r.cols.end, 1);
}

TEST(BlockRange, PrefixSums) {
    const auto part = BlockPartition::from_sizes({2, 3}, {2});
    const auto r = block_range(part, 1, 0);
    EXPECT_EQ(r.rows.begin, 2);
    EXPECT_EQ(r.rows.end, 5);
    EXPECT_EQ(r.cols.begin, 0);
    EXPECT_EQ(r.cols.end, 2);
}

TEST(BlockRange, UniformBlocks) {
    const auto part = BlockPartition::from_sizes({5, 5, 5}, {5});
    const auto r = block_range(part, 2, 0);
    EXPECT_EQ(r.rows.begin, 10);
    EXPECT_EQ(r.rows.end, 15);
    EXPECT_EQ(r.cols.begin, 0);
    EXPECT_EQ(r.cols.end, 5);
}

TEST(BlockRange, OutOfRange) {
    const auto part = BlockPartition::from_sizes({2, 3}, {2});
    EXPECT_THROW(block_range(part, 2, 0), Error);
    EXPECT_THROW(block_range(part, 0, 1), Error);
    EXPECT_THROW(block_range(part, -1, 0), Error);
    try {
        block_range(part, 5, 0);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::out_of_range);
    }
}

TEST(BlockRange, TilesTheGrid) {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<Index> size(1, 4), count(1, 5);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Index> states(static_cast<std::size_t>(count(rng))), inputs(static_cast<std::size_t>(count(rng) - 1));
        for (auto& s : states) s = size(rng);
        for (auto& s : inputs) s = size(rng);
        const BlockPartition part(states, inputs);
        Eigen::MatrixXi hits = Eigen::MatrixXi::Zero(part.n() + part.m(), part.n());
        for (Index i = 0; i < part.row_blocks(); ++i)
            for (Index j = 0; j < part.col_blocks(); ++j) {
                const auto r = block_range(part, i, j);
                hits.block(r.rows.begin, r.cols.begin, r.rows.size(), r.cols.size()).array() += 1;
            }
        EXPECT_EQ(hits.minCoeff(), 1);
        EXPECT_EQ(hits.maxCoeff(), 1);
    }
}

TEST(BlockNormSum, Examples) {
    const auto unit = BlockPartition::unit(2, 0);
    Matrix theta(2, 2);
    theta << 1, -2, 3, 0.5;
    EXPECT_DOUBLE_EQ(block_norm_sum(Matrix::Zero(2, 2), unit), 0.0);
    EXPECT_DOUBLE_EQ(block_norm_sum(theta, unit), 6.5);

    const BlockPartition single({2}, {});
    EXPECT_DOUBLE_EQ(block_norm_sum(theta, single), 3.0);
}

TEST(BlockNormSum, ShapeMismatch) {
    const auto part = BlockPartition::unit(2, 1);
    try {
        block_norm_sum(Matrix::Zero(2, 2), part);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::shape_mismatch);
    }
}

TEST(BlockNormSum, UnitBlocksGiveEntrywiseL1) {
    std::mt19937_64 rng(3);
    const auto part = BlockPartition::unit(6, 4);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix theta = oracle::random_matrix(10, 6, rng);
        EXPECT_NEAR(block_norm_sum(theta, part), theta.cwiseAbs().sum(), 1e-12);
    }
}

TEST(BlockNormSum, NormAxioms) {
    std::mt19937_64 rng(5);
    const BlockPartition part({2, 3}, {1, 2});
    std::uniform_real_distribution<double> scale(-4.0, 4.0);
    for (int trial = 0; trial < 200; ++trial) {
        const Matrix a = oracle::random_matrix(8, 5, rng);
        const Matrix b = oracle::random_matrix(8, 5, rng);
        const double c = scale(rng);
        EXPECT_LE(block_norm_sum(a + b, part), block_norm_sum(a, part) + block_norm_sum(b, part) + 1e-12);
        EXPECT_NEAR(block_norm_sum(c * a, part), std::abs(c) * block_norm_sum(a, part), 1e-12);
        EXPECT_GT(block_norm_sum(a, part), 0.0);
    }
}

TEST(SupportPattern, Examples) {
    const BlockPartition part({1, 2}, {2});
    EXPECT_EQ(support_pattern(Matrix::Zero(5, 3), part, 0.0).count(), 0);
    EXPECT_EQ(support_pattern(Matrix::Zero(5, 3), part, 1.0).count(), 0);

    Matrix theta = Matrix::Zero(5, 3);
    theta(0, 0) = 0.3;
    const auto s = support_pattern(theta, part);
    EXPECT_TRUE(s(0, 0));
    EXPECT_EQ(s.count(), 1);

    theta.setZero();
    theta(1, 2) = 1e-10;
    EXPECT_EQ(support_pattern(theta, part, 1e-8).count(), 0);
    EXPECT_TRUE(support_pattern(theta, part, 0.0)(1, 1));
}

TEST(SupportPattern, ZeroToleranceMarksAnyNonzero) {
    std::mt19937_64 rng(9);
    const BlockPartition part({2, 1, 3}, {2, 2});
    std::bernoulli_distribution keep(0.3);
    for (int trial = 0; trial < 50; ++trial) {
        Matrix theta = oracle::random_matrix(10, 6, rng);
        for (Index r = 0; r < theta.rows(); ++r)
            for (Index c = 0; c < theta.cols(); ++c)
                if (!keep(rng)) theta(r, c) = 0.0;
        const auto s = support_pattern(theta, part, 0.0);
        for (Index i = 0; i < part.row_blocks(); ++i)
            for (Index j = 0; j < part.col_blocks(); ++j)
                EXPECT_EQ(s(i, j), (block_view(theta, part, i, j).array() != 0.0).any());
    }
}

TEST(SupportPattern, RejectsNegativeTolerance) {
    const auto part = BlockPartition::unit(1, 1);
    EXPECT_THROW(support_pattern(Matrix::Zero(2, 1), part, -1.0), Error);
}

TEST(BlockSupport, Counts) {
    BlockSupport s(4, 2);
    s.set(0, 0, true);
    s.set(2, 0, true);
    s.set(3, 1, true);
    EXPECT_EQ(s.k_j(0), 2);
    EXPECT_EQ(s.k_j(1), 1);
    EXPECT_EQ(s.k_max(), 2);
    EXPECT_EQ(s.active_rows(0), (std::vector<Index>{0, 2}));
    EXPECT_EQ(s.inactive_rows(0), (std::vector<Index>{1, 3}));
    EXPECT_EQ(s.count(), 3);
    EXPECT_EQ(s.size(), 8);
}
