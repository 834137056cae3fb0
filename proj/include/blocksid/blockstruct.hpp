#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "blocksid/error.hpp"

namespace blocksid {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double default_zero_tol = 1e-8;

/// Half-open scalar index range [begin, end).
struct IndexRange {
    Index begin = 0;
    Index end = 0;

    Index size() const noexcept { return end - begin; }
    bool contains(Index k) const noexcept { return k >= begin && k < end; }
    friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

/**
 * Block grid of the parameter Theta = [A B]^T, an (n+m) x n matrix.
 *
 * Row blocks are stored state blocks first (sizes n_1..n_nbar), then input
 * blocks (m_1..m_mbar). Column blocks are the state blocks n_1..n_nbar. Row
 * block i < nbar of column block j holds (A^{(j,i)})^T; row block nbar + l
 * holds (B^{(j,l)})^T. All block indices in this library are 0-based.
 */
class BlockPartition {
public:
    BlockPartition() = default;

    BlockPartition(std::vector<Index> state_sizes, std::vector<Index> input_sizes)
        : state_sizes_(std::move(state_sizes)), input_sizes_(std::move(input_sizes)) {
        if (state_sizes_.empty())
            throw Error(Errc::invalid_argument, "partition needs at least one state block");
        auto positive = [](Index s) { return s > 0; };
        if (!std::all_of(state_sizes_.begin(), state_sizes_.end(), positive) ||
            !std::all_of(input_sizes_.begin(), input_sizes_.end(), positive))
            throw Error(Errc::invalid_argument, "block sizes must be positive");
        row_offsets_.assign(1, 0);
        for (Index s : state_sizes_) row_offsets_.push_back(row_offsets_.back() + s);
        for (Index s : input_sizes_) row_offsets_.push_back(row_offsets_.back() + s);
    }

    /// Builds from the row/column size lists used by the model file format.
    static BlockPartition from_sizes(const std::vector<Index>& row_sizes,
                                     const std::vector<Index>& col_sizes) {
        if (col_sizes.size() > row_sizes.size() ||
            !std::equal(col_sizes.begin(), col_sizes.end(), row_sizes.begin()))
            throw Error(Errc::invalid_argument,
                        "row_sizes must start with the column (state) block sizes");
        return BlockPartition(col_sizes,
                              std::vector<Index>(row_sizes.begin() + static_cast<std::ptrdiff_t>(col_sizes.size()),
                                                 row_sizes.end()));
    }

    static BlockPartition unit(Index n, Index m) {
        return BlockPartition(std::vector<Index>(static_cast<std::size_t>(n), 1),
                              std::vector<Index>(static_cast<std::size_t>(m), 1));
    }

    static BlockPartition uniform(Index n_bar, Index m_bar, Index state_size, Index input_size) {
        return BlockPartition(std::vector<Index>(static_cast<std::size_t>(n_bar), state_size),
                              std::vector<Index>(static_cast<std::size_t>(m_bar), input_size));
    }

    Index n_bar() const noexcept { return static_cast<Index>(state_sizes_.size()); }
    Index m_bar() const noexcept { return static_cast<Index>(input_sizes_.size()); }
    Index row_blocks() const noexcept { return n_bar() + m_bar(); }
    Index col_blocks() const noexcept { return n_bar(); }

    Index n() const noexcept { return row_offsets_.empty() ? 0 : row_offsets_[state_sizes_.size()]; }
    Index m() const noexcept { return row_offsets_.empty() ? 0 : row_offsets_.back() - n(); }

    std::vector<Index> row_sizes() const {
        std::vector<Index> out(state_sizes_);
        out.insert(out.end(), input_sizes_.begin(), input_sizes_.end());
        return out;
    }
    const std::vector<Index>& col_sizes() const noexcept { return state_sizes_; }
    const std::vector<Index>& state_sizes() const noexcept { return state_sizes_; }
    const std::vector<Index>& input_sizes() const noexcept { return input_sizes_; }

    Index row_block_size(Index i) const { return row_range(i).size(); }
    Index col_block_size(Index j) const { return col_range(j).size(); }

    IndexRange row_range(Index i) const {
        if (i < 0 || i >= row_blocks())
            throw Error(Errc::out_of_range, "row block index " + std::to_string(i));
        auto k = static_cast<std::size_t>(i);
        return {row_offsets_[k], row_offsets_[k + 1]};
    }

    IndexRange col_range(Index j) const {
        if (j < 0 || j >= col_blocks())
            throw Error(Errc::out_of_range, "column block index " + std::to_string(j));
        auto k = static_cast<std::size_t>(j);
        return {row_offsets_[k], row_offsets_[k + 1]};
    }

    Index n_max() const noexcept { return max_of(state_sizes_); }
    Index m_max() const noexcept { return max_of(input_sizes_); }
    Index p_max() const noexcept { return std::max(n_max(), m_max()); }
    /// Maximum block size p_max * n_max.
    Index D() const noexcept { return p_max() * n_max(); }
    Index D_j(Index j) const { return p_max() * col_block_size(j); }

    /// Throws unless theta is (n+m) x n.
    void check_shape(Index rows, Index cols) const {
        if (rows != n() + m() || cols != n())
            throw Error(Errc::shape_mismatch,
                        "expected " + std::to_string(n() + m()) + "x" + std::to_string(n()) +
                            " parameter grid, got " + std::to_string(rows) + "x" + std::to_string(cols));
    }

    friend bool operator==(const BlockPartition& a, const BlockPartition& b) {
        return a.state_sizes_ == b.state_sizes_ && a.input_sizes_ == b.input_sizes_;
    }

private:
    static Index max_of(const std::vector<Index>& v) noexcept {
        return v.empty() ? 0 : *std::max_element(v.begin(), v.end());
    }

    std::vector<Index> state_sizes_;
    std::vector<Index> input_sizes_;
    std::vector<Index> row_offsets_;
};

/// Pair of scalar ranges covering block (i, j) of the parameter grid.
struct BlockRange {
    IndexRange rows;
    IndexRange cols;
};

inline BlockRange block_range(const BlockPartition& partition, Index i, Index j) {
    return {partition.row_range(i), partition.col_range(j)};
}

template <class Derived>
auto block_view(const Eigen::MatrixBase<Derived>& theta, const BlockPartition& partition, Index i,
                Index j) {
    const auto r = block_range(partition, i, j);
    return theta.derived().block(r.rows.begin, r.cols.begin, r.rows.size(), r.cols.size());
}

/// Boolean grid of shape (nbar+mbar) x nbar; true marks a nonzero block.
class BlockSupport {
public:
    BlockSupport() = default;
    BlockSupport(Index row_blocks, Index col_blocks, bool value = false)
        : rows_(row_blocks), cols_(col_blocks),
          mask_(static_cast<std::size_t>(row_blocks * col_blocks), value ? 1 : 0) {}

    explicit BlockSupport(const BlockPartition& partition, bool value = false)
        : BlockSupport(partition.row_blocks(), partition.col_blocks(), value) {}

    Index rows() const noexcept { return rows_; }
    Index cols() const noexcept { return cols_; }

    bool operator()(Index i, Index j) const { return mask_[offset(i, j)] != 0; }
    void set(Index i, Index j, bool value) { mask_[offset(i, j)] = value ? 1 : 0; }

    /// A_j: nonzero row blocks of column block j, ascending.
    std::vector<Index> active_rows(Index j) const { return rows_where(j, true); }
    /// A_j^c.
    std::vector<Index> inactive_rows(Index j) const { return rows_where(j, false); }

    Index k_j(Index j) const { return static_cast<Index>(active_rows(j).size()); }
    Index k_max() const {
        Index k = 0;
        for (Index j = 0; j < cols_; ++j) k = std::max(k, k_j(j));
        return k;
    }

    Index count() const noexcept {
        return static_cast<Index>(std::count(mask_.begin(), mask_.end(), std::uint8_t{1}));
    }
    Index size() const noexcept { return rows_ * cols_; }

    friend bool operator==(const BlockSupport&, const BlockSupport&) = default;

private:
    std::size_t offset(Index i, Index j) const {
        if (i < 0 || i >= rows_ || j < 0 || j >= cols_)
            throw Error(Errc::out_of_range, "support index (" + std::to_string(i) + ", " +
                                                std::to_string(j) + ")");
        return static_cast<std::size_t>(i * cols_ + j);
    }

    std::vector<Index> rows_where(Index j, bool value) const {
        std::vector<Index> out;
        for (Index i = 0; i < rows_; ++i)
            if ((*this)(i, j) == value) out.push_back(i);
        return out;
    }

    Index rows_ = 0;
    Index cols_ = 0;
    std::vector<std::uint8_t> mask_;
};

/// Sum over all blocks of the block's max-abs entry.
template <class Derived>
double block_norm_sum(const Eigen::MatrixBase<Derived>& theta, const BlockPartition& partition) {
    partition.check_shape(theta.rows(), theta.cols());
    double total = 0.0;
    for (Index j = 0; j < partition.col_blocks(); ++j)
        for (Index i = 0; i < partition.row_blocks(); ++i)
            total += block_view(theta, partition, i, j).cwiseAbs().maxCoeff();
    return total;
}

template <class Derived>
BlockSupport support_pattern(const Eigen::MatrixBase<Derived>& theta, const BlockPartition& partition,
                             double zero_tol = default_zero_tol) {
    if (!(zero_tol >= 0.0)) throw Error(Errc::invalid_argument, "zero_tol must be nonnegative");
    partition.check_shape(theta.rows(), theta.cols());
    BlockSupport support(partition);
    for (Index j = 0; j < partition.col_blocks(); ++j)
        for (Index i = 0; i < partition.row_blocks(); ++i)
            support.set(i, j, block_view(theta, partition, i, j).cwiseAbs().maxCoeff() > zero_tol);
    return support;
}

/// Scalar row indices I(rows) of the listed row blocks, in the given order.
inline std::vector<Index> scalar_rows(const BlockPartition& partition, const std::vector<Index>& blocks) {
    std::vector<Index> out;
    for (Index i : blocks) {
        const auto r = partition.row_range(i);
        for (Index k = r.begin; k < r.end; ++k) out.push_back(k);
    }
    return out;
}

}  // namespace blocksid
