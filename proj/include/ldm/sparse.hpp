#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace ldm {

using index_t = std::int32_t;

struct Triplet {
    index_t row = 0;
    index_t col = 0;
    double value = 0.0;
};

/// Compressed-row sparse matrix. Column indices are strictly increasing
/// within each row and all stored values are finite.
class SparseMatrix {
public:
    SparseMatrix() : row_ptr_(1, 0) {}

    SparseMatrix(index_t rows, index_t cols, std::vector<std::size_t> row_ptr,
                 std::vector<index_t> col_idx, std::vector<double> values)
        : rows_(rows), cols_(cols), row_ptr_(std::move(row_ptr)),
          col_idx_(std::move(col_idx)), values_(std::move(values)) {
        validate();
    }

    static SparseMatrix from_triplets(index_t rows, index_t cols, std::vector<Triplet> triplets) {
        std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
            return a.row != b.row ? a.row < b.row : a.col < b.col;
        });
        std::vector<std::size_t> row_ptr(static_cast<std::size_t>(rows) + 1, 0);
        std::vector<index_t> col_idx;
        std::vector<double> values;
        col_idx.reserve(triplets.size());
        values.reserve(triplets.size());
        for (std::size_t i = 0; i < triplets.size(); ++i) {
            const Triplet& t = triplets[i];
            if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols)
                throw std::invalid_argument("sparse: triplet index out of range");
            if (i > 0 && triplets[i - 1].row == t.row && triplets[i - 1].col == t.col)
                throw std::invalid_argument("sparse: duplicate triplet entry");
            ++row_ptr[static_cast<std::size_t>(t.row) + 1];
            col_idx.push_back(t.col);
            values.push_back(t.value);
        }
        for (index_t r = 0; r < rows; ++r)
            row_ptr[static_cast<std::size_t>(r) + 1] += row_ptr[r];
        return SparseMatrix(rows, cols, std::move(row_ptr), std::move(col_idx), std::move(values));
    }

    index_t rows() const { return rows_; }
    index_t cols() const { return cols_; }
    std::size_t nnz() const { return values_.size(); }

    std::span<const index_t> row_indices(index_t r) const {
        return {col_idx_.data() + row_ptr_[r], col_idx_.data() + row_ptr_[static_cast<std::size_t>(r) + 1]};
    }
    std::span<const double> row_values(index_t r) const {
        return {values_.data() + row_ptr_[r], values_.data() + row_ptr_[static_cast<std::size_t>(r) + 1]};
    }
    std::size_t row_nnz(index_t r) const {
        return row_ptr_[static_cast<std::size_t>(r) + 1] - row_ptr_[r];
    }

    const std::vector<std::size_t>& row_ptr() const { return row_ptr_; }
    const std::vector<index_t>& col_idx() const { return col_idx_; }
    const std::vector<double>& values() const { return values_; }

    /// Stored value at (r, c); zero when the position is not stored.
    double at(index_t r, index_t c) const {
        auto idx = row_indices(r);
        auto pos = std::lower_bound(idx.begin(), idx.end(), c);
        if (pos == idx.end() || *pos != c) return 0.0;
        return row_values(r)[static_cast<std::size_t>(pos - idx.begin())];
    }

    std::vector<Triplet> to_triplets() const {
        std::vector<Triplet> out;
        out.reserve(nnz());
        for (index_t r = 0; r < rows_; ++r) {
            auto idx = row_indices(r);
            auto val = row_values(r);
            for (std::size_t i = 0; i < idx.size(); ++i)
                out.push_back({r, idx[i], val[i]});
        }
        return out;
    }

    SparseMatrix transpose() const {
        std::vector<std::size_t> t_row_ptr(static_cast<std::size_t>(cols_) + 1, 0);
        for (index_t c : col_idx_)
            ++t_row_ptr[static_cast<std::size_t>(c) + 1];
        for (index_t c = 0; c < cols_; ++c)
            t_row_ptr[static_cast<std::size_t>(c) + 1] += t_row_ptr[c];
        std::vector<index_t> t_col(nnz());
        std::vector<double> t_val(nnz());
        std::vector<std::size_t> fill(t_row_ptr.begin(), t_row_ptr.end() - 1);
        for (index_t r = 0; r < rows_; ++r) {
            auto idx = row_indices(r);
            auto val = row_values(r);
            for (std::size_t i = 0; i < idx.size(); ++i) {
                std::size_t slot = fill[idx[i]]++;
                t_col[slot] = r;
                t_val[slot] = val[i];
            }
        }
        return SparseMatrix(cols_, rows_, std::move(t_row_ptr), std::move(t_col), std::move(t_val));
    }

    /// Exact structural and value symmetry.
    bool is_symmetric() const {
        if (rows_ != cols_) return false;
        SparseMatrix t = transpose();
        return t.row_ptr_ == row_ptr_ && t.col_idx_ == col_idx_ && t.values_ == values_;
    }

    std::vector<double> row_sums() const {
        std::vector<double> sums(static_cast<std::size_t>(rows_), 0.0);
        for (index_t r = 0; r < rows_; ++r) {
            double acc = 0.0;
            for (double v : row_values(r)) acc += v;
            sums[static_cast<std::size_t>(r)] = acc;
        }
        return sums;
    }

private:
    void validate() const {
        if (rows_ < 0 || cols_ < 0)
            throw std::invalid_argument("sparse: negative dimension");
        if (row_ptr_.size() != static_cast<std::size_t>(rows_) + 1)
            throw std::invalid_argument("sparse: row_ptr length mismatch");
        if (row_ptr_.front() != 0 || row_ptr_.back() != values_.size() || col_idx_.size() != values_.size())
            throw std::invalid_argument("sparse: row_ptr bounds mismatch");
        for (index_t r = 0; r < rows_; ++r) {
            if (row_ptr_[static_cast<std::size_t>(r) + 1] < row_ptr_[r])
                throw std::invalid_argument("sparse: row_ptr not non-decreasing");
            auto idx = row_indices(r);
            for (std::size_t i = 0; i < idx.size(); ++i) {
                if (idx[i] < 0 || idx[i] >= cols_)
                    throw std::invalid_argument("sparse: column index out of range");
                if (i > 0 && idx[i] <= idx[i - 1])
                    throw std::invalid_argument("sparse: column indices not strictly increasing");
            }
        }
        for (double v : values_)
            if (!std::isfinite(v)) throw std::invalid_argument("sparse: non-finite value");
    }

    index_t rows_ = 0;
    index_t cols_ = 0;
    std::vector<std::size_t> row_ptr_;
    std::vector<index_t> col_idx_;
    std::vector<double> values_;
};

/// Squared Euclidean distance between two sparse rows; absent entries are
/// zero. Two-pointer merge over the stored entries.
inline double sparse_sq_distance(std::span<const index_t> idx_a, std::span<const double> val_a,
                                 std::span<const index_t> idx_b, std::span<const double> val_b) {
    double acc = 0.0;
    std::size_t i = 0, j = 0;
    while (i < idx_a.size() && j < idx_b.size()) {
        if (idx_a[i] == idx_b[j]) {
            double d = val_a[i] - val_b[j];
            acc += d * d;
            ++i;
            ++j;
        } else if (idx_a[i] < idx_b[j]) {
            acc += val_a[i] * val_a[i];
            ++i;
        } else {
            acc += val_b[j] * val_b[j];
            ++j;
        }
    }
    for (; i < idx_a.size(); ++i) acc += val_a[i] * val_a[i];
    for (; j < idx_b.size(); ++j) acc += val_b[j] * val_b[j];
    return acc;
}

inline double sparse_sq_distance(const SparseMatrix& m, index_t a, index_t b) {
    return sparse_sq_distance(m.row_indices(a), m.row_values(a), m.row_indices(b), m.row_values(b));
}

} // namespace ldm
