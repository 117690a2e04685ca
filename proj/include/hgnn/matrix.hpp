#ifndef HGNN_MATRIX_HPP
#define HGNN_MATRIX_HPP

#include <cstddef>
#include <cstdint>
#include <algorithm>
#include <numeric>
#include <vector>

#include "hgnn/errors.hpp"

namespace hgnn {

// Dense row-major matrix, templated so the same kernels run on plain
// doubles and on autodiff variables.
template <class T>
class Mat {
public:
    Mat() = default;
    Mat(std::size_t rows, std::size_t cols, T init = T{})
        : rows_(rows), cols_(cols), data_(rows * cols, init) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const T& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    T* row(std::size_t i) { return data_.data() + i * cols_; }
    const T* row(std::size_t i) const { return data_.data() + i * cols_; }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

using Matrix = Mat<double>;

// Y = A * B
template <class T>
Mat<T> matmul(const Mat<T>& a, const Mat<T>& b) {
    if (a.cols() != b.rows()) throw ValidationError("matmul: dimension mismatch");
    Mat<T> y(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const T& aik = a(i, k);
            for (std::size_t j = 0; j < b.cols(); ++j) y(i, j) += aik * b(k, j);
        }
    }
    return y;
}

template <class T>
Mat<T> transposed(const Mat<T>& a) {
    Mat<T> t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

struct Triplet {
    std::size_t row;
    std::size_t col;
    double value;
};

// Compressed sparse row matrix of doubles. Rows of the conceptual matrix
// are always the first index; duplicate triplets are summed on build.
class CsrMatrix {
public:
    CsrMatrix() = default;

    static CsrMatrix from_triplets(std::size_t rows, std::size_t cols,
                                   std::vector<Triplet> entries) {
        for (const auto& t : entries) {
            if (t.row >= rows || t.col >= cols)
                throw ValidationError("sparse entry index out of range");
        }
        std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
            return a.row != b.row ? a.row < b.row : a.col < b.col;
        });
        CsrMatrix m;
        m.rows_ = rows;
        m.cols_ = cols;
        m.row_ptr_.assign(rows + 1, 0);
        for (std::size_t k = 0; k < entries.size();) {
            std::size_t j = k + 1;
            double v = entries[k].value;
            while (j < entries.size() && entries[j].row == entries[k].row &&
                   entries[j].col == entries[k].col) {
                v += entries[j].value;
                ++j;
            }
            m.col_.push_back(entries[k].col);
            m.val_.push_back(v);
            ++m.row_ptr_[entries[k].row + 1];
            k = j;
        }
        for (std::size_t r = 0; r < rows; ++r) m.row_ptr_[r + 1] += m.row_ptr_[r];
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t nnz() const { return val_.size(); }

    std::size_t row_begin(std::size_t r) const { return row_ptr_[r]; }
    std::size_t row_end(std::size_t r) const { return row_ptr_[r + 1]; }
    std::size_t entry_col(std::size_t k) const { return col_[k]; }
    double entry_value(std::size_t k) const { return val_[k]; }
    double& entry_value(std::size_t k) { return val_[k]; }

    CsrMatrix transposed() const {
        std::vector<Triplet> ts;
        ts.reserve(nnz());
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t k = row_begin(r); k < row_end(r); ++k)
                ts.push_back({col_[k], r, val_[k]});
        return from_triplets(cols_, rows_, std::move(ts));
    }

    Matrix to_dense() const {
        Matrix d(rows_, cols_);
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t k = row_begin(r); k < row_end(r); ++k) d(r, col_[k]) += val_[k];
        return d;
    }

    double coeff(std::size_t r, std::size_t c) const {
        for (std::size_t k = row_begin(r); k < row_end(r); ++k)
            if (col_[k] == c) return val_[k];
        return 0.0;
    }

    double sum() const { return std::accumulate(val_.begin(), val_.end(), 0.0); }

    // Y = S * X, generic element type. Per-row accumulation order is fixed,
    // so the result does not depend on scheduling.
    template <class T>
    Mat<T> apply(const Mat<T>& x) const {
        if (cols_ != x.rows()) throw ValidationError("sparse apply: dimension mismatch");
        Mat<T> y(rows_, x.cols());
        for (std::size_t r = 0; r < rows_; ++r) {
            for (std::size_t k = row_begin(r); k < row_end(r); ++k) {
                const double w = val_[k];
                const T* src = x.row(col_[k]);
                T* dst = y.row(r);
                for (std::size_t j = 0; j < x.cols(); ++j) dst[j] += w * src[j];
            }
        }
        return y;
    }

    Matrix apply(const Matrix& x) const;  // OpenMP kernel, matrix_omp.cpp

    std::vector<double> apply_vec(const std::vector<double>& x) const {
        if (cols_ != x.size()) throw ValidationError("sparse apply: dimension mismatch");
        std::vector<double> y(rows_, 0.0);
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t k = row_begin(r); k < row_end(r); ++k) y[r] += val_[k] * x[col_[k]];
        return y;
    }

    // this * other, both sparse.
    CsrMatrix multiply(const CsrMatrix& other) const {
        if (cols_ != other.rows()) throw ValidationError("sparse multiply: dimension mismatch");
        std::vector<Triplet> ts;
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t k = row_begin(r); k < row_end(r); ++k) {
                const std::size_t m = col_[k];
                for (std::size_t k2 = other.row_begin(m); k2 < other.row_end(m); ++k2)
                    ts.push_back({r, other.entry_col(k2), val_[k] * other.entry_value(k2)});
            }
        return from_triplets(rows_, other.cols_, std::move(ts));
    }

    std::vector<double> row_sums() const {
        std::vector<double> s(rows_, 0.0);
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t k = row_begin(r); k < row_end(r); ++k) s[r] += val_[k];
        return s;
    }

    std::vector<double> col_sums() const {
        std::vector<double> s(cols_, 0.0);
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t k = row_begin(r); k < row_end(r); ++k) s[col_[k]] += val_[k];
        return s;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::size_t> row_ptr_{0};
    std::vector<std::size_t> col_;
    std::vector<double> val_;
};

// Dense double matmul with an OpenMP inner kernel (matrix_omp.cpp).
Matrix matmul_omp(const Matrix& a, const Matrix& b);

}  // namespace hgnn

#endif
