#include "hgnn/matrix.hpp"

namespace hgnn {

// Row-parallel SpMM. Each output row is written by exactly one thread and
// accumulated in a fixed order, so results are identical to the serial path.
Matrix CsrMatrix::apply(const Matrix& x) const {
    if (cols_ != x.rows()) throw ValidationError("sparse apply: dimension mismatch");
    Matrix y(rows_, x.cols());
    const std::int64_t n = static_cast<std::int64_t>(rows_);
#pragma omp parallel for schedule(static)
    for (std::int64_t r = 0; r < n; ++r) {
        double* dst = y.row(static_cast<std::size_t>(r));
        for (std::size_t k = row_begin(r); k < row_end(r); ++k) {
            const double w = val_[k];
            const double* src = x.row(col_[k]);
            for (std::size_t j = 0; j < x.cols(); ++j) dst[j] += w * src[j];
        }
    }
    return y;
}

Matrix matmul_omp(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw ValidationError("matmul: dimension mismatch");
    Matrix y(a.rows(), b.cols());
    const std::int64_t n = static_cast<std::int64_t>(a.rows());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(static_cast<std::size_t>(i), k);
            for (std::size_t j = 0; j < b.cols(); ++j)
                y(static_cast<std::size_t>(i), j) += aik * b(k, j);
        }
    }
    return y;
}

}  // namespace hgnn
