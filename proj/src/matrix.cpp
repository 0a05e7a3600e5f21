#include "tik/matrix.hpp"

#include "tik/error.hpp"

namespace tik {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_)
        throw Error(ErrorKind::usage, "matrix data size does not match its shape");
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return {};
    const std::size_t p = rows.front().size();
    Matrix m(rows.size(), p);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != p) throw Error(ErrorKind::usage, "ragged rows");
        for (std::size_t j = 0; j < p; ++j) m(i, j) = rows[i][j];
    }
    return m;
}

std::vector<double> Matrix::column(std::size_t j) const {
    std::vector<double> out(rows_);
    for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
    return out;
}

}  // namespace tik
