#include "holp/matrix.hpp"

#include <cmath>

namespace holp {

DataMatrix::DataMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw DimensionMismatch("DataMatrix: " + std::to_string(data_.size()) +
                                " values cannot fill a " + shape_str() + " matrix");
    }
}

DataMatrix DataMatrix::identity(std::size_t n) {
    DataMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

DataMatrix DataMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return {};
    const std::size_t c = rows.front().size();
    DataMatrix m(rows.size(), c);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != c) {
            throw DimensionMismatch("DataMatrix::from_rows: row " + std::to_string(i) +
                                    " has " + std::to_string(rows[i].size()) +
                                    " entries, expected " + std::to_string(c));
        }
        std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
    }
    return m;
}

DataMatrix DataMatrix::column(std::span<const double> v) {
    return DataMatrix(v.size(), 1, std::vector<double>(v.begin(), v.end()));
}

Vector DataMatrix::col(std::size_t j) const {
    Vector out(rows_);
    for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
    return out;
}

DataMatrix DataMatrix::transpose() const {
    DataMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

DataMatrix DataMatrix::select_cols(std::span<const std::size_t> idx) const {
    DataMatrix out(rows_, idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
        if (idx[k] >= cols_) {
            throw DimensionMismatch("select_cols: column " + std::to_string(idx[k]) +
                                    " out of range for " + shape_str());
        }
    }
    for (std::size_t i = 0; i < rows_; ++i) {
        const double* src = data_.data() + i * cols_;
        double* dst = out.data_.data() + i * idx.size();
        for (std::size_t k = 0; k < idx.size(); ++k) dst[k] = src[idx[k]];
    }
    return out;
}

DataMatrix DataMatrix::select_rows(std::span<const std::size_t> idx) const {
    DataMatrix out(idx.size(), cols_);
    for (std::size_t k = 0; k < idx.size(); ++k) {
        if (idx[k] >= rows_) {
            throw DimensionMismatch("select_rows: row " + std::to_string(idx[k]) +
                                    " out of range for " + shape_str());
        }
        auto src = row(idx[k]);
        std::copy(src.begin(), src.end(), out.row(k).begin());
    }
    return out;
}

double DataMatrix::max_abs() const noexcept {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
}

bool DataMatrix::all_finite() const noexcept {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

std::string DataMatrix::shape_str() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw DimensionMismatch("dot: lengths " + std::to_string(a.size()) + " and " +
                                std::to_string(b.size()));
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(std::span<const double> a) {
    double s = 0.0;
    for (double v : a) s += v * v;
    return std::sqrt(s);
}

}  // namespace holp
