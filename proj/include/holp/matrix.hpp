#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace holp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Raised when a Cholesky pivot is not strictly positive.
class NotPositiveDefinite : public Error {
public:
    NotPositiveDefinite(std::size_t pivot, const std::string& what)
        : Error(what), pivot_(pivot) {}
    std::size_t pivot() const noexcept { return pivot_; }

private:
    std::size_t pivot_;
};

/// HOLP requested on a design with p <= n.
class DegenerateRegime : public Error {
public:
    using Error::Error;
};

class ConvergenceFailure : public Error {
public:
    ConvergenceFailure(std::size_t iterations, const std::string& what)
        : Error(what), iterations_(iterations) {}
    std::size_t iterations() const noexcept { return iterations_; }

private:
    std::size_t iterations_;
};

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles.
class DataMatrix {
public:
    DataMatrix() = default;
    DataMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    DataMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static DataMatrix identity(std::size_t n);
    /// Builds from nested rows; all rows must share one length.
    static DataMatrix from_rows(const std::vector<std::vector<double>>& rows);
    /// n x 1 column matrix.
    static DataMatrix column(std::span<const double> v);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const noexcept {
        return {data_.data() + i * cols_, cols_};
    }

    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }
    const std::vector<double>& storage() const noexcept { return data_; }

    Vector col(std::size_t j) const;
    DataMatrix transpose() const;
    /// Copies the listed columns, in the given order.
    DataMatrix select_cols(std::span<const std::size_t> idx) const;
    DataMatrix select_rows(std::span<const std::size_t> idx) const;

    double max_abs() const noexcept;
    bool all_finite() const noexcept;
    std::string shape_str() const;

    friend bool operator==(const DataMatrix&, const DataMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

}  // namespace holp
