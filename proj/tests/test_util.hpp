#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

#include "holp/linalg.hpp"
#include "holp/matrix.hpp"

namespace testutil {

inline holp::DataMatrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> nd;
    holp::DataMatrix m(rows, cols);
    for (double& v : m.values()) v = nd(gen);
    return m;
}

inline holp::Vector random_vector(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> nd;
    holp::Vector v(n);
    for (double& x : v) x = nd(gen);
    return v;
}

// Triple loop without blocking; the reference for products.
inline holp::DataMatrix naive_mul(const holp::DataMatrix& a, const holp::DataMatrix& b) {
    holp::DataMatrix c(a.rows(), b.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            long double s = 0.0L;
            for (std::size_t k = 0; k < a.cols(); ++k) s += static_cast<long double>(a(i, k)) * b(k, j);
            c(i, j) = static_cast<double>(s);
        }
    return c;
}

inline double max_abs_diff(const holp::DataMatrix& a, const holp::DataMatrix& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.values().size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
    return m;
}

template <class A, class B>
double max_abs_diff_vec(const A& a, const B& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

template <class A>
double max_abs(const A& a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

// Random orthogonal matrix from Gram-Schmidt on a Gaussian matrix.
inline holp::DataMatrix random_orthogonal(std::size_t n, std::uint64_t seed) {
    auto q = random_matrix(n, n, seed);
    for (std::size_t j = 0; j < n; ++j) {
        for (int pass = 0; pass < 2; ++pass)
            for (std::size_t k = 0; k < j; ++k) {
                double d = 0.0;
                for (std::size_t i = 0; i < n; ++i) d += q(i, j) * q(i, k);
                for (std::size_t i = 0; i < n; ++i) q(i, j) -= d * q(i, k);
            }
        double nrm = 0.0;
        for (std::size_t i = 0; i < n; ++i) nrm += q(i, j) * q(i, j);
        nrm = std::sqrt(nrm);
        for (std::size_t i = 0; i < n; ++i) q(i, j) /= nrm;
    }
    return q;
}

}  // namespace testutil
