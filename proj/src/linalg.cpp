#include "holp/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace holp {

namespace {

// Column chunk for the Gram kernel: 256 doubles per row keeps a 1000-row
// slab inside L2.
constexpr std::size_t kGramChunk = 256;

std::string op_shape(const DataMatrix& m, Trans t) {
    return t == Trans::Yes ? m.shape_str() + "^T" : m.shape_str();
}

// Dot product with a fixed reduction order for a given build.
inline double dot_raw(const double* a, const double* b, std::size_t len) {
    double s = 0.0;
#pragma omp simd reduction(+ : s)
    for (std::size_t k = 0; k < len; ++k) s += a[k] * b[k];
    return s;
}

}  // namespace

DataMatrix mat_mul(const DataMatrix& a, const DataMatrix& b, Trans ta, Trans tb) {
    const std::size_t m = ta == Trans::Yes ? a.cols() : a.rows();
    const std::size_t ka = ta == Trans::Yes ? a.rows() : a.cols();
    const std::size_t kb = tb == Trans::Yes ? b.cols() : b.rows();
    const std::size_t n = tb == Trans::Yes ? b.rows() : b.cols();
    if (ka != kb) {
        throw DimensionMismatch("mat_mul: inner dimensions disagree for " + op_shape(a, ta) +
                                " * " + op_shape(b, tb));
    }
    DataMatrix c(m, n);
    const std::size_t inner = ka;

    if (ta == Trans::No && tb == Trans::No) {
        for (std::size_t i = 0; i < m; ++i) {
            auto ci = c.row(i);
            for (std::size_t k = 0; k < inner; ++k) {
                const double aik = a(i, k);
                auto bk = b.row(k);
                for (std::size_t j = 0; j < n; ++j) ci[j] += aik * bk[j];
            }
        }
    } else if (ta == Trans::No && tb == Trans::Yes) {
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j)
                c(i, j) = dot_raw(a.row(i).data(), b.row(j).data(), inner);
    } else if (ta == Trans::Yes && tb == Trans::No) {
        for (std::size_t k = 0; k < inner; ++k) {
            auto ak = a.row(k);
            auto bk = b.row(k);
            for (std::size_t i = 0; i < m; ++i) {
                const double aki = ak[i];
                auto ci = c.row(i);
                for (std::size_t j = 0; j < n; ++j) ci[j] += aki * bk[j];
            }
        }
    } else {
        for (std::size_t j = 0; j < n; ++j) {
            auto bj = b.row(j);
            for (std::size_t k = 0; k < inner; ++k) {
                const double bjk = bj[k];
                auto ak = a.row(k);
                for (std::size_t i = 0; i < m; ++i) c(i, j) += ak[i] * bjk;
            }
        }
    }
    return c;
}

Vector mat_vec(const DataMatrix& x, std::span<const double> v) {
    if (v.size() != x.cols()) {
        throw DimensionMismatch("mat_vec: " + x.shape_str() + " times vector of length " +
                                std::to_string(v.size()));
    }
    Vector out(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) out[i] = dot_raw(x.row(i).data(), v.data(), v.size());
    return out;
}

Vector mat_tvec(const DataMatrix& x, std::span<const double> w) {
    if (w.size() != x.rows()) {
        throw DimensionMismatch("mat_tvec: " + x.shape_str() + "^T times vector of length " +
                                std::to_string(w.size()));
    }
    Vector out(x.cols(), 0.0);
    double* o = out.data();
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const double wi = w[i];
        const double* xi = x.row(i).data();
        const std::size_t p = x.cols();
#pragma omp simd
        for (std::size_t j = 0; j < p; ++j) o[j] += wi * xi[j];
    }
    return out;
}

DataMatrix gram_rows(const DataMatrix& x) {
    const std::size_t n = x.rows();
    const std::size_t p = x.cols();
    DataMatrix g(n, n);
    for (std::size_t k0 = 0; k0 < p; k0 += kGramChunk) {
        const std::size_t len = std::min(kGramChunk, p - k0);
        std::size_t i = 0;
        for (; i + 1 < n; i += 2) {
            const double* r0 = x.row(i).data() + k0;
            const double* r1 = x.row(i + 1).data() + k0;
            std::size_t j = 0;
            for (; j + 1 <= i; j += 2) {
                const double* c0 = x.row(j).data() + k0;
                const double* c1 = x.row(j + 1).data() + k0;
                double s00 = 0.0, s01 = 0.0, s10 = 0.0, s11 = 0.0;
#pragma omp simd reduction(+ : s00, s01, s10, s11)
                for (std::size_t k = 0; k < len; ++k) {
                    s00 += r0[k] * c0[k];
                    s01 += r0[k] * c1[k];
                    s10 += r1[k] * c0[k];
                    s11 += r1[k] * c1[k];
                }
                g(i, j) += s00;
                g(i, j + 1) += s01;
                g(i + 1, j) += s10;
                g(i + 1, j + 1) += s11;
            }
            // j == i: the 2x2 diagonal block (lower part only).
            if (j == i) {
                double s00 = 0.0, s10 = 0.0, s11 = 0.0;
#pragma omp simd reduction(+ : s00, s10, s11)
                for (std::size_t k = 0; k < len; ++k) {
                    s00 += r0[k] * r0[k];
                    s10 += r1[k] * r0[k];
                    s11 += r1[k] * r1[k];
                }
                g(i, i) += s00;
                g(i + 1, i) += s10;
                g(i + 1, i + 1) += s11;
            }
        }
        if (i < n) {
            // Odd trailing row.
            const double* r0 = x.row(i).data() + k0;
            for (std::size_t j = 0; j <= i; ++j) g(i, j) += dot_raw(r0, x.row(j).data() + k0, len);
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) g(j, i) = g(i, j);
    return g;
}

SpdFactor spd_factor(const DataMatrix& a) {
    const std::size_t n = a.rows();
    if (a.cols() != n) throw DimensionMismatch("spd_factor: matrix is " + a.shape_str());
    const double scale = a.max_abs();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (std::abs(a(i, j) - a(j, i)) > 1e-10 * std::max(scale, 1e-300)) {
                throw InvalidArgument("spd_factor: matrix is not symmetric at (" +
                                      std::to_string(i) + ", " + std::to_string(j) + ")");
            }

    double max_diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, a(i, i));
    // Pivots at rounding level relative to the largest diagonal mean the matrix
    // is singular in floating point.
    const double tol =
        static_cast<double>(std::max<std::size_t>(n, 1)) * 8.0 * std::numeric_limits<double>::epsilon() * max_diag;

    DataMatrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        const double* lj = l.row(j).data();
        double d = a(j, j) - dot_raw(lj, lj, j);
        if (!(d > tol)) {
            throw NotPositiveDefinite(
                j, "matrix is not positive definite (pivot " + std::to_string(j) + " = " +
                       std::to_string(d) +
                       "); for X X^T this means the rows of X are linearly dependent "
                       "(p <= n or duplicated rows). Use the ridge variant "
                       "(ridge_holp_scores) when X X^T is close to degeneracy");
        }
        const double ljj = std::sqrt(d);
        l(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            const double s = a(i, j) - dot_raw(l.row(i).data(), lj, j);
            l(i, j) = s / ljj;
        }
    }
    return SpdFactor(std::move(l));
}

DataMatrix spd_solve(const SpdFactor& f, const DataMatrix& b) {
    const std::size_t n = f.dim();
    if (b.rows() != n) {
        throw DimensionMismatch("spd_solve: factor of dimension " + std::to_string(n) +
                                " cannot solve right-hand side " + b.shape_str());
    }
    const DataMatrix& l = f.lower();
    const std::size_t m = b.cols();
    DataMatrix x = b;
    // L y = b
    for (std::size_t i = 0; i < n; ++i) {
        auto xi = x.row(i);
        for (std::size_t k = 0; k < i; ++k) {
            const double lik = l(i, k);
            auto xk = x.row(k);
            for (std::size_t c = 0; c < m; ++c) xi[c] -= lik * xk[c];
        }
        const double inv = 1.0 / l(i, i);
        for (std::size_t c = 0; c < m; ++c) xi[c] *= inv;
    }
    // L^T x = y
    for (std::size_t ii = n; ii-- > 0;) {
        auto xi = x.row(ii);
        for (std::size_t k = ii + 1; k < n; ++k) {
            const double lki = l(k, ii);
            auto xk = x.row(k);
            for (std::size_t c = 0; c < m; ++c) xi[c] -= lki * xk[c];
        }
        const double inv = 1.0 / l(ii, ii);
        for (std::size_t c = 0; c < m; ++c) xi[c] *= inv;
    }
    return x;
}

Vector spd_solve(const SpdFactor& f, std::span<const double> b) {
    DataMatrix sol = spd_solve(f, DataMatrix::column(b));
    return sol.storage();
}

SvdResult svd_small(const DataMatrix& a, std::size_t max_sweeps) {
    const bool wide = a.rows() < a.cols();
    const DataMatrix& src = a;
    const std::size_t m = wide ? a.cols() : a.rows();  // long side
    const std::size_t k = wide ? a.rows() : a.cols();  // short side
    if (k > 512) {
        throw InvalidArgument("svd_small: min dimension " + std::to_string(k) +
                              " exceeds the oracle limit of 512");
    }
    // w holds the k columns of the tall matrix (A, or A^T when wide) as rows.
    DataMatrix w = wide ? src : src.transpose();
    DataMatrix vt = DataMatrix::identity(k);  // rows are columns of V

    const double eps = std::numeric_limits<double>::epsilon();
    double fro2 = 0.0;
    for (double v : w.values()) fro2 += v * v;
    const double negligible = eps * eps * fro2;  // columns at roundoff level
    std::size_t sweep = 0;
    bool rotated = true;
    while (rotated) {
        if (sweep == max_sweeps) {
            throw ConvergenceFailure(sweep, "svd_small: no convergence after " +
                                                std::to_string(sweep) + " Jacobi sweeps");
        }
        rotated = false;
        ++sweep;
        for (std::size_t i = 0; i + 1 < k; ++i) {
            for (std::size_t j = i + 1; j < k; ++j) {
                auto wi = w.row(i);
                auto wj = w.row(j);
                const double alpha = dot_raw(wi.data(), wi.data(), m);
                const double beta = dot_raw(wj.data(), wj.data(), m);
                const double gamma = dot_raw(wi.data(), wj.data(), m);
                if (gamma == 0.0 || std::abs(gamma) <= 4.0 * eps * std::sqrt(alpha * beta)) continue;
                if (alpha <= negligible || beta <= negligible) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t r = 0; r < m; ++r) {
                    const double x = wi[r], y = wj[r];
                    wi[r] = c * x - s * y;
                    wj[r] = s * x + c * y;
                }
                auto vi = vt.row(i);
                auto vj = vt.row(j);
                for (std::size_t r = 0; r < k; ++r) {
                    const double x = vi[r], y = vj[r];
                    vi[r] = c * x - s * y;
                    vj[r] = s * x + c * y;
                }
            }
        }
    }

    Vector sigma(k);
    for (std::size_t i = 0; i < k; ++i) sigma[i] = norm2(w.row(i));
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

    // Left vectors of the tall problem: normalized rotated columns, with
    // Gram-Schmidt completion for numerically zero singular values.
    const double smax = k ? sigma[order[0]] : 0.0;
    DataMatrix left(k, m);  // rows are left singular vectors of the tall matrix
    DataMatrix right(k, k);
    Vector sv(k);
    for (std::size_t r = 0; r < k; ++r) {
        const std::size_t idx = order[r];
        sv[r] = sigma[idx];
        auto src_v = vt.row(idx);
        std::copy(src_v.begin(), src_v.end(), right.row(r).begin());
        auto dst = left.row(r);
        if (sigma[idx] > 1e-14 * smax && sigma[idx] > 0.0) {
            for (std::size_t c = 0; c < m; ++c) dst[c] = w(idx, c) / sigma[idx];
        } else {
            // Complete with the first standard basis vector that survives
            // orthogonalization against the vectors already placed.
            for (std::size_t e = 0; e < m; ++e) {
                std::fill(dst.begin(), dst.end(), 0.0);
                dst[e] = 1.0;
                for (int pass = 0; pass < 2; ++pass)
                    for (std::size_t q = 0; q < r; ++q) {
                        const double proj = dot_raw(left.row(q).data(), dst.data(), m);
                        auto lq = left.row(q);
                        for (std::size_t c = 0; c < m; ++c) dst[c] -= proj * lq[c];
                    }
                const double nrm = norm2(dst);
                if (nrm > 0.5) {
                    for (double& v : dst) v /= nrm;
                    break;
                }
            }
        }
    }

    SvdResult out;
    out.singular_values = std::move(sv);
    // Tall matrix T = left^T diag(sv) right. If A is wide, A = T^T, so the
    // roles of the left and right factors swap.
    if (wide) {
        out.u = right.transpose();
        out.v = left.transpose();
    } else {
        out.u = left.transpose();
        out.v = right.transpose();
    }
    return out;
}

DataMatrix pinv_from_svd(const SvdResult& svd, double rcond) {
    const std::size_t k = svd.singular_values.size();
    const double smax = k ? svd.singular_values.front() : 0.0;
    // V D^+ U^T
    DataMatrix vd = svd.v;
    for (std::size_t i = 0; i < vd.rows(); ++i)
        for (std::size_t r = 0; r < k; ++r) {
            const double s = svd.singular_values[r];
            vd(i, r) = s > rcond * smax ? vd(i, r) / s : 0.0;
        }
    return mat_mul(vd, svd.u, Trans::No, Trans::Yes);
}

}  // namespace holp
