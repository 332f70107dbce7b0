#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "faa/dense.hpp"
#include "faa/errors.hpp"

namespace faa {

template <typename T>
struct QRFactors {
    DenseMatrix<T> Q;  ///< n x m, orthonormal columns
    DenseMatrix<T> R;  ///< m x m upper triangular, exact zeros below the diagonal
};

/// Economy QR by Householder reflections with explicit thin-Q accumulation
/// (Golub & Van Loan, Alg. 5.2.1). The R diagonal keeps the sign/phase the
/// reflectors produce; a column whose subdiagonal part is already exactly
/// zero skips its reflector and keeps its diagonal as it stands, so
/// orthonormal input factors as Q = F, R = I and an exactly dependent column
/// yields a zero pivot rather than a failure. A zero input column is
/// signalled as NumericalBreakdown because no direction can be assigned.
template <typename T>
QRFactors<T> economy_qr(const DenseMatrix<T>& f) {
    const std::size_t n = f.rows();
    const std::size_t m = f.cols();
    if (m == 0 || n < m) throw std::invalid_argument("economy_qr: need n >= m >= 1");
    for (std::size_t j = 0; j < m; ++j)
        if (f.column_norm(j) == 0.0)
            throw NumericalBreakdown("economy_qr: column " + std::to_string(j + 1) + " has zero norm");

    DenseMatrix<T> a = f;       // transformed in place
    DenseMatrix<T> v(n, m);     // Householder vectors, column k lives in rows k..n-1
    std::vector<double> vnorm_sq(m, 0.0);
    std::vector<T> diag(m, T{});

    for (std::size_t k = 0; k < m; ++k) {
        double sub_sq = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) sub_sq += abs_sq(a(i, k));
        if (sub_sq == 0.0) {
            diag[k] = a(k, k);  // column already triangular; nothing to reflect
            continue;
        }
        const double tail = std::sqrt(sub_sq + abs_sq(a(k, k)));

        const T a0 = a(k, k);
        const double a0abs = std::sqrt(abs_sq(a0));
        const T phase = (a0abs == 0.0) ? T{1} : a0 * (1.0 / a0abs);

        // v = x + phase * ||x|| e_1 never cancels in its first entry
        double vs = 0.0;
        for (std::size_t i = k; i < n; ++i) {
            v(i, k) = a(i, k);
            if (i == k) v(i, k) += phase * tail;
            vs += abs_sq(v(i, k));
        }
        vnorm_sq[k] = vs;
        diag[k] = -phase * tail;

        for (std::size_t j = k + 1; j < m; ++j) {
            T d{};
            for (std::size_t i = k; i < n; ++i) d += conj_of(v(i, k)) * a(i, j);
            const T c = d * (2.0 / vs);
            for (std::size_t i = k; i < n; ++i) a(i, j) -= v(i, k) * c;
        }
    }

    QRFactors<T> out;
    out.R = DenseMatrix<T>(m, m);
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t i = 0; i < j; ++i) out.R(i, j) = a(i, j);
        out.R(j, j) = diag[j];
    }

    out.Q = DenseMatrix<T>::identity(n, m);
    for (std::size_t k = m; k-- > 0;) {
        if (vnorm_sq[k] == 0.0) continue;
        for (std::size_t j = 0; j < m; ++j) {
            T d{};
            for (std::size_t i = k; i < n; ++i) d += conj_of(v(i, k)) * out.Q(i, j);
            const T c = d * (2.0 / vnorm_sq[k]);
            for (std::size_t i = k; i < n; ++i) out.Q(i, j) -= v(i, k) * c;
        }
    }
    return out;
}

namespace detail {
inline void check_r_diagonal(const std::vector<double>& diag_abs) {
    double dmax = 0.0;
    for (double d : diag_abs) dmax = std::max(dmax, d);
    for (std::size_t i = 0; i < diag_abs.size(); ++i)
        if (diag_abs[i] == 0.0 || diag_abs[i] < 1e-30 * dmax)
            throw SingularR("R diagonal entry " + std::to_string(i + 1) + " is numerically zero");
}

template <typename T>
std::vector<double> r_diag_abs(const DenseMatrix<T>& r) {
    std::vector<double> d(r.cols());
    for (std::size_t i = 0; i < r.cols(); ++i) d[i] = std::sqrt(abs_sq(r(i, i)));
    return d;
}
}  // namespace detail

/// Minimizer of ||F gamma - w|| from precomputed factors: R gamma = Q* w.
template <typename T>
DenseVector<T> least_squares_solve(const QRFactors<T>& qr, const DenseVector<T>& w) {
    if (w.size() != qr.Q.rows()) throw std::invalid_argument("least_squares_solve: size mismatch");
    detail::check_r_diagonal(detail::r_diag_abs(qr.R));
    DenseVector<T> gamma = multiply_adjoint(qr.Q, w);
    const std::size_t m = qr.R.cols();
    for (std::size_t i = m; i-- > 0;) {
        T s = gamma[i];
        for (std::size_t j = i + 1; j < m; ++j) s -= qr.R(i, j) * gamma[j];
        gamma[i] = s / qr.R(i, i);
    }
    return gamma;
}

/// Explicit inverse of an upper triangular matrix by back substitution.
template <typename T>
DenseMatrix<T> triangular_inverse(const DenseMatrix<T>& r) {
    const std::size_t m = r.rows();
    if (m != r.cols()) throw std::invalid_argument("triangular_inverse: matrix not square");
    detail::check_r_diagonal(detail::r_diag_abs(r));
    DenseMatrix<T> s(m, m);
    for (std::size_t j = 0; j < m; ++j) {
        s(j, j) = T{1} / r(j, j);
        for (std::size_t i = j; i-- > 0;) {
            T acc{};
            for (std::size_t k = i + 1; k <= j; ++k) acc += r(i, k) * s(k, j);
            s(i, j) = -acc / r(i, i);
        }
    }
    return s;
}

/// Frobenius condition number ||F||_F * ||R^{-1}||_F. Always >= cols(F).
template <typename T>
double frobenius_cond(const DenseMatrix<T>& f) {
    QRFactors<T> qr = economy_qr(f);
    return f.frobenius_norm() * triangular_inverse(qr.R).frobenius_norm();
}

/// Same quantity computed from existing factors; ||R||_F equals ||F||_F.
template <typename T>
double frobenius_cond_from_factors(const QRFactors<T>& qr) {
    return qr.R.frobenius_norm() * triangular_inverse(qr.R).frobenius_norm();
}

/// Sines of the angle between column i and the span of columns 1..i-1,
/// read off the QR factorization as |r_ii| / ||f_i||, i = 2..m.
/// Empty for a single column. Results are clamped into [0, 1].
template <typename T>
std::vector<double> direction_sines(const QRFactors<T>& qr, const std::vector<double>& column_norms) {
    const std::size_t m = qr.R.cols();
    if (column_norms.size() != m)
        throw std::invalid_argument("direction_sines: norm count mismatch");
    std::vector<double> sines;
    if (m < 2) return sines;
    sines.reserve(m - 1);
    for (std::size_t i = 1; i < m; ++i) {
        if (column_norms[i] <= 0.0)
            throw NumericalBreakdown("direction_sines: column " + std::to_string(i + 1) + " has zero norm");
        double s = std::sqrt(abs_sq(qr.R(i, i))) / column_norms[i];
        sines.push_back(std::clamp(s, 0.0, 1.0));
    }
    return sines;
}

}  // namespace faa
