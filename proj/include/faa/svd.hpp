#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "faa/dense.hpp"
#include "faa/errors.hpp"

namespace faa {

template <typename T>
struct SvdFactors {
    DenseMatrix<T> U;                     ///< m x m, unitary
    DenseMatrix<T> V;                     ///< m x m, unitary
    std::vector<double> singular_values;  ///< descending, nonnegative
};

/// SVD of a small square matrix by one-sided Jacobi rotations (Demmel &
/// Veselic style): right-multiply by plane rotations until the columns are
/// mutually orthogonal, then read off U and the singular values from the
/// rotated columns. Intended for triangular factors with m <= 64. A pair is
/// considered orthogonal once |<a_i,a_j>| <= 1e-14 * sqrt(<a_i,a_i><a_j,a_j>);
/// the budget is 30*m sweeps, beyond which NoConvergence is raised.
template <typename T>
SvdFactors<T> small_svd(const DenseMatrix<T>& r) {
    const std::size_t m = r.rows();
    if (m == 0 || m != r.cols()) throw std::invalid_argument("small_svd: matrix not square");

    DenseMatrix<T> w = r;  // columns converge to U * Sigma
    DenseMatrix<T> v = DenseMatrix<T>::identity(m, m);

    const std::size_t max_sweeps = 30 * m;
    const double pair_tol = 1e-14;
    bool converged = (m == 1);
    for (std::size_t sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
        bool rotated = false;
        for (std::size_t i = 0; i + 1 < m; ++i) {
            for (std::size_t j = i + 1; j < m; ++j) {
                double alpha = 0.0, beta = 0.0;
                T gamma{};
                for (std::size_t k = 0; k < m; ++k) {
                    alpha += abs_sq(w(k, i));
                    beta += abs_sq(w(k, j));
                    gamma += conj_of(w(k, i)) * w(k, j);
                }
                const double gabs = std::sqrt(abs_sq(gamma));
                if (alpha == 0.0 || beta == 0.0) continue;
                if (gabs <= pair_tol * std::sqrt(alpha * beta)) continue;

                const double zeta = (beta - alpha) / (2.0 * gabs);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                const T omega = gamma * (1.0 / gabs);
                const T omega_c = conj_of(omega);

                for (std::size_t k = 0; k < m; ++k) {
                    const T wi = w(k, i), wj = w(k, j);
                    w(k, i) = c * wi - s * (omega_c * wj);
                    w(k, j) = s * (omega * wi) + c * wj;
                }
                for (std::size_t k = 0; k < m; ++k) {
                    const T vi = v(k, i), vj = v(k, j);
                    v(k, i) = c * vi - s * (omega_c * vj);
                    v(k, j) = s * (omega * vi) + c * vj;
                }
                rotated = true;
            }
        }
        converged = !rotated;
    }
    if (!converged) throw NoConvergence("small_svd: sweep budget exhausted");

    std::vector<double> sigma(m);
    for (std::size_t j = 0; j < m; ++j) sigma[j] = w.column_norm(j);

    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&sigma](std::size_t a, std::size_t b) { return sigma[a] > sigma[b]; });

    SvdFactors<T> out;
    out.U = DenseMatrix<T>(m, m);
    out.V = DenseMatrix<T>(m, m);
    out.singular_values.resize(m);
    std::vector<std::size_t> null_cols;
    for (std::size_t j = 0; j < m; ++j) {
        const std::size_t src = order[j];
        out.singular_values[j] = sigma[src];
        for (std::size_t k = 0; k < m; ++k) out.V(k, j) = v(k, src);
        if (sigma[src] > 0.0) {
            const double inv = 1.0 / sigma[src];
            for (std::size_t k = 0; k < m; ++k) out.U(k, j) = w(k, src) * inv;
        } else {
            null_cols.push_back(j);
        }
    }

    // Complete U for exactly zero singular values: take the basis vector with
    // the largest component outside the current column span, orthogonalize
    // twice, normalize. Deterministic and always succeeds while rank < m.
    for (std::size_t j : null_cols) {
        auto residual_of = [&](std::size_t trial) {
            DenseVector<T> u(m, T{});
            u[trial] = T{1};
            for (int pass = 0; pass < 2; ++pass) {
                for (std::size_t p = 0; p < m; ++p) {
                    if (p == j || (out.singular_values[p] == 0.0 && p > j)) continue;
                    T proj{};
                    for (std::size_t k = 0; k < m; ++k) proj += conj_of(out.U(k, p)) * u[k];
                    for (std::size_t k = 0; k < m; ++k) u[k] -= out.U(k, p) * proj;
                }
            }
            return u;
        };
        std::size_t best = 0;
        double best_norm = -1.0;
        for (std::size_t trial = 0; trial < m; ++trial) {
            const double rn = norm2(residual_of(trial));
            if (rn > best_norm) {
                best_norm = rn;
                best = trial;
            }
        }
        DenseVector<T> u = residual_of(best);
        const double un = norm2(u);
        for (std::size_t k = 0; k < m; ++k) out.U(k, j) = u[k] * (1.0 / un);
    }
    return out;
}

}  // namespace faa
