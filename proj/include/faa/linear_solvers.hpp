#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "faa/dense.hpp"
#include "faa/errors.hpp"

namespace faa {

/// Direct solve of a tridiagonal system by elimination with row partial
/// pivoting (one extra superdiagonal of fill-in). lower[0] and upper[n-1]
/// are ignored. Raises SingularSystem on an exactly zero pivot.
template <typename T>
DenseVector<T> tridiagonal_solve(std::vector<T> lower, std::vector<T> diag,
                                 std::vector<T> upper, DenseVector<T> rhs) {
    const std::size_t n = diag.size();
    if (lower.size() != n || upper.size() != n || rhs.size() != n)
        throw std::invalid_argument("tridiagonal_solve: band size mismatch");
    if (n == 0) return {};
    std::vector<T> upper2(n, T{});  // fill-in created by row swaps

    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (abs_sq(lower[i + 1]) > abs_sq(diag[i])) {
            std::swap(diag[i], lower[i + 1]);
            std::swap(upper[i], diag[i + 1]);
            std::swap(upper2[i], upper[i + 1]);
            std::swap(rhs[i], rhs[i + 1]);
        }
        if (abs_sq(diag[i]) == 0.0) throw SingularSystem("tridiagonal_solve: zero pivot");
        const T factor = lower[i + 1] / diag[i];
        diag[i + 1] -= factor * upper[i];
        upper[i + 1] -= factor * upper2[i];
        rhs[i + 1] -= factor * rhs[i];
    }
    if (abs_sq(diag[n - 1]) == 0.0) throw SingularSystem("tridiagonal_solve: zero pivot");

    DenseVector<T> x(n);
    for (std::size_t i = n; i-- > 0;) {
        T s = rhs[i];
        if (i + 1 < n) s -= upper[i] * x[i + 1];
        if (i + 2 < n) s -= upper2[i] * x[i + 2];
        x[i] = s / diag[i];
    }
    return x;
}

/// Cholesky factorization of a symmetric positive definite banded matrix,
/// lower band storage: band(d, j) = A(j + d, j) for d = 0..half_bandwidth.
/// Factor once, then solve repeatedly. Used as the exact inner solver for
/// the 2D grid problems; a residual-check helper supports one step of
/// iterative refinement at the call site.
class BandedCholesky {
  public:
    BandedCholesky(std::size_t n, std::size_t half_bandwidth, std::vector<double> band)
        : n_(n), bw_(half_bandwidth), band_(std::move(band)) {
        if (band_.size() != n_ * (bw_ + 1))
            throw std::invalid_argument("BandedCholesky: band storage size mismatch");
        factor();
    }

    DenseVector<double> solve(const DenseVector<double>& rhs) const {
        if (rhs.size() != n_) throw std::invalid_argument("BandedCholesky: rhs size mismatch");
        DenseVector<double> x = rhs;
        // forward: L y = b
        for (std::size_t j = 0; j < n_; ++j) {
            x[j] /= at(0, j);
            const std::size_t last = std::min(n_ - 1, j + bw_);
            for (std::size_t i = j + 1; i <= last; ++i) x[i] -= at(i - j, j) * x[j];
        }
        // backward: L^T x = y
        for (std::size_t j = n_; j-- > 0;) {
            const std::size_t last = std::min(n_ - 1, j + bw_);
            for (std::size_t i = j + 1; i <= last; ++i) x[j] -= at(i - j, j) * x[i];
            x[j] /= at(0, j);
        }
        return x;
    }

  private:
    double& at(std::size_t d, std::size_t j) { return band_[j * (bw_ + 1) + d]; }
    const double& at(std::size_t d, std::size_t j) const { return band_[j * (bw_ + 1) + d]; }

    void factor() {
        for (std::size_t j = 0; j < n_; ++j) {
            const std::size_t first = (j > bw_) ? j - bw_ : 0;
            double djj = at(0, j);
            for (std::size_t k = first; k < j; ++k) {
                const double ljk = at(j - k, k);
                djj -= ljk * ljk;
            }
            if (!(djj > 0.0)) throw SingularSystem("BandedCholesky: matrix not positive definite");
            const double ljj = std::sqrt(djj);
            at(0, j) = ljj;
            const std::size_t last = std::min(n_ - 1, j + bw_);
            for (std::size_t i = j + 1; i <= last; ++i) {
                double s = at(i - j, j);
                const std::size_t kfirst = (i > bw_) ? i - bw_ : 0;
                for (std::size_t k = std::max(first, kfirst); k < j; ++k)
                    s -= at(i - k, k) * at(j - k, k);
                at(i - j, j) = s / ljj;
            }
        }
    }

    std::size_t n_;
    std::size_t bw_;
    std::vector<double> band_;  // overwritten by L
};

/// y = A x for the symmetric banded matrix in the same storage convention.
inline DenseVector<double> banded_symmetric_multiply(std::size_t n, std::size_t bw,
                                                     const std::vector<double>& band,
                                                     const DenseVector<double>& x) {
    DenseVector<double> y(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        y[j] += band[j * (bw + 1)] * x[j];
        const std::size_t last = std::min(n - 1, j + bw);
        for (std::size_t i = j + 1; i <= last; ++i) {
            const double a = band[j * (bw + 1) + (i - j)];
            y[i] += a * x[j];
            y[j] += a * x[i];
        }
    }
    return y;
}

}  // namespace faa
