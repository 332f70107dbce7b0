#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>

#include "faa/dense.hpp"
#include "faa/errors.hpp"
#include "faa/linear_solvers.hpp"
#include "faa/qr.hpp"
#include "faa/svd.hpp"

namespace faa {

template <typename T>
struct FixedPointProblem {
    std::size_t dimension = 0;
    std::function<DenseVector<T>(const DenseVector<T>&)> map;  ///< g
    std::string description;
    DenseVector<T> initial_guess;
    std::optional<DenseVector<T>> known_solution;
    std::optional<double> beta_star;  ///< damping under which the map is provably contractive
};

/// Affine map g(x) = A x + b. When I - A is nonsingular the fixed point
/// (I - A)^{-1} b is attached as the known solution.
template <typename T>
FixedPointProblem<T> linear_toy(const DenseMatrix<T>& a, const DenseVector<T>& b) {
    const std::size_t n = a.rows();
    if (a.cols() != n || b.size() != n) throw std::invalid_argument("linear_toy: shape mismatch");

    FixedPointProblem<T> p;
    p.dimension = n;
    p.description = "affine map g(x) = A x + b";
    p.initial_guess.assign(n, T{});
    p.map = [a, b](const DenseVector<T>& x) {
        DenseVector<T> y = multiply(a, x);
        for (std::size_t i = 0; i < y.size(); ++i) y[i] += b[i];
        return y;
    };

    DenseMatrix<T> i_minus_a(n, n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i)
            i_minus_a(i, j) = ((i == j) ? T{1} : T{0}) - a(i, j);
    try {
        p.known_solution = least_squares_solve(economy_qr(i_minus_a), b);
    } catch (const NumericalError&) {
        // fixed point not unique; leave the solution unset
    }
    return p;
}

/// Affine toy problem with a deterministic random A scaled to a requested
/// 2-norm. The scale is certified by a one-sided Jacobi SVD, so the realized
/// norm never exceeds the request by more than a few ulp; dimension is
/// capped at 64 to keep that certification exact.
inline FixedPointProblem<double> scaled_random_toy(std::size_t dim, double norm,
                                                   std::uint64_t seed) {
    if (dim == 0 || dim > 64)
        throw std::invalid_argument("scaled_random_toy: dimension must be in [1, 64]");
    if (!(norm > 0.0)) throw std::invalid_argument("scaled_random_toy: norm must be positive");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    DenseMatrix<double> a(dim, dim);
    for (std::size_t j = 0; j < dim; ++j)
        for (std::size_t i = 0; i < dim; ++i) a(i, j) = unit(rng);

    const double sigma1 = small_svd(a).singular_values.front();
    const double scale = norm * (1.0 - 1e-12) / sigma1;
    for (std::size_t j = 0; j < dim; ++j)
        for (std::size_t i = 0; i < dim; ++i) a(i, j) *= scale;

    DenseVector<double> b(dim);
    for (std::size_t i = 0; i < dim; ++i) b[i] = unit(rng);

    FixedPointProblem<double> p = linear_toy(a, b);
    p.description = "affine toy, ||A||_2 = " + std::to_string(norm);
    return p;
}

/// 1D nonlinear Helmholtz channel: u'' + k0^2 (1 + eps |u|^2) u = 0 on
/// (0, 10) with impedance conditions u' + i k0 u = 2 i k0 at x = 0 and
/// u' - i k0 u = 0 at x = 10. g freezes |u|^2 from the previous iterate and
/// solves the resulting linear system: second-order central differences on
/// n_points equispaced nodes, boundary rows closed by second-order
/// ghost-node elimination, direct tridiagonal solve.
struct NlhParams {
    double k0 = 8.0;
    double eps = 0.2;
    std::size_t n_points = 2001;
    double length = 10.0;
};

inline FixedPointProblem<std::complex<double>> nlh_problem(const NlhParams& params) {
    using C = std::complex<double>;
    const std::size_t n = params.n_points;
    if (n < 3) throw std::invalid_argument("nlh_problem: need at least 3 points");
    const double h = params.length / static_cast<double>(n - 1);
    const double k0 = params.k0;
    const double eps = params.eps;
    const C i_unit(0.0, 1.0);

    FixedPointProblem<C> p;
    p.dimension = n;
    p.description = "1D nonlinear Helmholtz channel, frozen-nonlinearity map";
    p.initial_guess.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double x = h * static_cast<double>(j);
        p.initial_guess[j] = C(std::cos(k0 * x), std::sin(k0 * x));
    }

    p.map = [n, h, k0, eps, i_unit](const DenseVector<C>& u) {
        std::vector<C> lower(n, C{}), diag(n, C{}), upper(n, C{});
        DenseVector<C> rhs(n, C{});
        const double inv_h2 = 1.0 / (h * h);

        for (std::size_t j = 0; j < n; ++j) {
            const double c = k0 * k0 * (1.0 + eps * std::norm(u[j]));
            if (j == 0) {
                // ghost node: u_{-1} = u_1 + 2 i k0 h (u_0 - 2)
                diag[0] = (-2.0 + 2.0 * i_unit * k0 * h) * inv_h2 + c;
                upper[0] = 2.0 * inv_h2;
                rhs[0] = 4.0 * i_unit * k0 / h;
            } else if (j == n - 1) {
                // ghost node: u_n = u_{n-2} + 2 i k0 h u_{n-1}
                lower[n - 1] = 2.0 * inv_h2;
                diag[n - 1] = (-2.0 + 2.0 * i_unit * k0 * h) * inv_h2 + c;
                rhs[n - 1] = C{};
            } else {
                lower[j] = inv_h2;
                diag[j] = -2.0 * inv_h2 + c;
                upper[j] = inv_h2;
            }
        }
        return tridiagonal_solve(std::move(lower), std::move(diag), std::move(upper), std::move(rhs));
    };
    return p;
}

}  // namespace faa
