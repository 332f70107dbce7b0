#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

#include "faa/dense.hpp"
#include "faa/errors.hpp"
#include "faa/linear_solvers.hpp"
#include "faa/problems.hpp"

namespace faa {

/// Uniform node-centered grid on a square domain with homogeneous Dirichlet
/// boundary. Unknowns are the interior nodes, row-major. Divergence-form
/// operators -div(a grad u) are discretized by 5-point edge-midpoint flux
/// differencing; the edge coefficient is a(s) evaluated at the average of
/// the two adjacent cell-centered gradient magnitudes.
class FluxGrid {
  public:
    FluxGrid(std::size_t subdivisions, double side_length)
        : nsub_(subdivisions), h_(side_length / static_cast<double>(subdivisions)) {
        if (nsub_ < 4) throw std::invalid_argument("FluxGrid: need at least 4 subdivisions");
    }

    std::size_t subdivisions() const { return nsub_; }
    std::size_t interior_per_row() const { return nsub_ - 1; }
    std::size_t n_interior() const { return (nsub_ - 1) * (nsub_ - 1); }
    std::size_t half_bandwidth() const { return nsub_ - 1; }
    double h() const { return h_; }

    double node_x(std::size_t i) const { return h_ * static_cast<double>(i); }
    double node_y(std::size_t j) const { return h_ * static_cast<double>(j); }

    /// interior (i, j), 1-based in both directions
    std::size_t index(std::size_t i, std::size_t j) const {
        return (j - 1) * (nsub_ - 1) + (i - 1);
    }

    /// (nsub+1)^2 nodal values with the boundary fixed at zero
    std::vector<double> nodal_values(const DenseVector<double>& interior) const {
        std::vector<double> u((nsub_ + 1) * (nsub_ + 1), 0.0);
        for (std::size_t j = 1; j < nsub_; ++j)
            for (std::size_t i = 1; i < nsub_; ++i)
                u[j * (nsub_ + 1) + i] = interior[index(i, j)];
        return u;
    }

    /// |grad u| at every cell center, cells indexed (ci, cj) in [0, nsub)^2
    std::vector<double> cell_gradient_magnitudes(const std::vector<double>& nodal) const {
        std::vector<double> mag(nsub_ * nsub_);
        const double inv_2h = 1.0 / (2.0 * h_);
        auto at = [&](std::size_t i, std::size_t j) { return nodal[j * (nsub_ + 1) + i]; };
        for (std::size_t cj = 0; cj < nsub_; ++cj) {
            for (std::size_t ci = 0; ci < nsub_; ++ci) {
                const double gx = (at(ci + 1, cj) + at(ci + 1, cj + 1) - at(ci, cj) - at(ci, cj + 1)) * inv_2h;
                const double gy = (at(ci, cj + 1) + at(ci + 1, cj + 1) - at(ci, cj) - at(ci + 1, cj)) * inv_2h;
                mag[cj * nsub_ + ci] = std::hypot(gx, gy);
            }
        }
        return mag;
    }

    struct EdgeCoefficients {
        std::vector<double> ax;  ///< edge (i, j)-(i+1, j): ax[i + nsub * (j-1)], j interior
        std::vector<double> ay;  ///< edge (i, j)-(i, j+1): ay[(i-1) + (nsub-1) * j], i interior
    };

    EdgeCoefficients edge_coefficients(const std::vector<double>& cell_mag,
                                       const std::function<double(double)>& coeff) const {
        EdgeCoefficients ec;
        ec.ax.resize(nsub_ * (nsub_ - 1));
        ec.ay.resize((nsub_ - 1) * nsub_);
        for (std::size_t j = 1; j < nsub_; ++j) {
            for (std::size_t i = 0; i < nsub_; ++i) {
                const double s = 0.5 * (cell_mag[(j - 1) * nsub_ + i] + cell_mag[j * nsub_ + i]);
                ec.ax[i + nsub_ * (j - 1)] = coeff(s);
            }
        }
        for (std::size_t j = 0; j < nsub_; ++j) {
            for (std::size_t i = 1; i < nsub_; ++i) {
                const double s = 0.5 * (cell_mag[j * nsub_ + (i - 1)] + cell_mag[j * nsub_ + i]);
                ec.ay[(i - 1) + (nsub_ - 1) * j] = coeff(s);
            }
        }
        return ec;
    }

    /// y = A(a) u with A the flux-form operator for the given edge coefficients
    DenseVector<double> apply_operator(const EdgeCoefficients& ec,
                                       const DenseVector<double>& u) const {
        const std::size_t nr = nsub_ - 1;
        DenseVector<double> y(n_interior(), 0.0);
        const double inv_h2 = 1.0 / (h_ * h_);
        auto uval = [&](std::size_t i, std::size_t j) -> double {
            if (i == 0 || j == 0 || i == nsub_ || j == nsub_) return 0.0;
            return u[index(i, j)];
        };
        for (std::size_t j = 1; j < nsub_; ++j) {
            for (std::size_t i = 1; i < nsub_; ++i) {
                const double axl = ec.ax[(i - 1) + nsub_ * (j - 1)];
                const double axr = ec.ax[i + nsub_ * (j - 1)];
                const double ayd = ec.ay[(i - 1) + nr * (j - 1)];
                const double ayu = ec.ay[(i - 1) + nr * j];
                const double uc = u[index(i, j)];
                y[index(i, j)] = inv_h2 * (axl * (uc - uval(i - 1, j)) + axr * (uc - uval(i + 1, j)) +
                                           ayd * (uc - uval(i, j - 1)) + ayu * (uc - uval(i, j + 1)));
            }
        }
        return y;
    }

    /// Lower band storage of the same operator, for the Cholesky solver.
    std::vector<double> assemble_band(const EdgeCoefficients& ec) const {
        const std::size_t nr = nsub_ - 1;
        const std::size_t bw = half_bandwidth();
        std::vector<double> band(n_interior() * (bw + 1), 0.0);
        const double inv_h2 = 1.0 / (h_ * h_);
        for (std::size_t j = 1; j < nsub_; ++j) {
            for (std::size_t i = 1; i < nsub_; ++i) {
                const std::size_t p = index(i, j);
                const double axl = ec.ax[(i - 1) + nsub_ * (j - 1)];
                const double axr = ec.ax[i + nsub_ * (j - 1)];
                const double ayd = ec.ay[(i - 1) + nr * (j - 1)];
                const double ayu = ec.ay[(i - 1) + nr * j];
                band[p * (bw + 1)] = inv_h2 * (axl + axr + ayd + ayu);
                if (i + 1 < nsub_) band[p * (bw + 1) + 1] = -inv_h2 * axr;
                if (j + 1 < nsub_) band[p * (bw + 1) + bw] = -inv_h2 * ayu;
            }
        }
        return band;
    }

  private:
    std::size_t nsub_;
    double h_;
};

namespace detail {

/// Direct banded solve with iterative refinement against the assembled band.
inline DenseVector<double> refined_solve(const BandedCholesky& chol, std::size_t n, std::size_t bw,
                                         const std::vector<double>& band,
                                         const DenseVector<double>& rhs) {
    DenseVector<double> x = chol.solve(rhs);
    const double bn = norm2(rhs);
    for (int pass = 0; pass < 2; ++pass) {
        DenseVector<double> r = banded_symmetric_multiply(n, bw, band, x);
        for (std::size_t i = 0; i < n; ++i) r[i] = rhs[i] - r[i];
        if (norm2(r) <= 1e-13 * bn) break;
        const DenseVector<double> dx = chol.solve(r);
        for (std::size_t i = 0; i < n; ++i) x[i] += dx[i];
    }
    return x;
}

}  // namespace detail

/// Quasilinear diffusion -div(mu(|grad u|) grad u) = f, mu(s) = 1 + atan(s),
/// f constant, on the unit square with zero boundary values. The update w
/// solves the constant-coefficient Poisson system with right-hand side
/// f - A_mu(u) u; g(u) = u + w is contractive under damping up to
/// beta* = (1 + sqrt(3)/2 + pi/3)^{-2}. The Poisson matrix is factored once.
struct QuasilinearParams {
    std::size_t subdivisions = 64;
    double forcing = 3.14159265358979323846;
    /// test hook: replaces mu when set (e.g. constant 1 recovers plain Poisson)
    std::function<double(double)> mu_override;
};

inline FixedPointProblem<double> quasilinear_problem(const QuasilinearParams& params) {
    auto grid = std::make_shared<FluxGrid>(params.subdivisions, 1.0);
    const std::size_t n = grid->n_interior();
    const std::size_t bw = grid->half_bandwidth();

    std::function<double(double)> mu = params.mu_override;
    if (!mu) mu = [](double s) { return 1.0 + std::atan(s); };

    const std::vector<double> zero_mag(grid->subdivisions() * grid->subdivisions(), 0.0);
    auto unit_coeff = grid->edge_coefficients(zero_mag, [](double) { return 1.0; });
    auto poisson_band = std::make_shared<std::vector<double>>(grid->assemble_band(unit_coeff));
    auto chol = std::make_shared<BandedCholesky>(n, bw, *poisson_band);

    const double f = params.forcing;

    FixedPointProblem<double> p;
    p.dimension = n;
    p.description = "quasilinear diffusion, Poisson-preconditioned update map";
    p.initial_guess.assign(n, 0.0);
    p.beta_star = std::pow(1.0 + std::sqrt(3.0) / 2.0 + std::acos(-1.0) / 3.0, -2.0);
    p.map = [grid, chol, poisson_band, mu, f, n, bw](const DenseVector<double>& u) {
        const std::vector<double> nodal = grid->nodal_values(u);
        const std::vector<double> mag = grid->cell_gradient_magnitudes(nodal);
        const FluxGrid::EdgeCoefficients ec = grid->edge_coefficients(mag, mu);
        DenseVector<double> rhs = grid->apply_operator(ec, u);
        for (std::size_t i = 0; i < n; ++i) rhs[i] = f - rhs[i];
        const DenseVector<double> w = detail::refined_solve(*chol, n, bw, *poisson_band, rhs);
        DenseVector<double> out(u.size());
        for (std::size_t i = 0; i < n; ++i) out[i] = u[i] + w[i];
        return out;
    };
    return p;
}

/// Regularized p-Laplace problem -div(a_eps(u) grad u) = f with
/// a_eps(u) = (eps^2 + |grad u|^2 / 2)^{(p-2)/2} on (0, 2)^2, zero boundary
/// values. The update freezes the coefficient at the current iterate and
/// solves a_eps(u_k)-weighted diffusion for w; g(u) = u + w. The coefficient
/// matrix changes every iteration and is refactored on each call.
struct PLapParams {
    std::size_t subdivisions = 64;
    double p = 1.04;
    double eps_reg = 1e-14;
    double forcing = 3.14159265358979323846;
};

inline FixedPointProblem<double> plap_problem(const PLapParams& params) {
    if (!(params.p > 1.0) || params.p > 2.0)
        throw std::invalid_argument("plap_problem: p must be in (1, 2]");
    if (!(params.eps_reg > 0.0)) throw std::invalid_argument("plap_problem: eps_reg must be positive");

    auto grid = std::make_shared<FluxGrid>(params.subdivisions, 2.0);
    const std::size_t n = grid->n_interior();
    const std::size_t bw = grid->half_bandwidth();
    const double f = params.forcing;
    const double expo = (params.p - 2.0) / 2.0;
    const double eps_sq = params.eps_reg * params.eps_reg;

    FixedPointProblem<double> p;
    p.dimension = n;
    p.description = "regularized p-Laplace, frozen-coefficient update map";
    p.initial_guess.resize(n);
    const std::size_t nsub = grid->subdivisions();
    for (std::size_t j = 1; j < nsub; ++j) {
        for (std::size_t i = 1; i < nsub; ++i) {
            const double x = grid->node_x(i), y = grid->node_y(j);
            p.initial_guess[grid->index(i, j)] =
                x * y * (x - 1.0) * (y - 1.0) * (x - 2.0) * (y - 2.0);
        }
    }

    auto coeff = [expo, eps_sq](double s) { return std::pow(eps_sq + 0.5 * s * s, expo); };

    p.map = [grid, coeff, f, n, bw](const DenseVector<double>& u) {
        const std::vector<double> nodal = grid->nodal_values(u);
        const std::vector<double> mag = grid->cell_gradient_magnitudes(nodal);
        const FluxGrid::EdgeCoefficients ec = grid->edge_coefficients(mag, coeff);
        const std::vector<double> band = grid->assemble_band(ec);
        const BandedCholesky chol(n, bw, band);
        DenseVector<double> rhs = grid->apply_operator(ec, u);
        for (std::size_t i = 0; i < n; ++i) rhs[i] = f - rhs[i];
        const DenseVector<double> w = detail::refined_solve(chol, n, bw, band, rhs);
        DenseVector<double> out(u.size());
        for (std::size_t i = 0; i < n; ++i) out[i] = u[i] + w[i];
        return out;
    };
    return p;
}

}  // namespace faa
