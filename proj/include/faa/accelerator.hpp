#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "faa/dense.hpp"
#include "faa/errors.hpp"
#include "faa/filtering.hpp"
#include "faa/qr.hpp"
#include "faa/svd.hpp"

namespace faa {

enum class Strategy { PlainAA, FAA, TSVD };
enum class CsSchedule { Constant, Dynamic };
enum class DepthScheduleKind { Constant, Multilevel };
enum class SolveStatus { Converged, MaxIters, Diverged };

struct SolverConfig {
    Strategy strategy = Strategy::FAA;
    std::size_t m = 10;             ///< window depth cap; 0 means damped fixed-point iteration
    double beta = 1.0;              ///< damping factor, (0, 1]
    FilterParams filter{};          ///< c_s here is the constant-schedule value
    CsSchedule cs_schedule = CsSchedule::Constant;
    DepthScheduleKind depth_schedule = DepthScheduleKind::Constant;
    double multilevel_tau = 1e-2;   ///< residual level that unlocks the late depth
    std::size_t m_early = 1;
    std::size_t m_late = 20;
    double tsvd_kappa = 1e8;        ///< singular value ratio cap for the TSVD strategy
    double tol = 1e-10;
    std::size_t max_iters = 500;
};

struct IterationRecord {
    std::size_t k = 0;
    double residual_norm = 0.0;  ///< ||g(x_k) - x_k||
    double theta = 1.0;          ///< optimization gain, 1 for plain damped steps, 0 at convergence
    double cond_F = 0.0;         ///< condition telemetry of the matrix actually used, 0 if no solve
    std::size_t m_k = 0;         ///< history depth after filtering
    std::vector<bool> kept_mask; ///< over pre-filter columns, newest first
    double cs_used = 0.0;        ///< direction-sine threshold in effect, 0 for strategies without one
    double beta_used = 1.0;
};

template <typename T>
struct RunTrace {
    std::vector<IterationRecord> records;
    bool converged = false;
    SolveStatus status = SolveStatus::MaxIters;
    DenseVector<T> final_x;
    std::size_t iters = 0;  ///< number of iterations executed (= records.size())
};

/// Difference-pair history, newest column first. Column removal is always
/// paired so e_i and f_i stay aligned.
template <typename T>
class ColumnHistory {
  public:
    std::size_t size() const { return f_cols_.size(); }

    void push_newest(DenseVector<T> e, DenseVector<T> f) {
        e_cols_.insert(e_cols_.begin(), std::move(e));
        f_cols_.insert(f_cols_.begin(), std::move(f));
    }

    void drop_oldest() {
        e_cols_.pop_back();
        f_cols_.pop_back();
    }

    void apply_mask(const std::vector<bool>& keep) {
        if (keep.size() != f_cols_.size())
            throw std::invalid_argument("ColumnHistory: mask size mismatch");
        std::size_t t = 0;
        for (std::size_t j = 0; j < keep.size(); ++j) {
            if (!keep[j]) continue;
            if (t != j) {
                e_cols_[t] = std::move(e_cols_[j]);
                f_cols_[t] = std::move(f_cols_[j]);
            }
            ++t;
        }
        e_cols_.resize(t);
        f_cols_.resize(t);
    }

    DenseMatrix<T> e_matrix() const { return from_columns(e_cols_); }
    DenseMatrix<T> f_matrix() const { return from_columns(f_cols_); }
    const DenseVector<T>& newest_f() const { return f_cols_.front(); }

  private:
    std::vector<DenseVector<T>> e_cols_;
    std::vector<DenseVector<T>> f_cols_;
};

/// w = g(x) - x
template <typename T>
DenseVector<T> residual(const DenseVector<T>& g_of_x, const DenseVector<T>& x) {
    if (g_of_x.size() != x.size()) throw std::invalid_argument("residual: size mismatch");
    DenseVector<T> w(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) w[i] = g_of_x[i] - x[i];
    return w;
}

/// Optimization gain ||F gamma - w|| / ||w||, in [0, 1] for a minimizing gamma.
template <typename T>
double gain(const DenseMatrix<T>& f, const DenseVector<T>& gamma, const DenseVector<T>& w) {
    const double wn = norm2(w);
    if (wn == 0.0) throw ZeroResidual("gain: residual is zero");
    DenseVector<T> r = multiply(f, gamma);
    for (std::size_t i = 0; i < w.size(); ++i) r[i] -= w[i];
    return norm2(r) / wn;
}

/// x_next = x + beta w - (E + beta F) gamma
template <typename T>
DenseVector<T> aa_update(const DenseVector<T>& x, const DenseVector<T>& w,
                         const DenseMatrix<T>& e, const DenseMatrix<T>& f,
                         const DenseVector<T>& gamma, double beta) {
    DenseVector<T> eg = multiply(e, gamma);
    DenseVector<T> fg = multiply(f, gamma);
    DenseVector<T> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        out[i] = x[i] + beta * w[i] - eg[i] - beta * fg[i];
    return out;
}

/// Residual-driven direction-sine threshold:
/// c_s = max(min(sqrt(||w||), 2^{-1/2}), 0.1).
inline double dynamic_cs(double residual_norm) {
    static const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    return std::max(std::min(std::sqrt(residual_norm), inv_sqrt2), 0.1);
}

/// Depth cap at iteration k. For the multilevel schedule the cap switches
/// from m_early to m_late once the residual has ever been below tau, so the
/// caller passes the smallest residual observed so far (the switch latches).
inline std::size_t effective_depth(std::size_t k, double min_residual_so_far,
                                   const SolverConfig& config) {
    std::size_t cap = config.m;
    if (config.depth_schedule == DepthScheduleKind::Multilevel)
        cap = (min_residual_so_far < config.multilevel_tau) ? config.m_late : config.m_early;
    return std::min(k, cap);
}

namespace detail {

/// ||w - Q Q* w|| / ||w||: the gain of the least-squares minimizer evaluated
/// through the orthogonal projector. Equal to ||F gamma - w|| / ||w|| in
/// exact arithmetic and immune to the cancellation that direct evaluation
/// suffers when R is badly conditioned.
template <typename T>
double projected_gain(const DenseMatrix<T>& q, const DenseVector<T>& w, double wn) {
    const DenseVector<T> qw = multiply_adjoint(q, w);
    DenseVector<T> r = multiply(q, qw);
    for (std::size_t i = 0; i < w.size(); ++i) r[i] = w[i] - r[i];
    return norm2(r) / wn;
}

}  // namespace detail

/// Driver for the accelerated fixed-point iteration:
///   k = 0        damped fixed-point step,
///   k = 1        depth-1 step with the coefficient from the normal equation,
///   k >= 2       window slide, strategy dispatch (plain QR solve, two-stage
///                filter + QR solve, or truncated-SVD solve), then the update
///                x_{k+1} = x_k + beta w - (E + beta F) gamma.
/// Filtering is persistent: columns removed at iteration k stay removed.
/// Terminates when ||w|| < tol, when the residual exceeds 1e15 or turns
/// non-finite (Diverged), or at max_iters; the partial trace is preserved.
template <typename T>
RunTrace<T> solve(const std::function<DenseVector<T>(const DenseVector<T>&)>& g,
                  const SolverConfig& config, const DenseVector<T>& x0) {
    RunTrace<T> trace;
    DenseVector<T> x = x0;
    DenseVector<T> x_prev, w_prev;
    ColumnHistory<T> history;
    double min_residual = std::numeric_limits<double>::infinity();

    for (std::size_t k = 0;; ++k) {
        const DenseVector<T> gx = g(x);
        const DenseVector<T> w = residual(gx, x);
        const double rn = norm2(w);

        IterationRecord rec;
        rec.k = k;
        rec.residual_norm = rn;
        rec.beta_used = config.beta;

        if (!std::isfinite(rn) || rn > 1e15) {
            trace.records.push_back(std::move(rec));
            trace.status = SolveStatus::Diverged;
            break;
        }
        min_residual = std::min(min_residual, rn);

        if (rn < config.tol) {
            rec.theta = 0.0;
            trace.records.push_back(std::move(rec));
            trace.status = SolveStatus::Converged;
            trace.converged = true;
            break;
        }

        if (config.strategy == Strategy::FAA)
            rec.cs_used = (config.cs_schedule == CsSchedule::Dynamic) ? dynamic_cs(rn)
                                                                      : config.filter.c_s;

        if (k == config.max_iters) {
            trace.records.push_back(std::move(rec));
            trace.status = SolveStatus::MaxIters;
            break;
        }

        const std::size_t m_cap = (k == 0) ? 0 : effective_depth(k, min_residual, config);
        DenseVector<T> x_next;

        if (m_cap == 0) {
            x_next = x;
            for (std::size_t i = 0; i < x.size(); ++i) x_next[i] += config.beta * w[i];
        } else {
            while (history.size() + 1 > m_cap) history.drop_oldest();
            DenseVector<T> e_new(x.size()), f_new(x.size());
            for (std::size_t i = 0; i < x.size(); ++i) {
                e_new[i] = x[i] - x_prev[i];
                f_new[i] = w[i] - w_prev[i];
            }
            history.push_newest(std::move(e_new), std::move(f_new));

            if (k == 1) {
                const DenseVector<T>& f1 = history.newest_f();
                const T ff = dot(f1, f1);
                DenseVector<T> gamma(1, T{});
                if (abs_sq(ff) > 0.0) gamma[0] = dot(f1, w) / ff;
                const DenseMatrix<T> e_mat = history.e_matrix();
                const DenseMatrix<T> f_mat = history.f_matrix();
                rec.theta = gain(f_mat, gamma, w);
                rec.cond_F = 1.0;
                rec.m_k = 1;
                rec.kept_mask.assign(1, true);
                x_next = aa_update(x, w, e_mat, f_mat, gamma, config.beta);
            } else {
                DenseMatrix<T> e_mat = history.e_matrix();
                DenseMatrix<T> f_mat = history.f_matrix();
                const std::size_t cols = f_mat.cols();
                DenseVector<T> gamma;

                switch (config.strategy) {
                    case Strategy::PlainAA: {
                        const QRFactors<T> qr = economy_qr(f_mat);
                        try {
                            gamma = least_squares_solve(qr, w);
                        } catch (const SingularR&) {
                            gamma.assign(cols, T{});  // degenerate basis: fall back to the damped step
                        }
                        try {
                            rec.cond_F = frobenius_cond_from_factors(qr);
                        } catch (const SingularR&) {
                            rec.cond_F = std::numeric_limits<double>::infinity();
                        }
                        rec.theta = detail::projected_gain(qr.Q, w, rn);
                        rec.m_k = cols;
                        rec.kept_mask.assign(cols, true);
                        break;
                    }
                    case Strategy::FAA: {
                        FilterParams p(rec.cs_used, config.filter.kappa_bar, config.filter.order,
                                       config.filter.sharpen_cs);
                        FilterOutcome<T> outcome = condition_filter(e_mat, f_mat, p);
                        history.apply_mask(outcome.kept_mask);
                        e_mat = select_columns(e_mat, outcome.kept_mask);
                        f_mat = select_columns(f_mat, outcome.kept_mask);
                        const QRFactors<T>& qr = *outcome.qr;
                        try {
                            gamma = least_squares_solve(qr, w);
                        } catch (const SingularR&) {
                            gamma.assign(outcome.new_depth, T{});
                        }
                        try {
                            rec.cond_F = frobenius_cond_from_factors(qr);
                        } catch (const SingularR&) {
                            rec.cond_F = std::numeric_limits<double>::infinity();
                        }
                        rec.theta = detail::projected_gain(qr.Q, w, rn);
                        rec.m_k = outcome.new_depth;
                        rec.kept_mask = outcome.kept_mask;
                        break;
                    }
                    case Strategy::TSVD: {
                        const QRFactors<T> qr = economy_qr(f_mat);
                        const SvdFactors<T> svd = small_svd(qr.R);
                        const DenseVector<T> qw = multiply_adjoint(qr.Q, w);
                        const std::size_t s = tsvd_truncation_rank(svd.singular_values, config.tsvd_kappa);
                        gamma.assign(cols, T{});
                        DenseVector<T> kept_part(cols, T{});  // Q-basis image of the kept subspace
                        for (std::size_t i = 0; i < s; ++i) {
                            T c{};
                            for (std::size_t r2 = 0; r2 < cols; ++r2) c += conj_of(svd.U(r2, i)) * qw[r2];
                            for (std::size_t r2 = 0; r2 < cols; ++r2) kept_part[r2] += svd.U(r2, i) * c;
                            c = c * (1.0 / svd.singular_values[i]);
                            for (std::size_t r2 = 0; r2 < cols; ++r2) gamma[r2] += svd.V(r2, i) * c;
                        }
                        DenseVector<T> proj = multiply(qr.Q, kept_part);
                        for (std::size_t i = 0; i < w.size(); ++i) proj[i] = w[i] - proj[i];
                        rec.theta = norm2(proj) / rn;
                        rec.cond_F = (s > 0) ? svd.singular_values[0] / svd.singular_values[s - 1] : 0.0;
                        rec.m_k = cols;
                        rec.kept_mask.assign(cols, true);
                        break;
                    }
                }
                x_next = aa_update(x, w, e_mat, f_mat, gamma, config.beta);
            }
        }

        trace.records.push_back(std::move(rec));
        x_prev = x;
        w_prev = w;
        x = std::move(x_next);
    }

    trace.final_x = std::move(x);
    trace.iters = trace.records.size();
    return trace;
}

}  // namespace faa
