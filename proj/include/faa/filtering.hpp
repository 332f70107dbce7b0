#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "faa/dense.hpp"
#include "faa/errors.hpp"
#include "faa/qr.hpp"
#include "faa/svd.hpp"

namespace faa {

enum class FilterOrder { LengthThenAngle, AngleThenLength };

struct FilterParams {
    double c_s = 0.4;        ///< direction-sine threshold, (0, 1]
    double c_t = 0.0;        ///< sqrt(1 - c_s^2), kept consistent by the ctor
    double kappa_bar = 1e8;  ///< condition cap
    FilterOrder order = FilterOrder::LengthThenAngle;
    bool sharpen_cs = false; ///< AngleThenLength only: reuse the smallest realized sine

    FilterParams() { c_t = std::sqrt(1.0 - c_s * c_s); }
    FilterParams(double cs, double kappa, FilterOrder ord = FilterOrder::LengthThenAngle,
                 bool sharpen = false)
        : c_s(cs), kappa_bar(kappa), order(ord), sharpen_cs(sharpen) {
        if (!(cs > 0.0) || cs > 1.0) throw std::invalid_argument("FilterParams: c_s must be in (0, 1]");
        c_t = std::sqrt(std::max(0.0, 1.0 - cs * cs));
    }
};

template <typename T>
struct FilterOutcome {
    std::vector<bool> kept_mask;       ///< over the input columns, newest first
    std::size_t new_depth = 0;         ///< number of true entries
    std::optional<QRFactors<T>> qr;    ///< factors of the filtered F when the angle filter ran
    double c_f_estimate = 0.0;         ///< C_F value accepted by the length filter, 0 if it did not run
};

/// Per-column bounds b_j on the squared norms of the columns of R^{-1},
/// valid whenever every direction sine is at least c_s. Only the column
/// norms of F enter. Overflow to +inf for extreme inputs is deliberate:
/// the length filter treats an infinite bound as "drop everything past
/// column 1".
inline std::vector<double> column_bounds(const std::vector<double>& norms, double c_s) {
    const std::size_t m = norms.size();
    if (m == 0) throw std::invalid_argument("column_bounds: no columns");
    if (!(c_s > 0.0) || c_s > 1.0) throw std::invalid_argument("column_bounds: c_s must be in (0, 1]");

    std::vector<double> b(m);
    b[0] = 1.0 / (norms[0] * norms[0]);
    if (m == 1) return b;

    const double cs_sq = c_s * c_s;
    const double ct_sq = std::max(0.0, 1.0 - cs_sq);
    const double c_t = std::sqrt(ct_sq);
    const double q = ((c_t + c_s) / c_s) * ((c_t + c_s) / c_s);

    // b_j = ct^2 q^{j-2} / (cs^2 |f_1|^2)
    //     + (ct^2/cs^4) * sum_{i=2}^{j-1} q^{j-i-1} / |f_i|^2
    //     + 1 / (cs^2 |f_j|^2)
    double q_pow = 1.0;  // q^{j-2}
    double tail = 0.0;   // sum_{i=2}^{j-1} q^{j-i-1} / |f_i|^2
    for (std::size_t j = 2; j <= m; ++j) {
        const double nj_sq = norms[j - 1] * norms[j - 1];
        b[j - 1] = (ct_sq / cs_sq) * q_pow / (norms[0] * norms[0])
                 + (ct_sq / (cs_sq * cs_sq)) * tail
                 + 1.0 / (cs_sq * nj_sq);
        tail = q * tail + 1.0 / nj_sq;
        q_pow *= q;
    }
    return b;
}

/// Length filter: find the largest prefix 1..k whose bound
/// C_F = (sum of squared norms) * (sum of b_j) stays within kappa_bar^2,
/// scanning k from m downward. k = 1 always succeeds (C_F = 1), so the
/// first column is never dropped. No factorization is performed.
template <typename T>
FilterOutcome<T> length_filter(const DenseMatrix<T>& e, const DenseMatrix<T>& f,
                               const FilterParams& params) {
    if (e.cols() != f.cols()) throw std::invalid_argument("length_filter: column count mismatch");
    const std::size_t m = f.cols();
    std::vector<double> norms(m);
    for (std::size_t j = 0; j < m; ++j) norms[j] = f.column_norm(j);

    const std::vector<double> b = column_bounds(norms, params.c_s);
    std::vector<double> norm_prefix(m), bound_prefix(m);
    double sn = 0.0, sb = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        sn += norms[j] * norms[j];
        sb += b[j];
        norm_prefix[j] = sn;
        bound_prefix[j] = sb;
    }

    const double cap = params.kappa_bar * params.kappa_bar;
    std::size_t kept = 1;
    double accepted = norm_prefix[0] * bound_prefix[0];
    for (std::size_t k = m; k >= 1; --k) {
        const double c_f = norm_prefix[k - 1] * bound_prefix[k - 1];
        if (c_f <= cap) {
            kept = k;
            accepted = c_f;
            break;
        }
        if (k == 1) accepted = c_f;  // ties at the cap were taken above; keep column 1 regardless
    }

    FilterOutcome<T> out;
    out.kept_mask.assign(m, false);
    for (std::size_t j = 0; j < kept; ++j) out.kept_mask[j] = true;
    out.new_depth = kept;
    out.c_f_estimate = accepted;
    return out;
}

/// Angle filter: factor F, compute every direction sine from the original
/// factorization, drop all columns i >= 2 with sine < c_s in a single pass,
/// and refactor only if something was dropped. Column 1 is always kept.
template <typename T>
FilterOutcome<T> angle_filter(const DenseMatrix<T>& e, const DenseMatrix<T>& f, double c_s) {
    if (e.cols() != f.cols()) throw std::invalid_argument("angle_filter: column count mismatch");
    const std::size_t m = f.cols();
    QRFactors<T> qr = economy_qr(f);
    std::vector<double> norms(m);
    for (std::size_t j = 0; j < m; ++j) norms[j] = f.column_norm(j);
    const std::vector<double> sines = direction_sines(qr, norms);

    FilterOutcome<T> out;
    out.kept_mask.assign(m, true);
    bool removed = false;
    for (std::size_t i = 1; i < m; ++i) {
        if (sines[i - 1] < c_s) {
            out.kept_mask[i] = false;
            removed = true;
        }
    }
    out.new_depth = static_cast<std::size_t>(std::count(out.kept_mask.begin(), out.kept_mask.end(), true));
    out.qr = removed ? economy_qr(select_columns(f, out.kept_mask)) : std::move(qr);
    return out;
}

namespace detail {
/// Leading k columns of Q and leading k x k block of R, no refactorization.
template <typename T>
QRFactors<T> truncate_factors(const QRFactors<T>& qr, std::size_t k) {
    QRFactors<T> out;
    out.Q = DenseMatrix<T>(qr.Q.rows(), k);
    out.R = DenseMatrix<T>(k, k);
    for (std::size_t j = 0; j < k; ++j) {
        for (std::size_t i = 0; i < qr.Q.rows(); ++i) out.Q(i, j) = qr.Q(i, j);
        for (std::size_t i = 0; i <= j; ++i) out.R(i, j) = qr.R(i, j);
    }
    return out;
}
}  // namespace detail

/// Two-stage filter in the configured order. Both orders yield a column set
/// whose Frobenius condition number is bounded by kappa_bar; the kept sets
/// may differ. LengthThenAngle refactors after angle removals as usual;
/// AngleThenLength shrinks the already-computed factors by truncation.
template <typename T>
FilterOutcome<T> condition_filter(const DenseMatrix<T>& e, const DenseMatrix<T>& f,
                                  const FilterParams& params) {
    if (e.cols() != f.cols()) throw std::invalid_argument("condition_filter: column count mismatch");
    const std::size_t m = f.cols();

    if (params.order == FilterOrder::LengthThenAngle) {
        FilterOutcome<T> lf = length_filter(e, f, params);
        DenseMatrix<T> f1 = select_columns(f, lf.kept_mask);
        DenseMatrix<T> e1 = select_columns(e, lf.kept_mask);
        FilterOutcome<T> af = angle_filter(e1, f1, params.c_s);

        FilterOutcome<T> out;
        out.kept_mask.assign(m, false);
        std::size_t t = 0;
        for (std::size_t j = 0; j < lf.new_depth; ++j) out.kept_mask[j] = af.kept_mask[t++];
        out.new_depth = af.new_depth;
        out.qr = std::move(af.qr);
        out.c_f_estimate = lf.c_f_estimate;
        return out;
    }

    FilterOutcome<T> af = angle_filter(e, f, params.c_s);
    const QRFactors<T>& aqr = *af.qr;

    std::vector<double> surv_norms;
    surv_norms.reserve(af.new_depth);
    for (std::size_t j = 0; j < m; ++j)
        if (af.kept_mask[j]) surv_norms.push_back(f.column_norm(j));

    double cs_eff = params.c_s;
    if (params.sharpen_cs && af.new_depth >= 2) {
        const std::vector<double> realized = direction_sines(aqr, surv_norms);
        double smallest = 1.0;
        for (double s : realized) smallest = std::min(smallest, s);
        cs_eff = std::max(params.c_s, smallest);
    }

    const std::vector<double> b = column_bounds(surv_norms, cs_eff);
    const double cap = params.kappa_bar * params.kappa_bar;
    double sn = 0.0, sb = 0.0;
    std::vector<double> c_f(af.new_depth);
    for (std::size_t j = 0; j < af.new_depth; ++j) {
        sn += surv_norms[j] * surv_norms[j];
        sb += b[j];
        c_f[j] = sn * sb;
    }
    std::size_t kept = 1;
    double accepted = c_f[0];
    for (std::size_t k = af.new_depth; k >= 1; --k) {
        if (c_f[k - 1] <= cap) {
            kept = k;
            accepted = c_f[k - 1];
            break;
        }
        if (k == 1) accepted = c_f[0];
    }

    FilterOutcome<T> out;
    out.kept_mask.assign(m, false);
    std::size_t seen = 0;
    for (std::size_t j = 0; j < m; ++j) {
        if (!af.kept_mask[j]) continue;
        if (seen < kept) out.kept_mask[j] = true;
        ++seen;
    }
    out.new_depth = kept;
    out.qr = (kept == af.new_depth) ? std::move(af.qr)
                                    : std::optional<QRFactors<T>>(detail::truncate_factors(aqr, kept));
    out.c_f_estimate = accepted;
    return out;
}

/// Truncation rank for a descending singular value list: the largest s with
/// sigma_1 / sigma_s < kappa_bar (strict). At least 1 when sigma_1 > 0.
inline std::size_t tsvd_truncation_rank(const std::vector<double>& sigma, double kappa_bar) {
    if (sigma.empty() || sigma[0] <= 0.0) return 0;
    std::size_t s = 1;
    while (s < sigma.size() && sigma[s] > 0.0 && sigma[0] < kappa_bar * sigma[s]) ++s;
    return s;
}

/// Least-squares coefficients through a truncated SVD of R: keep the leading
/// s singular triplets with sigma_1/sigma_s < kappa_bar and form
/// gamma = V_s Sigma_s^{-1} U_s* (Q* w). gamma always has length cols(F).
template <typename T>
DenseVector<T> tsvd_solve(const DenseMatrix<T>& f, const DenseVector<T>& w, double kappa_bar) {
    QRFactors<T> qr = economy_qr(f);
    SvdFactors<T> svd = small_svd(qr.R);
    const DenseVector<T> qw = multiply_adjoint(qr.Q, w);
    const std::size_t m = f.cols();
    const std::size_t s = tsvd_truncation_rank(svd.singular_values, kappa_bar);

    DenseVector<T> gamma(m, T{});
    for (std::size_t i = 0; i < s; ++i) {
        T c{};
        for (std::size_t k = 0; k < m; ++k) c += conj_of(svd.U(k, i)) * qw[k];
        c = c * (1.0 / svd.singular_values[i]);
        for (std::size_t k = 0; k < m; ++k) gamma[k] += svd.V(k, i) * c;
    }
    return gamma;
}

}  // namespace faa
