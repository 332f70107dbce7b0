#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <type_traits>
#include <vector>

namespace faa {

template <typename T>
struct is_complex_scalar : std::false_type {};
template <typename R>
struct is_complex_scalar<std::complex<R>> : std::true_type {};
template <typename T>
inline constexpr bool is_complex_scalar_v = is_complex_scalar<T>::value;

inline double conj_of(double x) { return x; }
inline std::complex<double> conj_of(const std::complex<double>& x) { return std::conj(x); }

/// |x|^2 without the square root.
inline double abs_sq(double x) { return x * x; }
inline double abs_sq(const std::complex<double>& x) { return std::norm(x); }

template <typename T>
using DenseVector = std::vector<T>;

/// Column-major dense matrix over double or std::complex<double>.
template <typename T>
class DenseMatrix {
  public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, T{}) {}

    static DenseMatrix identity(std::size_t rows, std::size_t cols) {
        DenseMatrix m(rows, cols);
        const std::size_t d = rows < cols ? rows : cols;
        for (std::size_t i = 0; i < d; ++i) m(i, i) = T{1};
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    T& operator()(std::size_t i, std::size_t j) { return data_[j * rows_ + i]; }
    const T& operator()(std::size_t i, std::size_t j) const { return data_[j * rows_ + i]; }

    T* col(std::size_t j) { return data_.data() + j * rows_; }
    const T* col(std::size_t j) const { return data_.data() + j * rows_; }

    double column_norm(std::size_t j) const {
        double s = 0.0;
        const T* c = col(j);
        for (std::size_t i = 0; i < rows_; ++i) s += abs_sq(c[i]);
        return std::sqrt(s);
    }

    double frobenius_norm() const {
        double s = 0.0;
        for (const T& v : data_) s += abs_sq(v);
        return std::sqrt(s);
    }

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

/// Inner product, conjugate-linear in the first argument.
template <typename T>
T dot(const DenseVector<T>& a, const DenseVector<T>& b) {
    T s{};
    for (std::size_t i = 0; i < a.size(); ++i) s += conj_of(a[i]) * b[i];
    return s;
}

template <typename T>
double norm2(const DenseVector<T>& v) {
    double s = 0.0;
    for (const T& x : v) s += abs_sq(x);
    return std::sqrt(s);
}

/// y = M x
template <typename T>
DenseVector<T> multiply(const DenseMatrix<T>& m, const DenseVector<T>& x) {
    if (x.size() != m.cols()) throw std::invalid_argument("multiply: size mismatch");
    DenseVector<T> y(m.rows(), T{});
    for (std::size_t j = 0; j < m.cols(); ++j) {
        const T* c = m.col(j);
        const T xj = x[j];
        for (std::size_t i = 0; i < m.rows(); ++i) y[i] += c[i] * xj;
    }
    return y;
}

/// y = M* x  (conjugate transpose)
template <typename T>
DenseVector<T> multiply_adjoint(const DenseMatrix<T>& m, const DenseVector<T>& x) {
    if (x.size() != m.rows()) throw std::invalid_argument("multiply_adjoint: size mismatch");
    DenseVector<T> y(m.cols(), T{});
    for (std::size_t j = 0; j < m.cols(); ++j) {
        const T* c = m.col(j);
        T s{};
        for (std::size_t i = 0; i < m.rows(); ++i) s += conj_of(c[i]) * x[i];
        y[j] = s;
    }
    return y;
}

template <typename T>
DenseMatrix<T> select_columns(const DenseMatrix<T>& m, const std::vector<bool>& keep) {
    if (keep.size() != m.cols()) throw std::invalid_argument("select_columns: mask size mismatch");
    std::size_t kept = 0;
    for (bool b : keep) kept += b ? 1 : 0;
    DenseMatrix<T> out(m.rows(), kept);
    std::size_t t = 0;
    for (std::size_t j = 0; j < m.cols(); ++j) {
        if (!keep[j]) continue;
        const T* src = m.col(j);
        T* dst = out.col(t++);
        for (std::size_t i = 0; i < m.rows(); ++i) dst[i] = src[i];
    }
    return out;
}

template <typename T>
DenseMatrix<T> from_columns(const std::vector<DenseVector<T>>& cols) {
    if (cols.empty()) return DenseMatrix<T>();
    DenseMatrix<T> out(cols.front().size(), cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j) {
        if (cols[j].size() != out.rows())
            throw std::invalid_argument("from_columns: ragged columns");
        T* dst = out.col(j);
        for (std::size_t i = 0; i < out.rows(); ++i) dst[i] = cols[j][i];
    }
    return out;
}

}  // namespace faa
