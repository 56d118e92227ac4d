#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

namespace varorder {

inline double value_of(double x) { return x; }

/// Dense row-major matrix over a scalar type T (double, or ad::Var when the
/// computation has to be differentiated). Dimensions here are small (m <= 13,
/// block sizes up to m * p_max), so no blocking or aliasing tricks.
template <class T>
class Mat {
 public:
  Mat() = default;
  Mat(int rows, int cols) : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, T(0)) {}

  static Mat identity(int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = T(1);
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  T& operator()(int i, int j) { return data_[static_cast<std::size_t>(i) * cols_ + j]; }
  const T& operator()(int i, int j) const { return data_[static_cast<std::size_t>(i) * cols_ + j]; }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  /// Copies the other matrix into this one starting at (row, col).
  void set_block(int row, int col, const Mat& other) {
    for (int i = 0; i < other.rows(); ++i)
      for (int j = 0; j < other.cols(); ++j) (*this)(row + i, col + j) = other(i, j);
  }

  Mat block(int row, int col, int nrows, int ncols) const {
    Mat out(nrows, ncols);
    for (int i = 0; i < nrows; ++i)
      for (int j = 0; j < ncols; ++j) out(i, j) = (*this)(row + i, col + j);
    return out;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> data_;
};

template <class T>
Mat<T> operator+(const Mat<T>& a, const Mat<T>& b) {
  assert(a.rows() == b.rows() && a.cols() == b.cols());
  Mat<T> out(a.rows(), a.cols());
  for (std::size_t k = 0; k < a.data().size(); ++k) out.data()[k] = a.data()[k] + b.data()[k];
  return out;
}

template <class T>
Mat<T> operator-(const Mat<T>& a, const Mat<T>& b) {
  assert(a.rows() == b.rows() && a.cols() == b.cols());
  Mat<T> out(a.rows(), a.cols());
  for (std::size_t k = 0; k < a.data().size(); ++k) out.data()[k] = a.data()[k] - b.data()[k];
  return out;
}

template <class T>
Mat<T> operator*(const Mat<T>& a, const Mat<T>& b) {
  assert(a.cols() == b.rows());
  Mat<T> out(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i) {
    for (int k = 0; k < a.cols(); ++k) {
      const T& aik = a(i, k);
      for (int j = 0; j < b.cols(); ++j) out(i, j) = out(i, j) + aik * b(k, j);
    }
  }
  return out;
}

template <class T>
Mat<T> operator*(double s, const Mat<T>& a) {
  Mat<T> out(a.rows(), a.cols());
  for (std::size_t k = 0; k < a.data().size(); ++k) out.data()[k] = a.data()[k] * s;
  return out;
}

template <class T>
std::vector<T> operator*(const Mat<T>& a, const std::vector<T>& x) {
  assert(a.cols() == static_cast<int>(x.size()));
  std::vector<T> out(a.rows(), T(0));
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) out[i] = out[i] + a(i, j) * x[j];
  return out;
}

template <class T>
Mat<T> transpose(const Mat<T>& a) {
  Mat<T> out(a.cols(), a.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

/// (M + M^T) / 2. Applied after every SPD-producing step to suppress
/// floating-point drift in the recursions.
template <class T>
Mat<T> symmetrize(const Mat<T>& a) {
  assert(a.rows() == a.cols());
  Mat<T> out(a.rows(), a.cols());
  for (int i = 0; i < a.rows(); ++i) {
    out(i, i) = a(i, i);
    for (int j = 0; j < i; ++j) {
      T v = (a(i, j) + a(j, i)) * 0.5;
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return out;
}

template <class T>
double frobenius_norm_value(const Mat<T>& a) {
  double s = 0;
  for (const T& v : a.data()) {
    double d = value_of(v);
    s += d * d;
  }
  return std::sqrt(s);
}

inline double frobenius_norm(const Mat<double>& a) { return frobenius_norm_value(a); }

template <class T>
double max_abs_value(const Mat<T>& a) {
  double s = 0;
  for (const T& v : a.data()) s = std::max(s, std::abs(value_of(v)));
  return s;
}

/// Lower Cholesky factor of a symmetric positive definite matrix, or nullopt
/// if a pivot fails to be strictly positive (including NaN pivots).
template <class T>
std::optional<Mat<T>> cholesky_lower(const Mat<T>& a) {
  using std::sqrt;
  const int n = a.rows();
  assert(a.cols() == n);
  Mat<T> l(n, n);
  for (int j = 0; j < n; ++j) {
    T d = a(j, j);
    for (int k = 0; k < j; ++k) d = d - l(j, k) * l(j, k);
    double dv = value_of(d);
    if (!(dv > 0.0) || !std::isfinite(dv)) return std::nullopt;
    l(j, j) = sqrt(d);
    for (int i = j + 1; i < n; ++i) {
      T s = a(i, j);
      for (int k = 0; k < j; ++k) s = s - l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return l;
}

/// Solves L x = b in place for lower-triangular L.
template <class T>
void solve_lower_in_place(const Mat<T>& l, std::vector<T>& b) {
  const int n = l.rows();
  for (int i = 0; i < n; ++i) {
    T s = b[i];
    for (int k = 0; k < i; ++k) s = s - l(i, k) * b[k];
    b[i] = s / l(i, i);
  }
}

/// Solves L^T x = b in place for lower-triangular L.
template <class T>
void solve_lower_transpose_in_place(const Mat<T>& l, std::vector<T>& b) {
  const int n = l.rows();
  for (int i = n - 1; i >= 0; --i) {
    T s = b[i];
    for (int k = i + 1; k < n; ++k) s = s - l(k, i) * b[k];
    b[i] = s / l(i, i);
  }
}

/// Inverse of an SPD matrix via its Cholesky factor; nullopt if the
/// factorization fails.
template <class T>
std::optional<Mat<T>> spd_inverse(const Mat<T>& a) {
  const int n = a.rows();
  auto chol = cholesky_lower(a);
  if (!chol) return std::nullopt;
  Mat<T> inv(n, n);
  std::vector<T> col(n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) col[i] = (i == j) ? T(1) : T(0);
    solve_lower_in_place(*chol, col);
    solve_lower_transpose_in_place(*chol, col);
    for (int i = 0; i < n; ++i) inv(i, j) = col[i];
  }
  return symmetrize(inv);
}

template <class T>
struct SqrtPair {
  Mat<T> sqrt;      // S with S * S = M
  Mat<T> inv_sqrt;  // S^{-1}
  bool converged = false;
  int iterations = 0;
};

/// Denman-Beavers iteration for the symmetric square root and its inverse.
/// A smooth composition of inverses and averages, so it can be carried on an
/// autodiff tape; the executed iteration count is fixed by the values.
/// Convergence: relative Frobenius increment of the S iterate below tol.
template <class T>
std::optional<SqrtPair<T>> denman_beavers(const Mat<T>& m, double tol = 1e-13, int max_iter = 100) {
  const int n = m.rows();
  assert(m.cols() == n);
  SqrtPair<T> out;
  Mat<T> y = symmetrize(m);
  Mat<T> z = Mat<T>::identity(n);
  for (int it = 1; it <= max_iter; ++it) {
    auto yinv = spd_inverse(y);
    if (!yinv) return std::nullopt;
    auto zinv = spd_inverse(z);
    if (!zinv) return std::nullopt;
    Mat<T> ynext = symmetrize(0.5 * (y + *zinv));
    Mat<T> znext = symmetrize(0.5 * (z + *yinv));
    double incr = frobenius_norm_value(ynext - y);
    double scale = std::max(1.0, frobenius_norm_value(ynext));
    y = std::move(ynext);
    z = std::move(znext);
    out.iterations = it;
    if (incr <= tol * scale) {
      out.converged = true;
      break;
    }
  }
  out.sqrt = std::move(y);
  out.inv_sqrt = std::move(z);
  return out;
}

}  // namespace varorder
