#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace sparse_saddle {

using Vector = std::vector<double>;

/// Dense row-major matrix. Everything downstream is desk scale, so no sparse
/// storage and no iterative solvers.
class Matrix {
public:
  Matrix() = default;
  Matrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), a_(static_cast<std::size_t>(rows) * cols, fill) {
    if (rows < 0 || cols < 0) throw std::invalid_argument("Matrix: negative dimensions");
  }

  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  double& operator()(int i, int j) { return a_[static_cast<std::size_t>(i) * cols_ + j]; }
  double operator()(int i, int j) const { return a_[static_cast<std::size_t>(i) * cols_ + j]; }

  const std::vector<double>& data() const { return a_; }

  Matrix transposed() const {
    Matrix t(cols_, rows_);
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  Matrix& operator+=(const Matrix& other) {
    check_same_shape(other, "operator+=");
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] += other.a_[k];
    return *this;
  }

  Matrix& add_scaled(const Matrix& other, double factor) {
    check_same_shape(other, "add_scaled");
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] += factor * other.a_[k];
    return *this;
  }

  Matrix& operator*=(double factor) {
    for (double& x : a_) x *= factor;
    return *this;
  }

  double max_abs() const {
    double m = 0.0;
    for (double x : a_) m = std::max(m, std::abs(x));
    return m;
  }

  double max_asymmetry() const {
    if (rows_ != cols_) return std::numeric_limits<double>::infinity();
    double m = 0.0;
    for (int i = 0; i < rows_; ++i)
      for (int j = i + 1; j < cols_; ++j) m = std::max(m, std::abs((*this)(i, j) - (*this)(j, i)));
    return m;
  }

private:
  void check_same_shape(const Matrix& other, const char* what) const {
    if (rows_ != other.rows_ || cols_ != other.cols_)
      throw std::invalid_argument(std::string(what) + ": shape mismatch");
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> a_;
};

inline Vector matvec(const Matrix& m, const Vector& x) {
  if (static_cast<int>(x.size()) != m.cols()) throw std::invalid_argument("matvec: dimension mismatch");
  Vector y(static_cast<std::size_t>(m.rows()), 0.0);
  for (int i = 0; i < m.rows(); ++i) {
    double s = 0.0;
    for (int j = 0; j < m.cols(); ++j) s += m(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

inline Vector matvec_transposed(const Matrix& m, const Vector& x) {
  if (static_cast<int>(x.size()) != m.rows()) throw std::invalid_argument("matvec_transposed: dimension mismatch");
  Vector y(static_cast<std::size_t>(m.cols()), 0.0);
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) y[j] += m(i, j) * x[i];
  return y;
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: dimension mismatch");
  Matrix c(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

inline double dot(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: dimension mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

inline double norm2(const Vector& v) { return std::sqrt(dot(v, v)); }

inline void axpy(Vector& y, double factor, const Vector& x) {
  if (x.size() != y.size()) throw std::invalid_argument("axpy: dimension mismatch");
  for (std::size_t k = 0; k < x.size(); ++k) y[k] += factor * x[k];
}

namespace detail {
inline std::atomic<std::uint64_t>& lu_counter() {
  static std::atomic<std::uint64_t> count{0};
  return count;
}
}  // namespace detail

/// Number of lu_factor calls since process start; used to assert factorization
/// reuse in the Taylor recursion.
inline std::uint64_t lu_factor_call_count() { return detail::lu_counter().load(); }

/// PK = LU with partial pivoting, factors stored packed. The condition
/// estimate is the pivot growth ratio |max pivot| / |min pivot|; it flags
/// near-singularity, it is not a tight condition number.
class LuFactorization {
public:
  explicit LuFactorization(Matrix k) : lu_(std::move(k)), piv_(static_cast<std::size_t>(lu_.rows())) {
    detail::lu_counter().fetch_add(1);
    const int n = lu_.rows();
    if (n != lu_.cols()) throw std::invalid_argument("lu_factor: matrix must be square");
    for (int i = 0; i < n; ++i) piv_[i] = i;
    double piv_max = 0.0, piv_min = std::numeric_limits<double>::infinity();
    for (int k = 0; k < n; ++k) {
      int p = k;
      double best = std::abs(lu_(k, k));
      for (int i = k + 1; i < n; ++i) {
        if (std::abs(lu_(i, k)) > best) {
          best = std::abs(lu_(i, k));
          p = i;
        }
      }
      if (best == 0.0) throw std::runtime_error("lu_factor: matrix is singular (zero pivot in column " + std::to_string(k) + ")");
      if (p != k) {
        for (int j = 0; j < n; ++j) std::swap(lu_(k, j), lu_(p, j));
        std::swap(piv_[k], piv_[p]);
      }
      piv_max = std::max(piv_max, best);
      piv_min = std::min(piv_min, best);
      const double inv = 1.0 / lu_(k, k);
      for (int i = k + 1; i < n; ++i) {
        const double m = lu_(i, k) * inv;
        lu_(i, k) = m;
        if (m == 0.0) continue;
        for (int j = k + 1; j < n; ++j) lu_(i, j) -= m * lu_(k, j);
      }
    }
    cond_estimate_ = (n == 0) ? 0.0 : piv_max / piv_min;
  }

  double cond_estimate() const { return cond_estimate_; }

  Vector solve(const Vector& b) const {
    const int n = lu_.rows();
    if (static_cast<int>(b.size()) != n) throw std::invalid_argument("LuFactorization::solve: dimension mismatch");
    Vector x(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) x[i] = b[piv_[i]];
    for (int i = 1; i < n; ++i) {
      double s = x[i];
      for (int j = 0; j < i; ++j) s -= lu_(i, j) * x[j];
      x[i] = s;
    }
    for (int i = n - 1; i >= 0; --i) {
      double s = x[i];
      for (int j = i + 1; j < n; ++j) s -= lu_(i, j) * x[j];
      x[i] = s / lu_(i, i);
    }
    return x;
  }

private:
  Matrix lu_;
  std::vector<int> piv_;
  double cond_estimate_ = 0.0;
};

inline LuFactorization lu_factor(Matrix k) { return LuFactorization(std::move(k)); }

/// Lower Cholesky factor of an SPD matrix.
inline Matrix cholesky(const Matrix& m) {
  const int n = m.rows();
  if (n != m.cols()) throw std::invalid_argument("cholesky: matrix must be square");
  Matrix l(n, n);
  for (int j = 0; j < n; ++j) {
    double d = m(j, j);
    for (int k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (d <= 0.0) throw std::runtime_error("cholesky: matrix is not positive definite (row " + std::to_string(j) + ")");
    l(j, j) = std::sqrt(d);
    const double inv = 1.0 / l(j, j);
    for (int i = j + 1; i < n; ++i) {
      double s = m(i, j);
      for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s * inv;
    }
  }
  return l;
}

namespace detail {

inline void forward_substitute(const Matrix& l, Vector& x) {
  const int n = l.rows();
  for (int i = 0; i < n; ++i) {
    double s = x[i];
    for (int j = 0; j < i; ++j) s -= l(i, j) * x[j];
    x[i] = s / l(i, i);
  }
}

inline void backward_substitute_transposed(const Matrix& l, Vector& x) {
  const int n = l.rows();
  for (int i = n - 1; i >= 0; --i) {
    double s = x[i];
    for (int j = i + 1; j < n; ++j) s -= l(j, i) * x[j];
    x[i] = s / l(i, i);
  }
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations; tolerance
/// 1e-12 on the off-diagonal Frobenius norm relative to the matrix norm,
/// at most 100 sweeps.
inline Vector jacobi_eigenvalues(Matrix a) {
  const int n = a.rows();
  auto off_norm = [&] {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) s += 2.0 * a(i, j) * a(i, j);
    return std::sqrt(s);
  };
  double full_norm = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) full_norm += a(i, j) * a(i, j);
  full_norm = std::sqrt(full_norm);
  const double tol = 1e-12 * std::max(full_norm, 1e-300);

  for (int sweep = 0; sweep < 100 && off_norm() > tol; ++sweep) {
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  Vector eig(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) eig[i] = a(i, i);
  std::sort(eig.begin(), eig.end());
  return eig;
}

}  // namespace detail

struct EigExtremes {
  double min;
  double max;
};

/// Extreme generalized eigenvalues of A x = lambda M x for symmetric A and SPD
/// M, via Cholesky reduction to a standard symmetric problem.
inline EigExtremes sym_eig_extremes(const Matrix& a, const Matrix& m) {
  if (a.rows() != a.cols() || m.rows() != m.cols() || a.rows() != m.rows())
    throw std::invalid_argument("sym_eig_extremes: shape mismatch");
  if (a.max_asymmetry() > 1e-12 * std::max(1.0, a.max_abs()))
    throw std::invalid_argument("sym_eig_extremes: A is not symmetric");
  const int n = a.rows();
  if (n == 0) throw std::invalid_argument("sym_eig_extremes: empty matrix");
  const Matrix l = cholesky(m);

  // C = L^{-1} A L^{-T}, built column by column.
  Matrix c(n, n);
  for (int j = 0; j < n; ++j) {
    Vector col(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) col[i] = a(i, j);
    detail::forward_substitute(l, col);
    for (int i = 0; i < n; ++i) c(i, j) = col[i];
  }
  for (int i = 0; i < n; ++i) {
    Vector row(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) row[j] = c(i, j);
    detail::forward_substitute(l, row);
    for (int j = 0; j < n; ++j) c(i, j) = row[j];
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double v = 0.5 * (c(i, j) + c(j, i));
      c(i, j) = v;
      c(j, i) = v;
    }
  const Vector eig = detail::jacobi_eigenvalues(std::move(c));
  return {eig.front(), eig.back()};
}

/// sqrt(v^T M v) for SPD M; the discrete realization of an induced norm.
inline double gram_norm(const Vector& v, const Matrix& m) {
  const double q = dot(v, matvec(m, v));
  return std::sqrt(std::max(q, 0.0));
}

}  // namespace sparse_saddle
