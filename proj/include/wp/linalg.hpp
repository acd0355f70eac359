#ifndef WP_LINALG_HPP
#define WP_LINALG_HPP

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace wp {

/// Dense row-major matrix, sized for the small systems that show up here
/// (metric tensors, shooting Jacobians, normal equations).
class Matrix {
public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  const std::vector<double>& data() const { return data_; }

  bool symmetric(double tol = 0.0) const {
    if (rows_ != cols_) return false;
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = i + 1; j < cols_; ++j)
        if (std::abs((*this)(i, j) - (*this)(j, i)) > tol) return false;
    return true;
  }

private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

/// Rank-3 array of Christoffel symbols, Gamma(k, i, j) = Gamma^k_{ij}.
class Christoffel {
public:
  Christoffel() = default;
  explicit Christoffel(std::size_t n) : n_(n), data_(n * n * n, 0.0) {}

  std::size_t dim() const { return n_; }
  double& operator()(std::size_t k, std::size_t i, std::size_t j) {
    return data_[(k * n_ + i) * n_ + j];
  }
  double operator()(std::size_t k, std::size_t i, std::size_t j) const {
    return data_[(k * n_ + i) * n_ + j];
  }

private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

/// Solve A x = b in place by Gaussian elimination with partial pivoting.
/// Throws std::runtime_error if the matrix is numerically singular.
inline std::vector<double> solve_dense(Matrix a, std::vector<double> b) {
  const std::size_t n = a.rows();
  if (a.cols() != n || b.size() != n) throw std::invalid_argument("solve_dense: shape mismatch");
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;

  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    double vmax = std::abs(a(col, col));
    for (std::size_t r = col + 1; r < n; ++r) {
      const double v = std::abs(a(r, col));
      if (v > vmax) { vmax = v; piv = r; }
    }
    if (!(vmax > 0.0) || !std::isfinite(vmax))
      throw std::runtime_error("solve_dense: singular matrix");
    if (piv != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(piv, j), a(col, j));
      std::swap(b[piv], b[col]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a(r, col) / a(col, col);
      if (f == 0.0) continue;
      for (std::size_t j = col; j < n; ++j) a(r, j) -= f * a(col, j);
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= a(i, j) * x[j];
    x[i] = s / a(i, i);
  }
  return x;
}

/// Least squares via normal equations: minimizes ||X c - y||_2 where X has
/// the given columns. Fine for the 2-3 parameter fits used here.
inline std::vector<double> lstsq(const std::vector<std::vector<double>>& columns,
                                 const std::vector<double>& y) {
  const std::size_t k = columns.size();
  if (k == 0) throw std::invalid_argument("lstsq: no columns");
  const std::size_t n = y.size();
  for (const auto& c : columns)
    if (c.size() != n) throw std::invalid_argument("lstsq: column length mismatch");

  Matrix ata(k, k);
  std::vector<double> aty(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i; j < k; ++j) {
      double s = 0.0;
      for (std::size_t r = 0; r < n; ++r) s += columns[i][r] * columns[j][r];
      ata(i, j) = ata(j, i) = s;
    }
    double s = 0.0;
    for (std::size_t r = 0; r < n; ++r) s += columns[i][r] * y[r];
    aty[i] = s;
  }
  return solve_dense(ata, aty);
}

} // namespace wp

#endif
