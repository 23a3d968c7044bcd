#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace dynolearn {

using Vector = std::vector<double>;

// Dense row-major matrix. Small sizes only (the largest in this project is a
// few hundred rows), so everything is plain loops.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> diag);
  static Matrix column(std::span<const double> v);
  static Matrix row(std::span<const double> v);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }
  bool square() const { return rows_ == cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row_span(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row_span(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  Vector col(std::size_t c) const;

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  Matrix transpose() const;
  double max_abs() const;
  bool all_finite() const;

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double s);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);
Matrix operator*(const Matrix& a, const Matrix& b);
Vector operator*(const Matrix& a, std::span<const double> x);

// aᵀ·b without materializing the transpose.
Matrix transpose_times(const Matrix& a, const Matrix& b);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> v);
double max_abs(std::span<const double> v);
bool all_finite(std::span<const double> v);
// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

bool is_symmetric(const Matrix& m, double tol = 1e-12);
void symmetrize(Matrix& m);

struct SymEig {
  Vector values;  // descending
  Matrix vectors;  // column j pairs with values[j]
  int sweeps = 0;
};

// Cyclic Jacobi eigensolver for real symmetric matrices.
//
// Rotations are skipped when |a_pq| <= eps * sqrt(|a_pp a_qq|), which keeps
// relative accuracy for small eigenvalues of positive definite inputs (the
// Hilbert matrix in particular). Iteration stops once a sweep performs no
// rotation or the off-diagonal Frobenius norm drops below 1e-14 relative to
// max(1, |M|_F). Throws NumericalFailure after 100 sweeps.
SymEig sym_eig(const Matrix& m);

// Cholesky factor L (lower) of a symmetric positive definite matrix. Throws
// SingularSystemError when a pivot is not positive relative to the diagonal.
Matrix cholesky(const Matrix& spd);
// Solves (L Lᵀ) X = B for every column of B.
Matrix cholesky_solve(const Matrix& chol, const Matrix& rhs);
Vector cholesky_solve(const Matrix& chol, std::span<const double> rhs);

// Solves (G + reg·I) W = R where G is a symmetric PSD Gram matrix.
Matrix solve_regularized(const Matrix& gram, const Matrix& rhs, double reg);

// argmin_w |Xw - y|² + reg·|w|² via the m×m normal equations.
Vector ridge_solve(const Matrix& x, std::span<const double> y, double reg);

}  // namespace dynolearn
