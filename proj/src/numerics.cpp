#include "dynolearn/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "dynolearn/errors.hpp"

namespace dynolearn {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ ? rows.begin()->size() : 0;
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ContractViolation("Matrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> diag) {
  Matrix m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

Matrix Matrix::column(std::span<const double> v) {
  Matrix m(v.size(), 1);
  std::copy(v.begin(), v.end(), m.data_.begin());
  return m;
}

Matrix Matrix::row(std::span<const double> v) {
  Matrix m(1, v.size());
  std::copy(v.begin(), v.end(), m.data_.begin());
  return m;
}

Vector Matrix::col(std::size_t c) const {
  Vector out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

double Matrix::max_abs() const { return dynolearn::max_abs(data_); }

bool Matrix::all_finite() const { return dynolearn::all_finite(data_); }

Matrix& Matrix::operator+=(const Matrix& other) {
  if (rows_ != other.rows_ || cols_ != other.cols_) throw ContractViolation("Matrix +=: shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  if (rows_ != other.rows_ || cols_ != other.cols_) throw ContractViolation("Matrix -=: shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(Matrix a, double s) { return a *= s; }

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw ContractViolation("Matrix *: shape mismatch");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto orow = out.row_span(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      axpy(aik, b.row_span(k), orow);
    }
  }
  return out;
}

Vector operator*(const Matrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) throw ContractViolation("Matrix * vector: shape mismatch");
  Vector out(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) out[i] = dot(a.row_span(i), x);
  return out;
}

Matrix transpose_times(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw ContractViolation("transpose_times: shape mismatch");
  Matrix out(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    auto brow = b.row_span(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a(k, i);
      if (aki == 0.0) continue;
      axpy(aki, brow, out.row_span(i));
    }
  }
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

bool is_symmetric(const Matrix& m, double tol) {
  if (!m.square()) return false;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = i + 1; j < m.cols(); ++j)
      if (std::abs(m(i, j) - m(j, i)) > tol) return false;
  return true;
}

void symmetrize(Matrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = i + 1; j < m.cols(); ++j) {
      const double avg = 0.5 * (m(i, j) + m(j, i));
      m(i, j) = avg;
      m(j, i) = avg;
    }
}

namespace {

double off_diagonal_norm(const std::vector<double>& a, std::size_t n, std::size_t ld) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) s += a[i * ld + j] * a[i * ld + j];
  return std::sqrt(s);
}

constexpr int kMaxSweeps = 100;

}  // namespace

SymEig sym_eig(const Matrix& m) {
  if (!m.square()) throw ContractViolation("sym_eig: matrix is not square");
  if (!is_symmetric(m, 1e-12)) throw ContractViolation("sym_eig: matrix is not symmetric");
  const std::size_t n = m.rows();
  // Working copy with a padded row stride; power-of-two strides thrash the
  // cache on the column writes below.
  const std::size_t ld = n + 8;
  std::vector<double> work(n * ld, 0.0);
  auto at = [&](std::size_t r, std::size_t c) -> double& { return work[r * ld + c]; };
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) at(r, c) = 0.5 * (m(r, c) + m(c, r));
  Matrix vt = Matrix::identity(n);
  const double eps = std::numeric_limits<double>::epsilon();

  int sweep = 0;
  bool converged = n <= 1;
  while (!converged) {
    if (sweep == kMaxSweeps) {
      std::ostringstream msg;
      msg << "sym_eig: no convergence after " << kMaxSweeps
          << " sweeps, off-diagonal residual " << off_diagonal_norm(work, n, ld);
      throw NumericalFailure(msg.str());
    }
    ++sweep;
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = at(p, q);
        if (apq == 0.0) continue;
        const double app = at(p, p);
        const double aqq = at(q, q);
        if (std::abs(apq) <= eps * std::sqrt(std::abs(app * aqq))) {
          at(p, q) = 0.0;
          at(q, p) = 0.0;
          continue;
        }
        rotated = true;
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::hypot(theta, 1.0));
        const double c = 1.0 / std::hypot(t, 1.0);
        const double s = t * c;

        double* rp = &at(p, 0);
        double* rq = &at(q, 0);
        for (std::size_t r = 0; r < n; ++r) {
          const double arp = rp[r];
          const double arq = rq[r];
          rp[r] = c * arp - s * arq;
          rq[r] = s * arp + c * arq;
        }
        for (std::size_t r = 0; r < n; ++r) {
          at(r, p) = rp[r];
          at(r, q) = rq[r];
        }
        at(p, p) = app - t * apq;
        at(q, q) = aqq + t * apq;
        at(p, q) = 0.0;
        at(q, p) = 0.0;

        // vt holds eigenvectors as rows.
        double* vp = &vt(p, 0);
        double* vq = &vt(q, 0);
        for (std::size_t r = 0; r < n; ++r) {
          const double x = vp[r];
          const double y = vq[r];
          vp[r] = c * x - s * y;
          vq[r] = s * x + c * y;
        }
      }
    }
    converged = !rotated;
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return at(i, i) > at(j, j); });

  SymEig out;
  out.sweeps = sweep;
  out.values.resize(n);
  out.vectors = Matrix(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t src = order[k];
    out.values[k] = at(src, src);
    // Deterministic sign: the largest-magnitude component is positive.
    std::size_t arg = 0;
    for (std::size_t r = 1; r < n; ++r)
      if (std::abs(vt(src, r)) > std::abs(vt(src, arg)) + 1e-14) arg = r;
    const double sign = vt(src, arg) < 0.0 ? -1.0 : 1.0;
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, k) = sign * vt(src, r);
  }
  return out;
}

Matrix cholesky(const Matrix& spd) {
  if (!spd.square()) throw ContractViolation("cholesky: matrix is not square");
  const std::size_t n = spd.rows();
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(spd(i, i)));
  const double pivot_floor = static_cast<double>(n) * std::numeric_limits<double>::epsilon() * max_diag;

  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = spd(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > pivot_floor)) {
      std::ostringstream msg;
      msg << "cholesky: non-positive pivot " << d << " at index " << j;
      throw SingularSystemError(msg.str());
    }
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = spd(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

Matrix cholesky_solve(const Matrix& chol, const Matrix& rhs) {
  const std::size_t n = chol.rows();
  if (rhs.rows() != n) throw ContractViolation("cholesky_solve: shape mismatch");
  Matrix x = rhs;
  const std::size_t k = rhs.cols();
  // L z = b
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      const double lij = chol(i, j);
      for (std::size_t c = 0; c < k; ++c) x(i, c) -= lij * x(j, c);
    }
    for (std::size_t c = 0; c < k; ++c) x(i, c) /= chol(i, i);
  }
  // Lᵀ x = z
  for (std::size_t ii = n; ii-- > 0;) {
    for (std::size_t j = ii + 1; j < n; ++j) {
      const double lji = chol(j, ii);
      for (std::size_t c = 0; c < k; ++c) x(ii, c) -= lji * x(j, c);
    }
    for (std::size_t c = 0; c < k; ++c) x(ii, c) /= chol(ii, ii);
  }
  return x;
}

Vector cholesky_solve(const Matrix& chol, std::span<const double> rhs) {
  Matrix x = cholesky_solve(chol, Matrix::column(rhs));
  return x.col(0);
}

Matrix solve_regularized(const Matrix& gram, const Matrix& rhs, double reg) {
  if (reg < 0.0) throw ContractViolation("solve_regularized: negative regularization");
  Matrix g = gram;
  for (std::size_t i = 0; i < g.rows(); ++i) g(i, i) += reg;
  return cholesky_solve(cholesky(g), rhs);
}

Vector ridge_solve(const Matrix& x, std::span<const double> y, double reg) {
  if (x.rows() == 0 || x.cols() == 0) throw ContractViolation("ridge_solve: empty design matrix");
  if (x.rows() != y.size()) throw ContractViolation("ridge_solve: shape mismatch");
  if (reg < 0.0) throw ContractViolation("ridge_solve: negative regularization");
  const Matrix gram = transpose_times(x, x);
  const Matrix moment = transpose_times(x, Matrix::column(y));
  return solve_regularized(gram, moment, reg).col(0);
}

}  // namespace dynolearn
