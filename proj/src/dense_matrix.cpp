#include "lsqopt/dense_matrix.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "lsqopt/errors.hpp"

namespace lsqopt {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {
  if (rows != 0 && cols != 0 && rows > std::numeric_limits<std::size_t>::max() / cols) {
    throw config_error("matrix dimensions overflow: " + std::to_string(rows) + " x " +
                       std::to_string(cols));
  }
}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw config_error("matrix data length does not match rows x cols");
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void DenseMatrix::ensure_finite(const char* context) const {
  for (double v : data_) {
    if (!std::isfinite(v)) {
      throw numerical_error(std::string("non-finite matrix entry in ") + context);
    }
  }
}

std::vector<double> mat_vec(const DenseMatrix& m, std::span<const double> x) {
  if (x.size() != m.cols()) throw config_error("mat_vec: dimension mismatch");
  std::vector<double> y(m.rows(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) y[i] = dot(m.row(i), x);
  return y;
}

std::vector<double> mat_transpose_vec(const DenseMatrix& m, std::span<const double> x) {
  if (x.size() != m.rows()) throw config_error("mat_transpose_vec: dimension mismatch");
  std::vector<double> y(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto row = m.row(i);
    const double xi = x[i];
    for (std::size_t j = 0; j < m.cols(); ++j) y[j] += row[j] * xi;
  }
  return y;
}

DenseMatrix mat_mul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) throw config_error("mat_mul: dimension mismatch");
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const auto brow = b.row(k);
      auto crow = c.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

}  // namespace lsqopt
