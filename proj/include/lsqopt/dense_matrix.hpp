#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace lsqopt {

// Row-major dense matrix. Sized for n x d data with small d; instances are
// immutable after construction and safe to share read-only across threads.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }
  std::span<double> row(std::size_t i) {
    return {data_.data() + i * cols_, cols_};
  }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  static DenseMatrix identity(std::size_t n);

  // Throws numerical_error if any entry is non-finite.
  void ensure_finite(const char* context) const;

  bool operator==(const DenseMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// y = M x
std::vector<double> mat_vec(const DenseMatrix& m, std::span<const double> x);
// y = M^T x
std::vector<double> mat_transpose_vec(const DenseMatrix& m, std::span<const double> x);
// C = A B
DenseMatrix mat_mul(const DenseMatrix& a, const DenseMatrix& b);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> v);

}  // namespace lsqopt
