#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "attnet/error.hpp"

namespace attnet {

using Vec = std::vector<double>;

// Dense row-major matrix of doubles. Rows are samples throughout the
// library; weight matrices are stored out×in.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);
  static Matrix from_rows(const std::vector<Vec>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  Vec row_copy(std::size_t r) const { return Vec(row(r).begin(), row(r).end()); }
  void set_row(std::size_t r, std::span<const double> v);

  bool same_shape(const Matrix& o) const noexcept { return rows_ == o.rows_ && cols_ == o.cols_; }
  bool operator==(const Matrix& o) const noexcept = default;

 private:
  std::size_t rows_ = 0, cols_ = 0;
  Vec data_;
};

// C = A·B
Matrix matmul(const Matrix& a, const Matrix& b);
// C = A·Bᵀ
Matrix matmul_nt(const Matrix& a, const Matrix& b);
// C = Aᵀ·B
Matrix matmul_tn(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& a);

// a += s·b
void add_scaled(Matrix& a, const Matrix& b, double s = 1.0);
void add_scaled(Vec& a, const Vec& b, double s = 1.0);

// Zeroes every row r of m with mask[r] == 0. mask entries are 0 or 1.
void mask_rows(Matrix& m, std::span<const double> mask);

double frobenius_norm_sq(const Matrix& m);
double l2_norm(std::span<const double> v);
double l2_distance(std::span<const double> a, std::span<const double> b);
bool all_finite(const Matrix& m);

}  // namespace attnet
