#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace uniflg {

/// Row-major dense matrix of doubles. Sequences are stored time-major:
/// one row per frame (or token), one column per channel.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0)
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), fill) {
    if (r < 0 || c < 0) throw std::invalid_argument("Matrix: negative dimension");
  }

  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  double& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

  double* row_ptr(int r) { return data.data() + static_cast<std::size_t>(r) * cols; }
  const double* row_ptr(int r) const { return data.data() + static_cast<std::size_t>(r) * cols; }
  std::span<double> row(int r) { return {row_ptr(r), static_cast<std::size_t>(cols)}; }
  std::span<const double> row(int r) const { return {row_ptr(r), static_cast<std::size_t>(cols)}; }

  std::size_t size() const { return data.size(); }
  bool empty() const { return data.empty(); }
  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
  void fill(double v);

  Matrix& operator+=(const Matrix& o);
  Matrix& operator*=(double s);
};

std::string shape_string(const Matrix& m);
double max_abs_diff(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);
/// a * b via the dispatched gemm kernel.
Matrix matmul(const Matrix& a, const Matrix& b);
bool all_finite(const Matrix& m);

}  // namespace uniflg
