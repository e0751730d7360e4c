#include "uniflg/tensor.hpp"

#include <cmath>

#include "uniflg/simd/kernels.hpp"

namespace uniflg {

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  Matrix m(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
  for (int r = 0; r < m.rows; ++r) {
    if (static_cast<int>(rows[r].size()) != m.cols)
      throw std::invalid_argument("Matrix::from_rows: ragged rows");
    for (int c = 0; c < m.cols; ++c) m(r, c) = rows[r][c];
  }
  return m;
}

void Matrix::fill(double v) {
  for (double& x : data) x = v;
}

Matrix& Matrix::operator+=(const Matrix& o) {
  if (!same_shape(o))
    throw std::invalid_argument("Matrix +=: shape " + shape_string(*this) + " vs " + shape_string(o));
  simd::axpy(1.0, o.data.data(), data.data(), data.size());
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& x : data) x *= s;
  return *this;
}

std::string shape_string(const Matrix& m) {
  return "[" + std::to_string(m.rows) + "x" + std::to_string(m.cols) + "]";
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("max_abs_diff: shape mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a.data[i] - b.data[i]));
  return worst;
}

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols, m.rows);
  for (int r = 0; r < m.rows; ++r)
    for (int c = 0; c < m.cols; ++c) t(c, r) = m(r, c);
  return t;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) throw std::invalid_argument("matmul: inner dimension mismatch");
  Matrix c(a.rows, b.cols);
  if (a.rows > 0 && b.cols > 0 && a.cols > 0)
    simd::gemm_nn(a.rows, b.cols, a.cols, a.data.data(), a.cols, b.data.data(), b.cols,
                  c.data.data(), c.cols);
  return c;
}

bool all_finite(const Matrix& m) {
  for (double v : m.data)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace uniflg
