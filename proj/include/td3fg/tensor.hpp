#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/StdVector>

#include "td3fg/error.hpp"

namespace td3fg {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles. Storage is aligned to the SIMD packet
/// size so Eigen reductions sum in the same order on every allocation; with
/// plain heap alignment two runs could differ in the last bit.
class Matrix {
 public:
  using Storage = std::vector<double, Eigen::aligned_allocator<double>>;

  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> data)
      : Matrix(rows, cols, Storage(data)) {}
  Matrix(std::size_t rows, std::size_t cols, const std::vector<double>& data)
      : Matrix(rows, cols, Storage(data.begin(), data.end())) {}
  Matrix(std::size_t rows, std::size_t cols, Storage data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw ShapeError("matrix data length " + std::to_string(data_.size()) +
                       " != " + std::to_string(rows_) + "x" + std::to_string(cols_));
    }
  }

  /// 1 x n matrix holding a copy of `v`.
  static Matrix row(std::span<const double> v) {
    return Matrix(1, v.size(), Storage(v.begin(), v.end()));
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row_span(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row_span(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  Storage& data() noexcept { return data_; }
  const Storage& data() const noexcept { return data_; }

  /// Copy of the values as a plain vector.
  Vector to_vector() const { return Vector(data_.begin(), data_.end()); }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Storage data_;
};

namespace detail {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<RowMajor>;
using ConstMapRM = Eigen::Map<const RowMajor>;

inline MapRM eig(Matrix& m) {
  return MapRM(m.data().data(), Eigen::Index(m.rows()), Eigen::Index(m.cols()));
}
inline ConstMapRM eig(const Matrix& m) {
  return ConstMapRM(m.data().data(), Eigen::Index(m.rows()), Eigen::Index(m.cols()));
}

}  // namespace detail

/// Horizontal concatenation [a, b]; row counts must agree.
inline Matrix hconcat(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw ShapeError("hconcat: row count mismatch");
  Matrix out(a.rows(), a.cols() + b.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto dst = out.row_span(r);
    std::copy(a.row_span(r).begin(), a.row_span(r).end(), dst.begin());
    std::copy(b.row_span(r).begin(), b.row_span(r).end(), dst.begin() + a.cols());
  }
  return out;
}

/// Columns [first, first + count) of `m`.
inline Matrix slice_cols(const Matrix& m, std::size_t first, std::size_t count) {
  if (first + count > m.cols()) throw ShapeError("slice_cols: out of range");
  Matrix out(m.rows(), count);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto src = m.row_span(r);
    std::copy(src.begin() + first, src.begin() + first + count, out.row_span(r).begin());
  }
  return out;
}

inline bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

struct LossAndGrad {
  double loss = 0.0;
  Vector grad;
};

/// Mean squared error over all components and its gradient with respect to `pred`.
inline LossAndGrad mse_loss(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size()) {
    throw ShapeError("mse_loss: pred length " + std::to_string(pred.size()) +
                     " != target length " + std::to_string(target.size()));
  }
  LossAndGrad out;
  out.grad.resize(pred.size());
  if (pred.empty()) return out;
  const double n = static_cast<double>(pred.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    sum += d * d;
    out.grad[i] = 2.0 * d / n;
  }
  out.loss = sum / n;
  return out;
}

/// Matrix overload: loss is the mean over every element; grad has the shape of `pred`.
inline std::pair<double, Matrix> mse_loss(const Matrix& pred, const Matrix& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw ShapeError("mse_loss: matrix shape mismatch");
  }
  auto lg = mse_loss(std::span<const double>(pred.data()), std::span<const double>(target.data()));
  return {lg.loss, Matrix(pred.rows(), pred.cols(), std::move(lg.grad))};
}

}  // namespace td3fg
