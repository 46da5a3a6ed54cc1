#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "signa/diffcore/error.hpp"

namespace signa {

using Shape = std::vector<std::size_t>;

inline std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

inline std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

/// Dense row-major array. Scalars have shape {1}; vectors {n}; matrices {rows, cols}.
template <std::floating_point Real>
class BasicTensor {
 public:
  using value_type = Real;

  BasicTensor() : shape_{0}, data_{} {}

  explicit BasicTensor(Shape shape, Real fill = Real(0)) : shape_(std::move(shape)) {
    validate_shape();
    data_.assign(element_count(shape_), fill);
  }

  BasicTensor(Shape shape, std::vector<Real> data) : shape_(std::move(shape)), data_(std::move(data)) {
    validate_shape();
    if (element_count(shape_) != data_.size())
      throw DimensionError("shape " + signa::to_string(shape_) + " needs " +
                           std::to_string(element_count(shape_)) + " entries, got " + std::to_string(data_.size()));
  }

  static BasicTensor scalar(Real v) { return BasicTensor(Shape{1}, std::vector<Real>{v}); }

  static BasicTensor matrix(std::initializer_list<std::initializer_list<Real>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r ? rows.begin()->size() : 0;
    std::vector<Real> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
      if (row.size() != c) throw DimensionError("ragged matrix literal");
      data.insert(data.end(), row.begin(), row.end());
    }
    return BasicTensor(Shape{r, c}, std::move(data));
  }

  static BasicTensor identity(std::size_t n) {
    BasicTensor t(Shape{n, n});
    for (std::size_t i = 0; i < n; ++i) t(i, i) = Real(1);
    return t;
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }

  std::size_t rows() const {
    require_matrix("rows()");
    return shape_[0];
  }
  std::size_t cols() const {
    require_matrix("cols()");
    return shape_[1];
  }

  std::span<Real> data() noexcept { return data_; }
  std::span<const Real> data() const noexcept { return data_; }
  std::vector<Real>& storage() noexcept { return data_; }
  const std::vector<Real>& storage() const noexcept { return data_; }

  Real& operator[](std::size_t i) { return data_[i]; }
  const Real& operator[](std::size_t i) const { return data_[i]; }

  Real& operator()(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
  const Real& operator()(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

  std::span<Real> row(std::size_t r) { return std::span<Real>(data_).subspan(r * shape_[1], shape_[1]); }
  std::span<const Real> row(std::size_t r) const {
    return std::span<const Real>(data_).subspan(r * shape_[1], shape_[1]);
  }

  Real item() const {
    if (data_.size() != 1) throw ContractError("item() on tensor of shape " + signa::to_string(shape_));
    return data_[0];
  }

  void fill(Real v) { std::fill(data_.begin(), data_.end(), v); }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](Real v) { return std::isfinite(v); });
  }

  BasicTensor& operator+=(const BasicTensor& other) {
    require_same_shape(other, "+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
  }

  template <std::floating_point Other>
  BasicTensor<Other> cast() const {
    return BasicTensor<Other>(shape_, std::vector<Other>(data_.begin(), data_.end()));
  }

  bool operator==(const BasicTensor&) const = default;

  void require_same_shape(const BasicTensor& other, const char* op) const {
    if (shape_ != other.shape_)
      throw DimensionError(std::string(op) + ": shapes " + signa::to_string(shape_) + " and " +
                           signa::to_string(other.shape_) + " differ");
  }

  void require_matrix(const char* op) const {
    if (shape_.size() != 2) throw DimensionError(std::string(op) + " expects a matrix, got " + signa::to_string(shape_));
  }

 private:
  void validate_shape() const {
    if (shape_.empty()) throw DimensionError("tensor shape must have at least one dimension");
    for (auto d : shape_)
      if (d == 0 && shape_ != Shape{0}) throw DimensionError("zero extent in shape " + signa::to_string(shape_));
  }

  Shape shape_;
  std::vector<Real> data_;
};

using Tensor = BasicTensor<double>;
using TensorF = BasicTensor<float>;

}  // namespace signa
