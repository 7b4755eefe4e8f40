#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "hybil/core/error.hpp"

namespace hybil {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ')';
  return os.str();
}

// Dense row-major float32 array. A default-constructed tensor is empty (rank 0,
// no data) and only serves as a placeholder; every other tensor has positive
// extents and product(shape) == size().
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape, float fill = 0.0f) : shape_(std::move(shape)) {
    validate_shape();
    data_.assign(shape_size(shape_), fill);
  }

  Tensor(Shape shape, std::vector<float> data) : shape_(std::move(shape)), data_(std::move(data)) {
    validate_shape();
    if (data_.size() != shape_size(shape_)) {
      throw StructuralError("tensor of shape " + shape_string(shape_) + " needs " +
                            std::to_string(shape_size(shape_)) + " values, got " +
                            std::to_string(data_.size()));
    }
  }

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape), 0.0f); }
  static Tensor vector(std::initializer_list<float> values) {
    return Tensor(Shape{values.size()}, std::vector<float>(values));
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  std::size_t extent(std::size_t axis) const { return shape_.at(axis); }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }
  const std::vector<float>& values() const noexcept { return data_; }
  float* raw() noexcept { return data_.data(); }
  const float* raw() const noexcept { return data_.data(); }

  float& operator[](std::size_t i) noexcept { return data_[i]; }
  float operator[](std::size_t i) const noexcept { return data_[i]; }

  // Row-major element access; index count must equal rank().
  template <typename... Idx>
  float& at(Idx... idx) {
    return data_[offset({static_cast<std::size_t>(idx)...})];
  }
  template <typename... Idx>
  float at(Idx... idx) const {
    return data_[offset({static_cast<std::size_t>(idx)...})];
  }

  Tensor reshaped(Shape shape) const {
    if (shape_size(shape) != data_.size()) {
      throw StructuralError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
    }
    return Tensor(std::move(shape), data_);
  }

  void fill(float v) { std::fill(data_.begin(), data_.end(), v); }

  Tensor& operator+=(const Tensor& other) {
    require_same_shape(other, "+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
  }

  Tensor& operator*=(float s) {
    for (auto& v : data_) v *= s;
    return *this;
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
  }

  void require_same_shape(const Tensor& other, const char* op) const {
    if (shape_ != other.shape_) {
      throw StructuralError(std::string(op) + ": shape " + shape_string(shape_) + " vs " +
                            shape_string(other.shape_));
    }
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  void validate_shape() const {
    for (auto e : shape_) {
      if (e == 0) throw StructuralError("tensor extents must be >= 1, got " + shape_string(shape_));
    }
  }

  std::size_t offset(std::initializer_list<std::size_t> idx) const {
    std::size_t off = 0;
    std::size_t axis = 0;
    for (auto i : idx) off = off * shape_[axis++] + i;
    return off;
  }

  Shape shape_;
  std::vector<float> data_;
};

inline Tensor operator+(Tensor a, const Tensor& b) {
  a += b;
  return a;
}

inline Tensor operator*(Tensor a, float s) {
  a *= s;
  return a;
}

// Bitwise checksum of a tensor's contents (FNV-1a over the float bit patterns).
inline std::uint64_t checksum(const Tensor& t, std::uint64_t seed = 1469598103934665603ULL) {
  std::uint64_t h = seed;
  for (float v : t.data()) {
    std::uint32_t bits;
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, sizeof bits);
    for (int b = 0; b < 4; ++b) {
      h ^= (bits >> (8 * b)) & 0xffu;
      h *= 1099511628211ULL;
    }
  }
  return h;
}

}  // namespace hybil
