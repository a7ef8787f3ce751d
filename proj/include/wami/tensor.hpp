#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace wami {

// Dense row-major tensor, rank 1..4. Networks use {B,C,H,W}; single samples
// {C,H,W}; parameters whatever fits. Training runs float, gradient-check
// builds run double.
template <typename T>
struct Tensor {
  std::vector<int> shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s, T fill = T(0));

  static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape); }

  int rank() const { return static_cast<int>(shape.size()); }
  int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }
  std::size_t size() const { return data.size(); }
  bool empty() const { return data.empty(); }

  T* ptr() { return data.data(); }
  const T* ptr() const { return data.data(); }

  T& operator[](std::size_t i) { return data[i]; }
  const T& operator[](std::size_t i) const { return data[i]; }

  // rank-3 {C,H,W}
  T& at(int c, int y, int x) {
    return data[(static_cast<std::size_t>(c) * shape[1] + y) * shape[2] + x];
  }
  const T& at(int c, int y, int x) const {
    return data[(static_cast<std::size_t>(c) * shape[1] + y) * shape[2] + x];
  }
  // rank-4 {B,C,H,W}
  T& at(int b, int c, int y, int x) {
    return data[((static_cast<std::size_t>(b) * shape[1] + c) * shape[2] + y) * shape[3] + x];
  }
  const T& at(int b, int c, int y, int x) const {
    return data[((static_cast<std::size_t>(b) * shape[1] + c) * shape[2] + y) * shape[3] + x];
  }

  void fill(T v);
  bool same_shape(const Tensor& other) const { return shape == other.shape; }

  // Hard error on NaN/Inf anywhere in the tensor.
  void assert_finite(const char* where) const;
};

// {B,C,H,W} view of a rank-3 or rank-4 tensor (rank-3 reads as B=1).
struct Bchw {
  int b, c, h, w;
};
template <typename T>
Bchw bchw(const Tensor<T>& t);

std::string shape_str(const std::vector<int>& shape);
std::size_t shape_product(const std::vector<int>& shape);

extern template struct Tensor<float>;
extern template struct Tensor<double>;
extern template struct Tensor<int>;
extern template Bchw bchw<float>(const Tensor<float>&);
extern template Bchw bchw<double>(const Tensor<double>&);
extern template Bchw bchw<int>(const Tensor<int>&);

}  // namespace wami
