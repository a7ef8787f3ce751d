#include "wami/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace wami {

std::size_t shape_product(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw std::invalid_argument("tensor dims must be positive, got " + shape_str(shape));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string shape_str(const std::vector<int>& shape) {
  std::ostringstream os;
  os << "{";
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << "}";
  return os.str();
}

template <typename T>
Tensor<T>::Tensor(std::vector<int> s, T fill) : shape(std::move(s)) {
  if (shape.empty() || shape.size() > 4) {
    throw std::invalid_argument("tensor rank must be 1..4, got " + shape_str(shape));
  }
  data.assign(shape_product(shape), fill);
}

template <typename T>
void Tensor<T>::fill(T v) {
  std::fill(data.begin(), data.end(), v);
}

template <typename T>
void Tensor<T>::assert_finite(const char* where) const {
  if constexpr (std::is_floating_point_v<T>) {
    for (const T& v : data) {
      if (!std::isfinite(v)) {
        throw std::runtime_error(std::string("non-finite value in ") + where + " " + shape_str(shape));
      }
    }
  }
}

template <typename T>
Bchw bchw(const Tensor<T>& t) {
  if (t.rank() == 4) return {t.dim(0), t.dim(1), t.dim(2), t.dim(3)};
  if (t.rank() == 3) return {1, t.dim(0), t.dim(1), t.dim(2)};
  throw std::invalid_argument("expected rank-3 or rank-4 tensor, got " + shape_str(t.shape));
}

template struct Tensor<float>;
template struct Tensor<double>;
template struct Tensor<int>;
template Bchw bchw<float>(const Tensor<float>&);
template Bchw bchw<double>(const Tensor<double>&);
template Bchw bchw<int>(const Tensor<int>&);

}  // namespace wami
