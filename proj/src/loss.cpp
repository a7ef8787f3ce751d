#include "wami/loss.hpp"

#include <cmath>
#include <stdexcept>

namespace wami {

template <typename T>
LossResult<T> euclidean_loss(const Tensor<T>& pred, const Tensor<T>& target) {
  if (!pred.same_shape(target)) {
    throw std::invalid_argument("euclidean_loss: shape mismatch " + shape_str(pred.shape) + " vs " +
                                shape_str(target.shape));
  }
  LossResult<T> r;
  r.grad = Tensor<T>::zeros_like(pred);
  const double inv_n = 1.0 / static_cast<double>(pred.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = static_cast<double>(pred[i]) - target[i];
    acc += d * d;
    r.grad[i] = static_cast<T>(d * inv_n);
  }
  r.value = 0.5 * acc * inv_n;
  if (!std::isfinite(r.value)) throw std::runtime_error("euclidean_loss: non-finite loss");
  return r;
}

template <typename T>
LossResult<T> softmax_xent_loss(const Tensor<T>& logits, const Tensor<int>& classes) {
  const Bchw in = bchw(logits);
  const Bchw cls = classes.rank() == 2
                       ? Bchw{1, 1, classes.dim(0), classes.dim(1)}
                       : Bchw{classes.dim(0), 1, classes.dim(1), classes.dim(2)};
  if (cls.b != in.b || cls.h != in.h || cls.w != in.w) {
    throw std::invalid_argument("softmax_xent_loss: class map shape " + shape_str(classes.shape) +
                                " does not match logits " + shape_str(logits.shape));
  }
  LossResult<T> r;
  r.grad = Tensor<T>::zeros_like(logits);
  const std::size_t plane = static_cast<std::size_t>(in.h) * in.w;
  const double inv_n = 1.0 / (static_cast<double>(in.b) * plane);
  double acc = 0.0;
  std::vector<double> p(in.c);
  for (int b = 0; b < in.b; ++b) {
    const std::size_t lbase = static_cast<std::size_t>(b) * in.c * plane;
    for (std::size_t i = 0; i < plane; ++i) {
      double mx = -1e300;
      for (int c = 0; c < in.c; ++c) mx = std::max(mx, static_cast<double>(logits[lbase + c * plane + i]));
      double z = 0.0;
      for (int c = 0; c < in.c; ++c) {
        p[c] = std::exp(static_cast<double>(logits[lbase + c * plane + i]) - mx);
        z += p[c];
      }
      const int label = classes[static_cast<std::size_t>(b) * plane + i];
      if (label < 0 || label >= in.c) {
        throw std::invalid_argument("softmax_xent_loss: class index " + std::to_string(label) +
                                    " out of range [0," + std::to_string(in.c) + ")");
      }
      for (int c = 0; c < in.c; ++c) {
        const double q = p[c] / z;
        r.grad[lbase + c * plane + i] = static_cast<T>((q - (c == label ? 1.0 : 0.0)) * inv_n);
      }
      acc += -std::log(p[label] / z);
    }
  }
  r.value = acc * inv_n;
  if (!std::isfinite(r.value)) throw std::runtime_error("softmax_xent_loss: non-finite loss");
  return r;
}

template LossResult<float> euclidean_loss<float>(const Tensor<float>&, const Tensor<float>&);
template LossResult<double> euclidean_loss<double>(const Tensor<double>&, const Tensor<double>&);
template LossResult<float> softmax_xent_loss<float>(const Tensor<float>&, const Tensor<int>&);
template LossResult<double> softmax_xent_loss<double>(const Tensor<double>&, const Tensor<int>&);

}  // namespace wami
