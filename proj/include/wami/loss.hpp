#pragma once

#include "wami/tensor.hpp"

namespace wami {

enum class LossKind { Euclidean, SoftmaxXent };

template <typename T>
struct LossResult {
  double value = 0.0;
  Tensor<T> grad;  // d(loss)/d(pred), same shape as pred
};

// 0.5 * mean squared error over all elements.
template <typename T>
LossResult<T> euclidean_loss(const Tensor<T>& pred, const Tensor<T>& target);

// Mean per-pixel cross-entropy after a per-pixel softmax over channels.
// classes: {H,W} or {B,H,W} integer class index map.
template <typename T>
LossResult<T> softmax_xent_loss(const Tensor<T>& logits, const Tensor<int>& classes);

extern template LossResult<float> euclidean_loss<float>(const Tensor<float>&, const Tensor<float>&);
extern template LossResult<double> euclidean_loss<double>(const Tensor<double>&, const Tensor<double>&);
extern template LossResult<float> softmax_xent_loss<float>(const Tensor<float>&, const Tensor<int>&);
extern template LossResult<double> softmax_xent_loss<double>(const Tensor<double>&, const Tensor<int>&);

}  // namespace wami
