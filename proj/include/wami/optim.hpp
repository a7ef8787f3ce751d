#pragma once

#include <vector>

#include "wami/tensor.hpp"

namespace wami {

enum class OptKind { SgdNesterov, Adam };

// One optimizer state drives all parameters of a network. Nesterov follows
// the momentum-correction form
//   v' = mu*v - lr*g;  w += v' + mu*(v' - v)
// Adam is the bias-corrected update with eps inside the square root's sum.
template <typename T>
struct OptimizerState {
  OptKind kind = OptKind::SgdNesterov;
  double lr = 0.01;
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step_count = 0;
  std::vector<Tensor<T>> slot1;  // velocity | first moment
  std::vector<Tensor<T>> slot2;  // unused   | second moment

  void init(const std::vector<Tensor<T>*>& params);
  void drop_lr(double factor) { lr *= factor; }
};

template <typename T>
void optimizer_step(const std::vector<Tensor<T>*>& params, const std::vector<const Tensor<T>*>& grads,
                    OptimizerState<T>& state);

extern template struct OptimizerState<float>;
extern template struct OptimizerState<double>;
extern template void optimizer_step<float>(const std::vector<Tensor<float>*>&,
                                           const std::vector<const Tensor<float>*>&,
                                           OptimizerState<float>&);
extern template void optimizer_step<double>(const std::vector<Tensor<double>*>&,
                                            const std::vector<const Tensor<double>*>&,
                                            OptimizerState<double>&);

}  // namespace wami
