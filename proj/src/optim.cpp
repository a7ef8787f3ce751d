#include "wami/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace wami {

template <typename T>
void OptimizerState<T>::init(const std::vector<Tensor<T>*>& params) {
  slot1.clear();
  slot2.clear();
  step_count = 0;
  for (const Tensor<T>* p : params) slot1.push_back(Tensor<T>::zeros_like(*p));
  if (kind == OptKind::Adam) {
    for (const Tensor<T>* p : params) slot2.push_back(Tensor<T>::zeros_like(*p));
  }
}

template <typename T>
void optimizer_step(const std::vector<Tensor<T>*>& params, const std::vector<const Tensor<T>*>& grads,
                    OptimizerState<T>& state) {
  if (params.size() != grads.size() || params.size() != state.slot1.size()) {
    throw std::invalid_argument("optimizer_step: params/grads/state count mismatch");
  }
  state.step_count += 1;
  if (state.kind == OptKind::SgdNesterov) {
    for (std::size_t k = 0; k < params.size(); ++k) {
      Tensor<T>& w = *params[k];
      const Tensor<T>& g = *grads[k];
      Tensor<T>& v = state.slot1[k];
      if (!w.same_shape(g) || !w.same_shape(v)) {
        throw std::invalid_argument("optimizer_step: shape mismatch at parameter " + std::to_string(k));
      }
      const T mu = static_cast<T>(state.momentum);
      const T lr = static_cast<T>(state.lr);
      for (std::size_t i = 0; i < w.size(); ++i) {
        const T v_prev = v[i];
        v[i] = mu * v_prev - lr * g[i];
        w[i] += v[i] + mu * (v[i] - v_prev);
      }
    }
  } else {
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
    for (std::size_t k = 0; k < params.size(); ++k) {
      Tensor<T>& w = *params[k];
      const Tensor<T>& g = *grads[k];
      Tensor<T>& m = state.slot1[k];
      Tensor<T>& v = state.slot2[k];
      if (!w.same_shape(g)) {
        throw std::invalid_argument("optimizer_step: shape mismatch at parameter " + std::to_string(k));
      }
      for (std::size_t i = 0; i < w.size(); ++i) {
        m[i] = static_cast<T>(state.beta1 * m[i] + (1.0 - state.beta1) * g[i]);
        v[i] = static_cast<T>(state.beta2 * v[i] + (1.0 - state.beta2) * static_cast<double>(g[i]) * g[i]);
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        w[i] -= static_cast<T>(state.lr * mhat / (std::sqrt(vhat) + state.eps));
      }
    }
  }
}

template struct OptimizerState<float>;
template struct OptimizerState<double>;
template void optimizer_step<float>(const std::vector<Tensor<float>*>&,
                                    const std::vector<const Tensor<float>*>&, OptimizerState<float>&);
template void optimizer_step<double>(const std::vector<Tensor<double>*>&,
                                     const std::vector<const Tensor<double>*>&, OptimizerState<double>&);

}  // namespace wami
