#pragma once

#include <cstdint>
#include <vector>

#include "wami/rng.hpp"
#include "wami/tensor.hpp"

namespace wami {

enum class Mode { Train, Infer };
enum class Act { Identity, ReLU, PReLU };

// ---- 2x2 max pooling (stride 2). Odd spatial dims pad with -inf on the
// bottom/right, so output dims are ceil(in/2).
struct MaxPoolCache {
  std::vector<int> shape;        // input shape
  std::vector<std::int64_t> argmax;  // flat input index per output element
  bool valid = false;
};

template <typename T>
Tensor<T> maxpool2x2_forward(const Tensor<T>& input, MaxPoolCache& cache);

template <typename T>
Tensor<T> maxpool2x2_backward(const Tensor<T>& grad_out, const MaxPoolCache& cache);

// ---- Activations. PReLU learns one slope per feature map.
template <typename T>
Tensor<T> activation_forward(const Tensor<T>& input, Act kind, const Tensor<T>* slopes = nullptr);

template <typename T>
struct ActivationGrads {
  Tensor<T> input;
  Tensor<T> slopes;  // empty unless PReLU
};

template <typename T>
ActivationGrads<T> activation_backward(const Tensor<T>& grad_out, const Tensor<T>& input, Act kind,
                                       const Tensor<T>* slopes = nullptr);

// ---- Batch normalization, per feature map over (batch, H, W).
inline constexpr double kBatchNormEps = 1e-5;

template <typename T>
struct BatchNormParams {
  Tensor<T> gamma;  // {C}
  Tensor<T> beta;   // {C}
};

template <typename T>
struct BatchNormState {
  Tensor<T> running_mean;  // {C}
  Tensor<T> running_var;   // {C}, biased
  double momentum = 0.1;   // running = (1-m)*running + m*batch
};

template <typename T>
struct BatchNormCache {
  Tensor<T> xhat;
  Tensor<T> mean;     // {C}
  Tensor<T> inv_std;  // {C}
  bool valid = false;
};

template <typename T>
Tensor<T> batchnorm_forward(const Tensor<T>& input, const BatchNormParams<T>& params,
                            BatchNormState<T>& state, Mode mode, BatchNormCache<T>* cache = nullptr);

template <typename T>
struct BatchNormGrads {
  Tensor<T> input;
  Tensor<T> gamma;
  Tensor<T> beta;
};

template <typename T>
BatchNormGrads<T> batchnorm_backward(const Tensor<T>& grad_out, const BatchNormCache<T>& cache,
                                     const BatchNormParams<T>& params);

// ---- Dropout, inverted scaling at train time. Mask order is the flat
// element order, so results are seed-deterministic.
template <typename T>
Tensor<T> dropout_forward(const Tensor<T>& input, double rate, Rng& rng, Mode mode,
                          std::vector<std::uint8_t>* mask_out = nullptr);

template <typename T>
Tensor<T> dropout_backward(const Tensor<T>& grad_out, double rate,
                           const std::vector<std::uint8_t>& mask);

}  // namespace wami
