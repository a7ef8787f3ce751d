#pragma once

#include "wami/tensor.hpp"

namespace wami {

enum class Padding { Same, Valid };

// Multi-frame first-layer convolution and every later conv layer share this:
// one k_h x k_w kernel per input channel per output map, one bias per output
// map. Cross-correlation convention (no kernel flip); a learned kernel set
// absorbs the flip.
template <typename T>
struct ConvLayer {
  Tensor<T> kernels;  // {out_maps, in_channels, kh, kw}, kh/kw odd
  Tensor<T> bias;     // {out_maps}
  int stride = 1;
  Padding padding = Padding::Same;

  int out_maps() const { return kernels.dim(0); }
  int in_channels() const { return kernels.dim(1); }
};

struct ConvGeometry {
  int in_c, in_h, in_w;
  int out_c, out_h, out_w;
  int kh, kw, stride;
  int pad_h, pad_w;  // symmetric; Same keeps out = ceil(in/stride)
};

template <typename T>
ConvGeometry conv_geometry(const Bchw& in, const ConvLayer<T>& layer);

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const ConvLayer<T>& layer);

template <typename T>
struct ConvGrads {
  Tensor<T> input;
  Tensor<T> kernels;
  Tensor<T> bias;
};

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& grad_out, const Tensor<T>& input,
                             const ConvLayer<T>& layer);

// Cache-style interface: forward stores what backward needs.
template <typename T>
struct ConvCache {
  Tensor<T> input;
  bool valid = false;
};

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const ConvLayer<T>& layer, ConvCache<T>& cache);

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& grad_out, const ConvCache<T>& cache,
                             const ConvLayer<T>& layer);

extern template struct ConvLayer<float>;
extern template struct ConvLayer<double>;
extern template ConvGeometry conv_geometry<float>(const Bchw&, const ConvLayer<float>&);
extern template ConvGeometry conv_geometry<double>(const Bchw&, const ConvLayer<double>&);
extern template Tensor<float> conv2d_forward<float>(const Tensor<float>&, const ConvLayer<float>&);
extern template Tensor<double> conv2d_forward<double>(const Tensor<double>&, const ConvLayer<double>&);
extern template ConvGrads<float> conv2d_backward<float>(const Tensor<float>&, const Tensor<float>&,
                                                        const ConvLayer<float>&);
extern template ConvGrads<double> conv2d_backward<double>(const Tensor<double>&, const Tensor<double>&,
                                                          const ConvLayer<double>&);
extern template Tensor<float> conv2d_forward<float>(const Tensor<float>&, const ConvLayer<float>&,
                                                    ConvCache<float>&);
extern template Tensor<double> conv2d_forward<double>(const Tensor<double>&, const ConvLayer<double>&,
                                                      ConvCache<double>&);
extern template ConvGrads<float> conv2d_backward<float>(const Tensor<float>&, const ConvCache<float>&,
                                                        const ConvLayer<float>&);
extern template ConvGrads<double> conv2d_backward<double>(const Tensor<double>&, const ConvCache<double>&,
                                                          const ConvLayer<double>&);

}  // namespace wami
