#include "wami/conv.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cstring>
#include <stdexcept>
#include <vector>

namespace wami {

namespace {

template <typename T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapM = Eigen::Map<MatRM<T>>;
template <typename T>
using CMapM = Eigen::Map<const MatRM<T>>;

// Strip size keeps the im2col buffer around 4 MB.
int strip_rows_for(int k_taps, int out_w, int out_h, std::size_t elem_size) {
  const std::size_t budget = 4u << 20;
  std::size_t per_row = static_cast<std::size_t>(k_taps) * out_w * elem_size;
  int rows = per_row == 0 ? out_h : static_cast<int>(budget / std::max<std::size_t>(per_row, 1));
  return std::clamp(rows, 1, out_h);
}

// Column p = (r - r0) * out_w + c holds the k_taps input values feeding
// output (r, c). Out-of-frame taps are the zero padding.
template <typename T>
void im2col_strip(const T* in, const ConvGeometry& g, int r0, int r1, T* col) {
  const int P = (r1 - r0) * g.out_w;
  const std::size_t in_plane = static_cast<std::size_t>(g.in_h) * g.in_w;
  std::size_t krow = 0;
  for (int ic = 0; ic < g.in_c; ++ic) {
    const T* plane = in + ic * in_plane;
    for (int ky = 0; ky < g.kh; ++ky) {
      for (int kx = 0; kx < g.kw; ++kx, ++krow) {
        T* dst = col + krow * P;
        for (int r = r0; r < r1; ++r) {
          const int iy = r * g.stride - g.pad_h + ky;
          T* row_dst = dst + (r - r0) * g.out_w;
          if (iy < 0 || iy >= g.in_h) {
            std::fill(row_dst, row_dst + g.out_w, T(0));
            continue;
          }
          const T* src = plane + static_cast<std::size_t>(iy) * g.in_w;
          if (g.stride == 1) {
            // contiguous run with clipped ends
            const int ix0 = -g.pad_w + kx;
            int c_lo = std::max(0, -ix0);
            int c_hi = std::min(g.out_w, g.in_w - ix0);
            if (c_lo > 0) std::fill(row_dst, row_dst + c_lo, T(0));
            if (c_hi < g.out_w) std::fill(row_dst + std::max(c_lo, c_hi), row_dst + g.out_w, T(0));
            if (c_hi > c_lo) std::memcpy(row_dst + c_lo, src + ix0 + c_lo, sizeof(T) * (c_hi - c_lo));
          } else {
            for (int c = 0; c < g.out_w; ++c) {
              const int ix = c * g.stride - g.pad_w + kx;
              row_dst[c] = (ix >= 0 && ix < g.in_w) ? src[ix] : T(0);
            }
          }
        }
      }
    }
  }
}

// Scatter-add of a K x P column block back onto the input gradient.
template <typename T>
void col2im_strip(const T* col, const ConvGeometry& g, int r0, int r1, T* grad_in) {
  const int P = (r1 - r0) * g.out_w;
  const std::size_t in_plane = static_cast<std::size_t>(g.in_h) * g.in_w;
  std::size_t krow = 0;
  for (int ic = 0; ic < g.in_c; ++ic) {
    T* plane = grad_in + ic * in_plane;
    for (int ky = 0; ky < g.kh; ++ky) {
      for (int kx = 0; kx < g.kw; ++kx, ++krow) {
        const T* src_row = col + krow * P;
        for (int r = r0; r < r1; ++r) {
          const int iy = r * g.stride - g.pad_h + ky;
          if (iy < 0 || iy >= g.in_h) continue;
          T* dst = plane + static_cast<std::size_t>(iy) * g.in_w;
          const T* src = src_row + (r - r0) * g.out_w;
          for (int c = 0; c < g.out_w; ++c) {
            const int ix = c * g.stride - g.pad_w + kx;
            if (ix >= 0 && ix < g.in_w) dst[ix] += src[c];
          }
        }
      }
    }
  }
}

}  // namespace

template <typename T>
ConvGeometry conv_geometry(const Bchw& in, const ConvLayer<T>& layer) {
  if (layer.kernels.rank() != 4) {
    throw std::invalid_argument("conv kernels must be {out_maps,in_channels,kh,kw}, got " +
                                shape_str(layer.kernels.shape));
  }
  ConvGeometry g;
  g.in_c = in.c;
  g.in_h = in.h;
  g.in_w = in.w;
  g.out_c = layer.kernels.dim(0);
  g.kh = layer.kernels.dim(2);
  g.kw = layer.kernels.dim(3);
  g.stride = layer.stride;
  if (g.kh % 2 == 0 || g.kw % 2 == 0) {
    throw std::invalid_argument("conv kernel dims must be odd, got " + shape_str(layer.kernels.shape));
  }
  if (g.stride < 1) throw std::invalid_argument("conv stride must be >= 1");
  if (layer.kernels.dim(1) != in.c) {
    throw std::invalid_argument("conv input has " + std::to_string(in.c) + " channels but layer expects " +
                                std::to_string(layer.kernels.dim(1)));
  }
  if (layer.bias.rank() != 1 || layer.bias.dim(0) != g.out_c) {
    throw std::invalid_argument("conv bias must be {out_maps}, got " + shape_str(layer.bias.shape));
  }
  if (layer.padding == Padding::Same) {
    g.pad_h = (g.kh - 1) / 2;
    g.pad_w = (g.kw - 1) / 2;
  } else {
    g.pad_h = 0;
    g.pad_w = 0;
    if (in.h < g.kh || in.w < g.kw) {
      throw std::invalid_argument("valid-padding conv input smaller than kernel");
    }
  }
  g.out_h = (in.h + 2 * g.pad_h - g.kh) / g.stride + 1;
  g.out_w = (in.w + 2 * g.pad_w - g.kw) / g.stride + 1;
  return g;
}

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const ConvLayer<T>& layer) {
  const Bchw in = bchw(input);
  const ConvGeometry g = conv_geometry(in, layer);
  const int M = g.out_c;
  const int K = g.in_c * g.kh * g.kw;

  Tensor<T> out(input.rank() == 4 ? std::vector<int>{in.b, M, g.out_h, g.out_w}
                                  : std::vector<int>{M, g.out_h, g.out_w});

  const std::size_t in_stride = static_cast<std::size_t>(g.in_c) * g.in_h * g.in_w;
  const std::size_t out_stride = static_cast<std::size_t>(M) * g.out_h * g.out_w;
  const std::size_t out_plane = static_cast<std::size_t>(g.out_h) * g.out_w;
  const int strip = strip_rows_for(K, g.out_w, g.out_h, sizeof(T));
  const int n_strips = (g.out_h + strip - 1) / strip;
  const CMapM<T> W(layer.kernels.ptr(), M, K);

#pragma omp parallel
  {
    std::vector<T> colbuf(static_cast<std::size_t>(K) * strip * g.out_w);
    std::vector<T> obuf(static_cast<std::size_t>(M) * strip * g.out_w);
#pragma omp for collapse(2) schedule(static)
    for (int b = 0; b < in.b; ++b) {
      for (int s = 0; s < n_strips; ++s) {
        const int r0 = s * strip;
        const int r1 = std::min(g.out_h, r0 + strip);
        const int P = (r1 - r0) * g.out_w;
        im2col_strip(input.ptr() + b * in_stride, g, r0, r1, colbuf.data());
        MapM<T> O(obuf.data(), M, P);
        O.noalias() = W * CMapM<T>(colbuf.data(), K, P);
        T* out_b = out.ptr() + b * out_stride;
        for (int m = 0; m < M; ++m) {
          const T bias = layer.bias[m];
          T* dst = out_b + m * out_plane + static_cast<std::size_t>(r0) * g.out_w;
          const T* src = obuf.data() + static_cast<std::size_t>(m) * P;
          for (int p = 0; p < P; ++p) dst[p] = src[p] + bias;
        }
      }
    }
  }
  out.assert_finite("conv2d_forward output");
  return out;
}

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& grad_out, const Tensor<T>& input,
                             const ConvLayer<T>& layer) {
  const Bchw in = bchw(input);
  const ConvGeometry g = conv_geometry(in, layer);
  const Bchw go = bchw(grad_out);
  if (go.b != in.b || go.c != g.out_c || go.h != g.out_h || go.w != g.out_w) {
    throw std::invalid_argument("conv2d_backward: grad_out shape " + shape_str(grad_out.shape) +
                                " does not match forward geometry");
  }
  const int M = g.out_c;
  const int K = g.in_c * g.kh * g.kw;

  ConvGrads<T> grads;
  grads.input = Tensor<T>::zeros_like(input);
  grads.kernels = Tensor<T>::zeros_like(layer.kernels);
  grads.bias = Tensor<T>::zeros_like(layer.bias);

  const std::size_t in_stride = static_cast<std::size_t>(g.in_c) * g.in_h * g.in_w;
  const std::size_t out_stride = static_cast<std::size_t>(M) * g.out_h * g.out_w;
  const std::size_t out_plane = static_cast<std::size_t>(g.out_h) * g.out_w;
  const int strip = strip_rows_for(K, g.out_w, g.out_h, sizeof(T));
  const int n_strips = (g.out_h + strip - 1) / strip;
  const CMapM<T> W(layer.kernels.ptr(), M, K);

  // Per-sample kernel/bias accumulators, reduced in sample order afterwards
  // so results do not depend on the thread count.
  std::vector<std::vector<T>> gw_b(in.b), gb_b(in.b);

#pragma omp parallel
  {
    std::vector<T> colbuf(static_cast<std::size_t>(K) * strip * g.out_w);
    std::vector<T> gbuf(static_cast<std::size_t>(M) * strip * g.out_w);
    std::vector<T> cgbuf(static_cast<std::size_t>(K) * strip * g.out_w);
#pragma omp for schedule(static)
    for (int b = 0; b < in.b; ++b) {
      gw_b[b].assign(static_cast<std::size_t>(M) * K, T(0));
      gb_b[b].assign(M, T(0));
      MapM<T> GW(gw_b[b].data(), M, K);
      const T* go_b = grad_out.ptr() + b * out_stride;
      for (int s = 0; s < n_strips; ++s) {
        const int r0 = s * strip;
        const int r1 = std::min(g.out_h, r0 + strip);
        const int P = (r1 - r0) * g.out_w;
        for (int m = 0; m < M; ++m) {
          const T* src = go_b + m * out_plane + static_cast<std::size_t>(r0) * g.out_w;
          std::memcpy(gbuf.data() + static_cast<std::size_t>(m) * P, src, sizeof(T) * P);
          T acc = T(0);
          for (int p = 0; p < P; ++p) acc += src[p];
          gb_b[b][m] += acc;
        }
        CMapM<T> G(gbuf.data(), M, P);
        im2col_strip(input.ptr() + b * in_stride, g, r0, r1, colbuf.data());
        GW.noalias() += G * CMapM<T>(colbuf.data(), K, P).transpose();
        MapM<T> CG(cgbuf.data(), K, P);
        CG.noalias() = W.transpose() * G;
        col2im_strip(cgbuf.data(), g, r0, r1, grads.input.ptr() + b * in_stride);
      }
    }
  }
  for (int b = 0; b < in.b; ++b) {
    for (std::size_t i = 0; i < grads.kernels.size(); ++i) grads.kernels[i] += gw_b[b][i];
    for (int m = 0; m < M; ++m) grads.bias[m] += gb_b[b][m];
  }
  grads.input.assert_finite("conv2d_backward grad_input");
  grads.kernels.assert_finite("conv2d_backward grad_kernels");
  return grads;
}

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const ConvLayer<T>& layer, ConvCache<T>& cache) {
  cache.input = input;
  cache.valid = true;
  return conv2d_forward(input, layer);
}

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& grad_out, const ConvCache<T>& cache,
                             const ConvLayer<T>& layer) {
  if (!cache.valid) throw std::invalid_argument("conv2d_backward: cache missing (run forward first)");
  return conv2d_backward(grad_out, cache.input, layer);
}

template struct ConvLayer<float>;
template struct ConvLayer<double>;
template ConvGeometry conv_geometry<float>(const Bchw&, const ConvLayer<float>&);
template ConvGeometry conv_geometry<double>(const Bchw&, const ConvLayer<double>&);
template Tensor<float> conv2d_forward<float>(const Tensor<float>&, const ConvLayer<float>&);
template Tensor<double> conv2d_forward<double>(const Tensor<double>&, const ConvLayer<double>&);
template ConvGrads<float> conv2d_backward<float>(const Tensor<float>&, const Tensor<float>&,
                                                 const ConvLayer<float>&);
template ConvGrads<double> conv2d_backward<double>(const Tensor<double>&, const Tensor<double>&,
                                                   const ConvLayer<double>&);
template Tensor<float> conv2d_forward<float>(const Tensor<float>&, const ConvLayer<float>&,
                                             ConvCache<float>&);
template Tensor<double> conv2d_forward<double>(const Tensor<double>&, const ConvLayer<double>&,
                                               ConvCache<double>&);
template ConvGrads<float> conv2d_backward<float>(const Tensor<float>&, const ConvCache<float>&,
                                                 const ConvLayer<float>&);
template ConvGrads<double> conv2d_backward<double>(const Tensor<double>&, const ConvCache<double>&,
                                                   const ConvLayer<double>&);

}  // namespace wami
