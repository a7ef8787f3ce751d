#include "wami/layers.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace wami {

namespace {
template <typename T>
std::vector<int> pooled_shape(const Tensor<T>& input) {
  std::vector<int> s = input.shape;
  s[s.size() - 2] = (s[s.size() - 2] + 1) / 2;
  s[s.size() - 1] = (s[s.size() - 1] + 1) / 2;
  return s;
}
}  // namespace

template <typename T>
Tensor<T> maxpool2x2_forward(const Tensor<T>& input, MaxPoolCache& cache) {
  const Bchw in = bchw(input);
  Tensor<T> out(pooled_shape(input));
  const int oh = (in.h + 1) / 2, ow = (in.w + 1) / 2;
  cache.shape = input.shape;
  cache.argmax.assign(out.size(), 0);
  cache.valid = true;

  const std::size_t planes = static_cast<std::size_t>(in.b) * in.c;
#pragma omp parallel for schedule(static)
  for (std::size_t p = 0; p < planes; ++p) {
    const T* src = input.ptr() + p * in.h * in.w;
    T* dst = out.ptr() + p * static_cast<std::size_t>(oh) * ow;
    std::int64_t* arg = cache.argmax.data() + p * static_cast<std::size_t>(oh) * ow;
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        T best = -std::numeric_limits<T>::infinity();
        std::int64_t best_idx = -1;
        // row-major scan; first maximal element wins ties
        for (int dy = 0; dy < 2; ++dy) {
          const int iy = 2 * y + dy;
          if (iy >= in.h) break;
          for (int dx = 0; dx < 2; ++dx) {
            const int ix = 2 * x + dx;
            if (ix >= in.w) break;
            const T v = src[static_cast<std::size_t>(iy) * in.w + ix];
            if (v > best) {
              best = v;
              best_idx = static_cast<std::int64_t>(iy) * in.w + ix;
            }
          }
        }
        dst[static_cast<std::size_t>(y) * ow + x] = best;
        arg[static_cast<std::size_t>(y) * ow + x] = p * static_cast<std::int64_t>(in.h) * in.w + best_idx;
      }
    }
  }
  out.assert_finite("maxpool2x2 output");
  return out;
}

template <typename T>
Tensor<T> maxpool2x2_backward(const Tensor<T>& grad_out, const MaxPoolCache& cache) {
  if (!cache.valid) throw std::invalid_argument("maxpool2x2_backward: cache missing");
  Tensor<T> grad_in(cache.shape);
  if (grad_out.size() != cache.argmax.size()) {
    throw std::invalid_argument("maxpool2x2_backward: grad_out shape " + shape_str(grad_out.shape) +
                                " does not match cache");
  }
  for (std::size_t i = 0; i < grad_out.size(); ++i) {
    grad_in.data[static_cast<std::size_t>(cache.argmax[i])] += grad_out[i];
  }
  return grad_in;
}

template <typename T>
static void check_slopes(const Tensor<T>* slopes, int channels) {
  if (slopes == nullptr || slopes->rank() != 1 || slopes->dim(0) != channels) {
    throw std::invalid_argument("PReLU needs one slope per feature map (" + std::to_string(channels) +
                                ")");
  }
}

template <typename T>
Tensor<T> activation_forward(const Tensor<T>& input, Act kind, const Tensor<T>* slopes) {
  if (kind == Act::Identity) return input;
  const Bchw in = bchw(input);
  Tensor<T> out = Tensor<T>::zeros_like(input);
  const std::size_t plane = static_cast<std::size_t>(in.h) * in.w;
  if (kind == Act::ReLU) {
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < input.size(); ++i) out[i] = input[i] > T(0) ? input[i] : T(0);
    return out;
  }
  check_slopes(slopes, in.c);
#pragma omp parallel for collapse(2) schedule(static)
  for (int b = 0; b < in.b; ++b) {
    for (int c = 0; c < in.c; ++c) {
      const T a = (*slopes)[c];
      const T* src = input.ptr() + (static_cast<std::size_t>(b) * in.c + c) * plane;
      T* dst = out.ptr() + (static_cast<std::size_t>(b) * in.c + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) dst[i] = src[i] > T(0) ? src[i] : a * src[i];
    }
  }
  return out;
}

template <typename T>
ActivationGrads<T> activation_backward(const Tensor<T>& grad_out, const Tensor<T>& input, Act kind,
                                       const Tensor<T>* slopes) {
  if (!grad_out.same_shape(input)) {
    throw std::invalid_argument("activation_backward: grad/input shape mismatch");
  }
  ActivationGrads<T> g;
  if (kind == Act::Identity) {
    g.input = grad_out;
    return g;
  }
  const Bchw in = bchw(input);
  g.input = Tensor<T>::zeros_like(input);
  const std::size_t plane = static_cast<std::size_t>(in.h) * in.w;
  if (kind == Act::ReLU) {
    for (std::size_t i = 0; i < input.size(); ++i) g.input[i] = input[i] > T(0) ? grad_out[i] : T(0);
    return g;
  }
  check_slopes(slopes, in.c);
  g.slopes = Tensor<T>(std::vector<int>{in.c});
  for (int b = 0; b < in.b; ++b) {
    for (int c = 0; c < in.c; ++c) {
      const T a = (*slopes)[c];
      const std::size_t base = (static_cast<std::size_t>(b) * in.c + c) * plane;
      T acc = T(0);
      for (std::size_t i = 0; i < plane; ++i) {
        const T x = input[base + i];
        const T go = grad_out[base + i];
        if (x > T(0)) {
          g.input[base + i] = go;
        } else {
          g.input[base + i] = a * go;
          acc += go * x;
        }
      }
      g.slopes[c] += acc;
    }
  }
  return g;
}

template <typename T>
Tensor<T> batchnorm_forward(const Tensor<T>& input, const BatchNormParams<T>& params,
                            BatchNormState<T>& state, Mode mode, BatchNormCache<T>* cache) {
  const Bchw in = bchw(input);
  if (params.gamma.rank() != 1 || params.gamma.dim(0) != in.c || params.beta.dim(0) != in.c) {
    throw std::invalid_argument("batchnorm needs one (gamma,beta) pair per feature map");
  }
  Tensor<T> out = Tensor<T>::zeros_like(input);
  const std::size_t plane = static_cast<std::size_t>(in.h) * in.w;
  const std::size_t n = static_cast<std::size_t>(in.b) * plane;  // elements per channel

  Tensor<T> mean({in.c}), inv_std({in.c});
  if (mode == Mode::Train) {
#pragma omp parallel for schedule(static)
    for (int c = 0; c < in.c; ++c) {
      double sum = 0.0, sq = 0.0;
      for (int b = 0; b < in.b; ++b) {
        const T* src = input.ptr() + (static_cast<std::size_t>(b) * in.c + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) {
          sum += src[i];
          sq += static_cast<double>(src[i]) * src[i];
        }
      }
      const double m = sum / static_cast<double>(n);
      const double var = sq / static_cast<double>(n) - m * m;
      mean[c] = static_cast<T>(m);
      inv_std[c] = static_cast<T>(1.0 / std::sqrt(std::max(var, 0.0) + kBatchNormEps));
      state.running_mean[c] =
          static_cast<T>((1.0 - state.momentum) * state.running_mean[c] + state.momentum * m);
      state.running_var[c] =
          static_cast<T>((1.0 - state.momentum) * state.running_var[c] + state.momentum * std::max(var, 0.0));
    }
  } else {
    for (int c = 0; c < in.c; ++c) {
      mean[c] = state.running_mean[c];
      inv_std[c] = static_cast<T>(1.0 / std::sqrt(static_cast<double>(state.running_var[c]) + kBatchNormEps));
    }
  }

  Tensor<T> xhat = Tensor<T>::zeros_like(input);
#pragma omp parallel for collapse(2) schedule(static)
  for (int b = 0; b < in.b; ++b) {
    for (int c = 0; c < in.c; ++c) {
      const std::size_t base = (static_cast<std::size_t>(b) * in.c + c) * plane;
      const T m = mean[c], is = inv_std[c], ga = params.gamma[c], be = params.beta[c];
      for (std::size_t i = 0; i < plane; ++i) {
        const T xh = (input[base + i] - m) * is;
        xhat[base + i] = xh;
        out[base + i] = ga * xh + be;
      }
    }
  }
  if (cache != nullptr) {
    cache->xhat = std::move(xhat);
    cache->mean = std::move(mean);
    cache->inv_std = std::move(inv_std);
    cache->valid = true;
  }
  out.assert_finite("batchnorm output");
  return out;
}

template <typename T>
BatchNormGrads<T> batchnorm_backward(const Tensor<T>& grad_out, const BatchNormCache<T>& cache,
                                     const BatchNormParams<T>& params) {
  if (!cache.valid) throw std::invalid_argument("batchnorm_backward: cache missing");
  const Bchw in = bchw(cache.xhat);
  if (!grad_out.same_shape(cache.xhat)) {
    throw std::invalid_argument("batchnorm_backward: grad_out shape mismatch");
  }
  BatchNormGrads<T> g;
  g.input = Tensor<T>::zeros_like(grad_out);
  g.gamma = Tensor<T>(std::vector<int>{in.c});
  g.beta = Tensor<T>(std::vector<int>{in.c});
  const std::size_t plane = static_cast<std::size_t>(in.h) * in.w;
  const double n = static_cast<double>(in.b) * plane;

#pragma omp parallel for schedule(static)
  for (int c = 0; c < in.c; ++c) {
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (int b = 0; b < in.b; ++b) {
      const std::size_t base = (static_cast<std::size_t>(b) * in.c + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        sum_dy += grad_out[base + i];
        sum_dy_xhat += static_cast<double>(grad_out[base + i]) * cache.xhat[base + i];
      }
    }
    g.beta[c] = static_cast<T>(sum_dy);
    g.gamma[c] = static_cast<T>(sum_dy_xhat);
    const double ga = params.gamma[c], is = cache.inv_std[c];
    for (int b = 0; b < in.b; ++b) {
      const std::size_t base = (static_cast<std::size_t>(b) * in.c + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        const double dy = grad_out[base + i];
        const double xh = cache.xhat[base + i];
        g.input[base + i] =
            static_cast<T>(ga * is * (dy - sum_dy / n - xh * sum_dy_xhat / n));
      }
    }
  }
  return g;
}

template <typename T>
Tensor<T> dropout_forward(const Tensor<T>& input, double rate, Rng& rng, Mode mode,
                          std::vector<std::uint8_t>* mask_out) {
  if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout rate must be in [0,1)");
  if (mode == Mode::Infer || rate == 0.0) {
    if (mask_out != nullptr) mask_out->assign(input.size(), 1);
    return input;
  }
  Tensor<T> out = Tensor<T>::zeros_like(input);
  const T scale = static_cast<T>(1.0 / (1.0 - rate));
  std::vector<std::uint8_t> mask(input.size());
  for (std::size_t i = 0; i < input.size(); ++i) mask[i] = rng.uniform() >= rate ? 1 : 0;
  for (std::size_t i = 0; i < input.size(); ++i) out[i] = mask[i] ? input[i] * scale : T(0);
  if (mask_out != nullptr) *mask_out = std::move(mask);
  return out;
}

template <typename T>
Tensor<T> dropout_backward(const Tensor<T>& grad_out, double rate,
                           const std::vector<std::uint8_t>& mask) {
  if (mask.size() != grad_out.size()) throw std::invalid_argument("dropout_backward: mask size mismatch");
  Tensor<T> g = Tensor<T>::zeros_like(grad_out);
  const T scale = static_cast<T>(1.0 / (1.0 - rate));
  for (std::size_t i = 0; i < grad_out.size(); ++i) g[i] = mask[i] ? grad_out[i] * scale : T(0);
  return g;
}

#define WAMI_INSTANTIATE_LAYERS(T)                                                                  \
  template Tensor<T> maxpool2x2_forward<T>(const Tensor<T>&, MaxPoolCache&);                        \
  template Tensor<T> maxpool2x2_backward<T>(const Tensor<T>&, const MaxPoolCache&);                 \
  template Tensor<T> activation_forward<T>(const Tensor<T>&, Act, const Tensor<T>*);                \
  template ActivationGrads<T> activation_backward<T>(const Tensor<T>&, const Tensor<T>&, Act,       \
                                                     const Tensor<T>*);                             \
  template Tensor<T> batchnorm_forward<T>(const Tensor<T>&, const BatchNormParams<T>&,              \
                                          BatchNormState<T>&, Mode, BatchNormCache<T>*);            \
  template BatchNormGrads<T> batchnorm_backward<T>(const Tensor<T>&, const BatchNormCache<T>&,      \
                                                   const BatchNormParams<T>&);                      \
  template Tensor<T> dropout_forward<T>(const Tensor<T>&, double, Rng&, Mode,                       \
                                        std::vector<std::uint8_t>*);                                \
  template Tensor<T> dropout_backward<T>(const Tensor<T>&, double, const std::vector<std::uint8_t>&);

WAMI_INSTANTIATE_LAYERS(float)
WAMI_INSTANTIATE_LAYERS(double)

}  // namespace wami
