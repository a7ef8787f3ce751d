#pragma once

#include <string>
#include <utility>
#include <vector>

#include "wami/layers.hpp"

namespace wami {

enum class LayerKind { Conv, Pool, BatchNorm, Dropout, Activation };

// Declarative layer description. Geometry (output dims, downsample factor,
// receptive fields) is derived from this alone.
struct LayerSpec {
  LayerKind kind = LayerKind::Conv;
  int out_maps = 0;          // conv
  int kernel = 0;            // conv, odd
  int stride = 1;            // conv
  Act act = Act::Identity;   // conv or standalone activation
  double dropout_rate = 0.0; // dropout

  static LayerSpec conv(int out_maps, int kernel, int stride = 1, Act act = Act::Identity) {
    return {LayerKind::Conv, out_maps, kernel, stride, act, 0.0};
  }
  static LayerSpec pool() { return {LayerKind::Pool, 0, 2, 2, Act::Identity, 0.0}; }
  static LayerSpec batchnorm() { return {LayerKind::BatchNorm, 0, 0, 1, Act::Identity, 0.0}; }
  static LayerSpec dropout(double rate) { return {LayerKind::Dropout, 0, 0, 1, Act::Identity, rate}; }
};

struct NetworkSpec {
  std::string name;
  int in_frames = 5;  // temporal frames stacked as input channels
  std::vector<LayerSpec> layers;

  void validate() const;  // final layer 1x1 conv, odd kernels, ...
  int out_channels() const;
  int downsample_exponent() const;  // d: composed strides/pools, a power of 2
  std::pair<int, int> output_dims(int in_h, int in_w) const;  // {h, w}
};

// Coarse region-proposal net: two stride-2 convs, two pools (total
// downsample 16), PReLU activations, batchnorm, 1x1 output head.
NetworkSpec clusternet_spec(int n_frames, int out_channels = 1, int width = 32);

// Fine localization net: one pool only, kernels descending from 11x11 to the
// 1x1 head, ReLU activations, 50% dropout after the 6th and 7th convs.
NetworkSpec foveanet_spec(int n_frames, int out_channels = 1, int width = 32);

}  // namespace wami
