#include "wami/netspec.hpp"

#include <stdexcept>

namespace wami {

void NetworkSpec::validate() const {
  if (in_frames < 1) throw std::invalid_argument("NetworkSpec: in_frames must be >= 1");
  if (layers.empty()) throw std::invalid_argument("NetworkSpec: no layers");
  for (const LayerSpec& l : layers) {
    if (l.kind == LayerKind::Conv) {
      if (l.kernel < 1 || l.kernel % 2 == 0) {
        throw std::invalid_argument("NetworkSpec: conv kernels must be odd");
      }
      if (l.out_maps < 1 || l.stride < 1) throw std::invalid_argument("NetworkSpec: bad conv layer");
    }
    if (l.kind == LayerKind::Dropout && (l.dropout_rate < 0.0 || l.dropout_rate >= 1.0)) {
      throw std::invalid_argument("NetworkSpec: dropout rate must be in [0,1)");
    }
  }
  const LayerSpec& last = layers.back();
  if (last.kind != LayerKind::Conv || last.kernel != 1 || last.stride != 1) {
    throw std::invalid_argument("NetworkSpec: final layer must be a 1x1 stride-1 conv");
  }
}

int NetworkSpec::out_channels() const {
  for (auto it = layers.rbegin(); it != layers.rend(); ++it) {
    if (it->kind == LayerKind::Conv) return it->out_maps;
  }
  throw std::invalid_argument("NetworkSpec: no conv layer");
}

int NetworkSpec::downsample_exponent() const {
  long factor = 1;
  for (const LayerSpec& l : layers) {
    if (l.kind == LayerKind::Conv) factor *= l.stride;
    if (l.kind == LayerKind::Pool) factor *= 2;
  }
  int d = 0;
  while ((1L << d) < factor) ++d;
  if ((1L << d) != factor) throw std::invalid_argument("NetworkSpec: downsample factor not a power of 2");
  return d;
}

std::pair<int, int> NetworkSpec::output_dims(int in_h, int in_w) const {
  int h = in_h, w = in_w;
  for (const LayerSpec& l : layers) {
    if (l.kind == LayerKind::Conv) {
      h = (h + l.stride - 1) / l.stride;  // same padding: ceil(in/stride)
      w = (w + l.stride - 1) / l.stride;
    } else if (l.kind == LayerKind::Pool) {
      h = (h + 1) / 2;
      w = (w + 1) / 2;
    }
  }
  return {h, w};
}

NetworkSpec clusternet_spec(int n_frames, int out_channels, int width) {
  if (n_frames != 1 && n_frames != 3 && n_frames != 5) {
    throw std::invalid_argument("clusternet_spec: n_frames must be 1, 3 or 5");
  }
  NetworkSpec s;
  s.name = "clusternet";
  s.in_frames = n_frames;
  s.layers = {
      LayerSpec::conv(width, 3, 2, Act::PReLU),
      LayerSpec::conv(width, 3, 2, Act::PReLU),
      LayerSpec::batchnorm(),
      LayerSpec::pool(),
      LayerSpec::conv(width, 3, 1, Act::PReLU),
      LayerSpec::batchnorm(),
      LayerSpec::pool(),
      LayerSpec::conv(width, 3, 1, Act::PReLU),
      LayerSpec::conv(out_channels, 1, 1, Act::Identity),
  };
  s.validate();
  return s;
}

NetworkSpec foveanet_spec(int n_frames, int out_channels, int width) {
  if (n_frames != 1 && n_frames != 3 && n_frames != 5) {
    throw std::invalid_argument("foveanet_spec: n_frames must be 1, 3 or 5");
  }
  NetworkSpec s;
  s.name = "foveanet";
  s.in_frames = n_frames;
  s.layers = {
      LayerSpec::conv(width, 11, 1, Act::ReLU),
      LayerSpec::pool(),
      LayerSpec::conv(width, 9, 1, Act::ReLU),
      LayerSpec::conv(width, 7, 1, Act::ReLU),
      LayerSpec::conv(width, 5, 1, Act::ReLU),
      LayerSpec::conv(width, 3, 1, Act::ReLU),
      LayerSpec::conv(width, 3, 1, Act::ReLU),
      LayerSpec::dropout(0.5),
      LayerSpec::conv(width, 3, 1, Act::ReLU),
      LayerSpec::dropout(0.5),
      LayerSpec::conv(out_channels, 1, 1, Act::Identity),
  };
  s.validate();
  return s;
}

}  // namespace wami
