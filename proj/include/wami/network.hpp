#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "wami/conv.hpp"
#include "wami/layers.hpp"
#include "wami/netspec.hpp"
#include "wami/rng.hpp"
#include "wami/targets.hpp"

namespace wami {

template <typename T>
struct TapeEntry {
  Tensor<T> input;    // layer input (conv / standalone activation)
  Tensor<T> preact;   // conv output before its fused activation
  MaxPoolCache pool;
  BatchNormCache<T> bn;
  std::vector<std::uint8_t> dropmask;
};

template <typename T>
struct Tape {
  std::vector<TapeEntry<T>> entries;
};

// Materialized network: parameters plus forward/backward over a NetworkSpec.
template <typename T>
class Network {
 public:
  Network() = default;
  explicit Network(NetworkSpec spec);

  const NetworkSpec& spec() const { return spec_; }

  void init(Rng& rng);  // He init; PReLU slopes 0.25; BN gamma 1, beta 0

  // Parameters in declaration order, names stable across save/load.
  std::vector<Tensor<T>*> parameters();
  std::vector<const Tensor<T>*> parameters() const;
  std::vector<std::string> parameter_names() const;
  // Parameters plus batchnorm running statistics (what a checkpoint holds).
  std::vector<std::pair<std::string, Tensor<T>*>> state_tensors();
  std::vector<std::pair<std::string, const Tensor<T>*>> state_tensors() const;

  // Full pass; Train mode needs an RNG when the spec has dropout and updates
  // batchnorm running statistics. Pass a tape to enable backward().
  Tensor<T> forward(const Tensor<T>& input, Mode mode, Rng* rng = nullptr, Tape<T>* tape = nullptr);

  // Inference-only pass: no state mutation, safe to call concurrently.
  Tensor<T> forward_infer(const Tensor<T>& input) const;

  // Gradients aligned with parameters().
  std::vector<Tensor<T>> backward(const Tensor<T>& grad_out, const Tape<T>& tape);

  void save(const std::string& path, const nlohmann::json& extra_meta = {}) const;
  void load(const std::string& path);

 private:
  struct LayerState {
    ConvLayer<T> conv;
    Tensor<T> prelu;
    BatchNormParams<T> bn;
    BatchNormState<T> bn_state;
  };
  NetworkSpec spec_;
  std::vector<LayerState> layers_;
};

// Heatmap prediction for one frame stack {N,H,W} (pixel values already in
// [0,1]). A 1-channel head is clamped to [0,1]; a 2-channel head returns the
// softmax foreground probability. Grid is input/2^d.
template <typename T>
Heatmap infer(const Network<T>& net, const Tensor<T>& stack);

// Rebuild a reference network (clusternet/foveanet) from a checkpoint's meta
// block and load its parameters.
Network<float> load_network(const std::string& path);

extern template class Network<float>;
extern template class Network<double>;
extern template Heatmap infer<float>(const Network<float>&, const Tensor<float>&);
extern template Heatmap infer<double>(const Network<double>&, const Tensor<double>&);

}  // namespace wami
