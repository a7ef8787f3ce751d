#include "wami/network.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "wami/checkpoint.hpp"

namespace wami {

template <typename T>
Network<T>::Network(NetworkSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  int in_ch = spec_.in_frames;
  layers_.resize(spec_.layers.size());
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const LayerSpec& l = spec_.layers[i];
    LayerState& st = layers_[i];
    if (l.kind == LayerKind::Conv) {
      st.conv.kernels = Tensor<T>({l.out_maps, in_ch, l.kernel, l.kernel});
      st.conv.bias = Tensor<T>({l.out_maps});
      st.conv.stride = l.stride;
      st.conv.padding = Padding::Same;
      if (l.act == Act::PReLU) st.prelu = Tensor<T>({l.out_maps});
      in_ch = l.out_maps;
    } else if (l.kind == LayerKind::BatchNorm) {
      st.bn.gamma = Tensor<T>({in_ch});
      st.bn.beta = Tensor<T>({in_ch});
      st.bn_state.running_mean = Tensor<T>({in_ch});
      st.bn_state.running_var = Tensor<T>({in_ch});
    }
  }
}

template <typename T>
void Network<T>::init(Rng& rng) {
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const LayerSpec& l = spec_.layers[i];
    LayerState& st = layers_[i];
    if (l.kind == LayerKind::Conv) {
      const double fan_in = static_cast<double>(st.conv.kernels.dim(1)) * l.kernel * l.kernel;
      const double stddev = std::sqrt(2.0 / fan_in);
      for (auto& v : st.conv.kernels.data) v = static_cast<T>(rng.normal(0.0, stddev));
      st.conv.bias.fill(T(0));
      if (l.act == Act::PReLU) st.prelu.fill(static_cast<T>(0.25));
    } else if (l.kind == LayerKind::BatchNorm) {
      st.bn.gamma.fill(T(1));
      st.bn.beta.fill(T(0));
      st.bn_state.running_mean.fill(T(0));
      st.bn_state.running_var.fill(T(1));
    }
  }
}

template <typename T>
std::vector<Tensor<T>*> Network<T>::parameters() {
  std::vector<Tensor<T>*> out;
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const LayerSpec& l = spec_.layers[i];
    LayerState& st = layers_[i];
    if (l.kind == LayerKind::Conv) {
      out.push_back(&st.conv.kernels);
      out.push_back(&st.conv.bias);
      if (l.act == Act::PReLU) out.push_back(&st.prelu);
    } else if (l.kind == LayerKind::BatchNorm) {
      out.push_back(&st.bn.gamma);
      out.push_back(&st.bn.beta);
    }
  }
  return out;
}

template <typename T>
std::vector<const Tensor<T>*> Network<T>::parameters() const {
  auto mut = const_cast<Network<T>*>(this)->parameters();
  return {mut.begin(), mut.end()};
}

template <typename T>
std::vector<std::string> Network<T>::parameter_names() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const LayerSpec& l = spec_.layers[i];
    const std::string p = "layer" + std::to_string(i);
    if (l.kind == LayerKind::Conv) {
      out.push_back(p + ".kernels");
      out.push_back(p + ".bias");
      if (l.act == Act::PReLU) out.push_back(p + ".prelu");
    } else if (l.kind == LayerKind::BatchNorm) {
      out.push_back(p + ".gamma");
      out.push_back(p + ".beta");
    }
  }
  return out;
}

template <typename T>
std::vector<std::pair<std::string, Tensor<T>*>> Network<T>::state_tensors() {
  std::vector<std::pair<std::string, Tensor<T>*>> out;
  auto params = parameters();
  auto names = parameter_names();
  for (std::size_t i = 0; i < params.size(); ++i) out.emplace_back(names[i], params[i]);
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    if (spec_.layers[i].kind == LayerKind::BatchNorm) {
      const std::string p = "layer" + std::to_string(i);
      out.emplace_back(p + ".running_mean", &layers_[i].bn_state.running_mean);
      out.emplace_back(p + ".running_var", &layers_[i].bn_state.running_var);
    }
  }
  return out;
}

template <typename T>
std::vector<std::pair<std::string, const Tensor<T>*>> Network<T>::state_tensors() const {
  auto mut = const_cast<Network<T>*>(this)->state_tensors();
  std::vector<std::pair<std::string, const Tensor<T>*>> out;
  out.reserve(mut.size());
  for (auto& [n, t] : mut) out.emplace_back(n, t);
  return out;
}

template <typename T>
Tensor<T> Network<T>::forward(const Tensor<T>& input, Mode mode, Rng* rng, Tape<T>* tape) {
  const Bchw in = bchw(input);
  if (in.c != spec_.in_frames) {
    throw std::invalid_argument(spec_.name + ": input has " + std::to_string(in.c) +
                                " channels, spec expects " + std::to_string(spec_.in_frames));
  }
  if (tape != nullptr) tape->entries.assign(spec_.layers.size(), TapeEntry<T>{});
  Tensor<T> x = input;
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const LayerSpec& l = spec_.layers[i];
    LayerState& st = layers_[i];
    TapeEntry<T>* te = tape != nullptr ? &tape->entries[i] : nullptr;
    switch (l.kind) {
      case LayerKind::Conv: {
        if (te != nullptr) te->input = x;
        Tensor<T> z = conv2d_forward(x, st.conv);
        if (l.act != Act::Identity && te != nullptr) te->preact = z;
        x = activation_forward(z, l.act, l.act == Act::PReLU ? &st.prelu : nullptr);
        break;
      }
      case LayerKind::Pool: {
        MaxPoolCache local;
        x = maxpool2x2_forward(x, te != nullptr ? te->pool : local);
        break;
      }
      case LayerKind::BatchNorm: {
        BatchNormCache<T> local;
        x = batchnorm_forward(x, st.bn, st.bn_state, mode, te != nullptr ? &te->bn : &local);
        break;
      }
      case LayerKind::Dropout: {
        if (mode == Mode::Train && rng == nullptr) {
          throw std::invalid_argument(spec_.name + ": dropout in train mode needs an RNG");
        }
        Rng dummy(0);
        x = dropout_forward(x, l.dropout_rate, mode == Mode::Train ? *rng : dummy, mode,
                            te != nullptr ? &te->dropmask : nullptr);
        break;
      }
      case LayerKind::Activation: {
        if (te != nullptr) te->input = x;
        x = activation_forward(x, l.act, static_cast<const Tensor<T>*>(nullptr));
        break;
      }
    }
  }
  return x;
}

template <typename T>
Tensor<T> Network<T>::forward_infer(const Tensor<T>& input) const {
  const Bchw in = bchw(input);
  if (in.c != spec_.in_frames) {
    throw std::invalid_argument(spec_.name + ": input has " + std::to_string(in.c) +
                                " channels, spec expects " + std::to_string(spec_.in_frames));
  }
  Tensor<T> x = input;
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const LayerSpec& l = spec_.layers[i];
    const LayerState& st = layers_[i];
    switch (l.kind) {
      case LayerKind::Conv: {
        Tensor<T> z = conv2d_forward(x, st.conv);
        x = activation_forward(z, l.act, l.act == Act::PReLU ? &st.prelu : nullptr);
        break;
      }
      case LayerKind::Pool: {
        MaxPoolCache cache;
        x = maxpool2x2_forward(x, cache);
        break;
      }
      case LayerKind::BatchNorm: {
        // infer mode never touches state; cast keeps the op signature single
        auto& state = const_cast<BatchNormState<T>&>(st.bn_state);
        x = batchnorm_forward(x, st.bn, state, Mode::Infer, static_cast<BatchNormCache<T>*>(nullptr));
        break;
      }
      case LayerKind::Dropout:
        break;  // identity at inference
      case LayerKind::Activation:
        x = activation_forward(x, l.act, static_cast<const Tensor<T>*>(nullptr));
        break;
    }
  }
  return x;
}

template <typename T>
std::vector<Tensor<T>> Network<T>::backward(const Tensor<T>& grad_out, const Tape<T>& tape) {
  if (tape.entries.size() != spec_.layers.size()) {
    throw std::invalid_argument("backward: tape does not match network (run forward with a tape)");
  }
  // grads keyed by parameter pointer order
  std::vector<Tensor<T>> grads;
  auto params = parameters();
  grads.reserve(params.size());
  for (Tensor<T>* p : params) grads.push_back(Tensor<T>::zeros_like(*p));

  // map layer -> first grad slot
  std::vector<int> slot(spec_.layers.size(), -1);
  {
    int s = 0;
    for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
      const LayerSpec& l = spec_.layers[i];
      if (l.kind == LayerKind::Conv) {
        slot[i] = s;
        s += 2 + (l.act == Act::PReLU ? 1 : 0);
      } else if (l.kind == LayerKind::BatchNorm) {
        slot[i] = s;
        s += 2;
      }
    }
  }

  Tensor<T> g = grad_out;
  for (int i = static_cast<int>(spec_.layers.size()) - 1; i >= 0; --i) {
    const LayerSpec& l = spec_.layers[i];
    LayerState& st = layers_[i];
    const TapeEntry<T>& te = tape.entries[i];
    switch (l.kind) {
      case LayerKind::Conv: {
        if (l.act != Act::Identity) {
          ActivationGrads<T> ag =
              activation_backward(g, te.preact, l.act, l.act == Act::PReLU ? &st.prelu : nullptr);
          if (l.act == Act::PReLU) grads[slot[i] + 2] = std::move(ag.slopes);
          g = std::move(ag.input);
        }
        ConvGrads<T> cg = conv2d_backward(g, te.input, st.conv);
        grads[slot[i]] = std::move(cg.kernels);
        grads[slot[i] + 1] = std::move(cg.bias);
        g = std::move(cg.input);
        break;
      }
      case LayerKind::Pool:
        g = maxpool2x2_backward(g, te.pool);
        break;
      case LayerKind::BatchNorm: {
        BatchNormGrads<T> bg = batchnorm_backward(g, te.bn, st.bn);
        grads[slot[i]] = std::move(bg.gamma);
        grads[slot[i] + 1] = std::move(bg.beta);
        g = std::move(bg.input);
        break;
      }
      case LayerKind::Dropout:
        g = dropout_backward(g, l.dropout_rate, te.dropmask);
        break;
      case LayerKind::Activation: {
        ActivationGrads<T> ag = activation_backward(g, te.input, l.act, static_cast<const Tensor<T>*>(nullptr));
        g = std::move(ag.input);
        break;
      }
    }
  }
  return grads;
}

template <typename T>
void Network<T>::save(const std::string& path, const nlohmann::json& extra_meta) const {
  nlohmann::json meta = extra_meta;
  meta["network"] = spec_.name;
  meta["in_frames"] = spec_.in_frames;
  meta["out_channels"] = spec_.out_channels();
  meta["downsample_exponent"] = spec_.downsample_exponent();
  auto named = state_tensors();
  if constexpr (std::is_same_v<T, float>) {
    save_checkpoint_f32(path, {named.begin(), named.end()}, meta);
  } else {
    save_checkpoint_f64(path, {named.begin(), named.end()}, meta);
  }
}

template <typename T>
void Network<T>::load(const std::string& path) {
  auto loaded = load_checkpoint<T>(path);
  for (auto& [name, dst] : state_tensors()) {
    auto it = loaded.find(name);
    if (it == loaded.end()) {
      throw std::runtime_error("checkpoint " + path + " is missing tensor " + name +
                               " (network/spec mismatch)");
    }
    if (it->second.shape != dst->shape) {
      throw std::runtime_error("checkpoint tensor " + name + " has shape " +
                               shape_str(it->second.shape) + ", network expects " +
                               shape_str(dst->shape));
    }
    *dst = std::move(it->second);
  }
}

template <typename T>
Heatmap infer(const Network<T>& net, const Tensor<T>& stack) {
  Tensor<T> raw = net.forward_infer(stack);
  const Bchw out = bchw(raw);
  if (out.b != 1) throw std::invalid_argument("infer expects a single stack");
  Heatmap h;
  h.width = out.w;
  h.height = out.h;
  h.d = net.spec().downsample_exponent();
  h.values.resize(static_cast<std::size_t>(out.w) * out.h);
  const std::size_t plane = h.values.size();
  if (out.c == 1) {
    for (std::size_t i = 0; i < plane; ++i) {
      h.values[i] = std::clamp(static_cast<float>(raw[i]), 0.0f, 1.0f);
    }
  } else if (out.c == 2) {
    for (std::size_t i = 0; i < plane; ++i) {
      const double a = raw[i], b = raw[plane + i];
      const double m = std::max(a, b);
      const double ea = std::exp(a - m), eb = std::exp(b - m);
      h.values[i] = static_cast<float>(eb / (ea + eb));
    }
  } else {
    throw std::invalid_argument("infer: expected a 1- or 2-channel head, got " + std::to_string(out.c));
  }
  return h;
}

Network<float> load_network(const std::string& path) {
  nlohmann::json meta;
  load_checkpoint<float>(path, &meta);
  const std::string name = meta.value("network", "");
  const int n_frames = meta.value("in_frames", 5);
  const int out_ch = meta.value("out_channels", 1);
  const int width = meta.value("width", 32);
  NetworkSpec spec;
  if (name == "clusternet") {
    spec = clusternet_spec(n_frames, out_ch, width);
  } else if (name == "foveanet") {
    spec = foveanet_spec(n_frames, out_ch, width);
  } else {
    throw std::runtime_error("checkpoint " + path + " has unknown network '" + name + "'");
  }
  Network<float> net(spec);
  net.load(path);
  return net;
}

template class Network<float>;
template class Network<double>;
template Heatmap infer<float>(const Network<float>&, const Tensor<float>&);
template Heatmap infer<double>(const Network<double>&, const Tensor<double>&);

}  // namespace wami
