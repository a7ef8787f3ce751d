#include "wami/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace wami {

TrainConfig clusternet_train_defaults() {
  TrainConfig cfg;
  cfg.opt = OptKind::SgdNesterov;
  cfg.lr = 0.01;
  cfg.batch_size = 8;
  return cfg;
}

TrainConfig foveanet_train_defaults() {
  TrainConfig cfg;
  cfg.opt = OptKind::Adam;
  cfg.lr = 0.00001;
  cfg.batch_size = 32;
  return cfg;
}

namespace {

template <typename T>
struct Batch {
  Tensor<T> input;
  Tensor<T> target;
  Tensor<int> classes;
};

template <typename T>
Batch<T> assemble(const Dataset<T>& data, const std::vector<std::size_t>& idx, std::size_t lo,
                  std::size_t hi, LossKind loss) {
  const int b = static_cast<int>(hi - lo);
  std::vector<Sample<T>> samples(b);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < b; ++i) data.fetch(idx[lo + i], samples[i]);

  Batch<T> out;
  const auto& in0 = samples[0].input;
  out.input = Tensor<T>({b, in0.dim(0), in0.dim(1), in0.dim(2)});
  const std::size_t in_n = in0.size();
  for (int i = 0; i < b; ++i) {
    if (samples[i].input.shape != in0.shape) {
      throw std::invalid_argument("train: dataset yields mixed input shapes");
    }
    std::copy(samples[i].input.data.begin(), samples[i].input.data.end(),
              out.input.data.begin() + i * in_n);
  }
  if (loss == LossKind::Euclidean) {
    const auto& t0 = samples[0].target;
    out.target = Tensor<T>({b, t0.dim(0), t0.dim(1), t0.dim(2)});
    const std::size_t t_n = t0.size();
    for (int i = 0; i < b; ++i) {
      std::copy(samples[i].target.data.begin(), samples[i].target.data.end(),
                out.target.data.begin() + i * t_n);
    }
  } else {
    const auto& c0 = samples[0].classes;
    out.classes = Tensor<int>({b, c0.dim(0), c0.dim(1)});
    const std::size_t c_n = c0.size();
    for (int i = 0; i < b; ++i) {
      std::copy(samples[i].classes.data.begin(), samples[i].classes.data.end(),
                out.classes.data.begin() + i * c_n);
    }
  }
  return out;
}

template <typename T>
double batch_loss(Network<T>& net, const Batch<T>& batch, LossKind loss, Mode mode, Rng* rng,
                  Tape<T>* tape, Tensor<T>* grad_out) {
  Tensor<T> out = net.forward(batch.input, mode, rng, tape);
  LossResult<T> lr = loss == LossKind::Euclidean ? euclidean_loss(out, batch.target)
                                                 : softmax_xent_loss(out, batch.classes);
  if (grad_out != nullptr) *grad_out = std::move(lr.grad);
  return lr.value;
}

template <typename T>
double eval_loss(Network<T>& net, const Dataset<T>& data, const std::vector<std::size_t>& idx,
                 int batch_size, LossKind loss) {
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t lo = 0; lo < idx.size(); lo += batch_size) {
    const std::size_t hi = std::min(idx.size(), lo + batch_size);
    Batch<T> b = assemble(data, idx, lo, hi, loss);
    acc += batch_loss<T>(net, b, loss, Mode::Infer, nullptr, nullptr, nullptr) * (hi - lo);
    count += hi - lo;
  }
  return count > 0 ? acc / static_cast<double>(count) : 0.0;
}

}  // namespace

template <typename T>
TrainResult train(Network<T>& net, const Dataset<T>& data, const TrainConfig& cfg) {
  if (data.size() == 0) throw std::invalid_argument("train: empty dataset");
  if (cfg.batch_size < 1 || cfg.lr <= 0.0) throw std::invalid_argument("train: bad config");

  Rng split_rng = Rng(cfg.seed).fork(0x5EED);
  Rng shuffle_rng = Rng(cfg.seed).fork(0x5101);
  Rng dropout_rng = Rng(cfg.seed).fork(0xD120);

  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  split_rng.shuffle(all);
  std::size_t n_val = cfg.val_fraction > 0.0
                          ? std::max<std::size_t>(1, static_cast<std::size_t>(
                                                         std::llround(cfg.val_fraction * data.size())))
                          : 0;
  if (n_val >= data.size()) n_val = data.size() - 1;
  std::vector<std::size_t> val_idx(all.begin(), all.begin() + n_val);
  std::vector<std::size_t> train_idx(all.begin() + n_val, all.end());

  auto params = net.parameters();
  OptimizerState<T> opt;
  opt.kind = cfg.opt;
  opt.lr = cfg.lr;
  opt.init(params);

  TrainResult result;
  double best = std::numeric_limits<double>::infinity();
  int stale = 0;
  long step = 0;
  std::vector<Tensor<T>> best_state;
  auto state = net.state_tensors();
  auto snapshot = [&] {
    best_state.clear();
    for (auto& [n, t] : state) best_state.push_back(*t);
  };
  auto restore = [&] {
    for (std::size_t i = 0; i < state.size(); ++i) *state[i].second = best_state[i];
  };
  snapshot();
  best = 0.0;  // placeholder until first evaluation
  bool have_eval = false;

  double train_acc = 0.0;
  long train_acc_n = 0;

  auto evaluate = [&]() {
    const double train_loss = train_acc_n > 0 ? train_acc / train_acc_n : 0.0;
    const double val =
        n_val > 0 ? eval_loss<T>(net, data, val_idx, cfg.batch_size, cfg.loss) : train_loss;
    result.history.push_back({step, train_loss, val, opt.lr});
    train_acc = 0.0;
    train_acc_n = 0;
    if (!have_eval || val < best - cfg.plateau_min_delta) {
      best = val;
      result.best_val = val;
      result.best_step = step;
      stale = 0;
      snapshot();
    } else if (++stale >= cfg.plateau_patience) {
      opt.drop_lr(cfg.lr_drop_factor);
      stale = 0;
    }
    have_eval = true;
  };

  bool done = false;
  for (int epoch = 0; epoch < cfg.max_epochs && !done; ++epoch) {
    shuffle_rng.shuffle(train_idx);
    for (std::size_t lo = 0; lo < train_idx.size() && !done; lo += cfg.batch_size) {
      const std::size_t hi = std::min(train_idx.size(), lo + static_cast<std::size_t>(cfg.batch_size));
      Batch<T> batch = assemble(data, train_idx, lo, hi, cfg.loss);
      Tape<T> tape;
      Tensor<T> grad;
      double loss_value;
      try {
        loss_value = batch_loss<T>(net, batch, cfg.loss, Mode::Train, &dropout_rng, &tape, &grad);
      } catch (const std::runtime_error& e) {
        throw std::runtime_error("training diverged at step " + std::to_string(step) + ": " + e.what());
      }
      auto grads = net.backward(grad, tape);
      std::vector<const Tensor<T>*> gp;
      gp.reserve(grads.size());
      for (auto& g : grads) gp.push_back(&g);
      optimizer_step(params, gp, opt);
      ++step;
      train_acc += loss_value;
      ++train_acc_n;
      if (cfg.eval_every > 0 && step % cfg.eval_every == 0) evaluate();
      if (cfg.max_steps > 0 && step >= cfg.max_steps) done = true;
    }
    if (cfg.eval_every == 0) evaluate();
  }
  if (train_acc_n > 0 || result.history.empty()) evaluate();
  restore();
  result.total_steps = step;

  if (!cfg.log_csv.empty()) {
    std::ofstream f(cfg.log_csv, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write training log: " + cfg.log_csv);
    f << "step,train_loss,val_loss,lr\n";
    for (const auto& r : result.history) {
      f << r.step << "," << r.train_loss << "," << r.val_loss << "," << r.lr << "\n";
    }
  }
  return result;
}

template TrainResult train<float>(Network<float>&, const Dataset<float>&, const TrainConfig&);
template TrainResult train<double>(Network<double>&, const Dataset<double>&, const TrainConfig&);

}  // namespace wami
