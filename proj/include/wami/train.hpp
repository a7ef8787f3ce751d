#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wami/loss.hpp"
#include "wami/network.hpp"
#include "wami/optim.hpp"

namespace wami {

template <typename T>
struct Sample {
  Tensor<T> input;      // {C,H,W}
  Tensor<T> target;     // {1,h,w} for euclidean
  Tensor<int> classes;  // {h,w} for softmax_xent
};

template <typename T>
class Dataset {
 public:
  virtual ~Dataset() = default;
  virtual std::size_t size() const = 0;
  virtual void fetch(std::size_t idx, Sample<T>& out) const = 0;
};

struct TrainConfig {
  OptKind opt = OptKind::SgdNesterov;
  double lr = 0.01;
  int batch_size = 8;
  double lr_drop_factor = 0.1;
  int plateau_patience = 5;        // consecutive evaluations without improvement
  double plateau_min_delta = 1e-4;
  int max_epochs = 10;
  long max_steps = 0;              // 0 = epoch-bounded only
  double val_fraction = 0.1;       // 0 = plateau/best tracked on train loss
  int eval_every = 0;              // steps; 0 = once per epoch
  std::uint64_t seed = 1;
  LossKind loss = LossKind::Euclidean;
  std::string log_csv;             // step,train_loss,val_loss,lr rows when set
};

// Paper-reported optimizer settings for the two nets.
TrainConfig clusternet_train_defaults();
TrainConfig foveanet_train_defaults();

struct TrainHistoryRow {
  long step;
  double train_loss;
  double val_loss;
  double lr;
};

struct TrainResult {
  std::vector<TrainHistoryRow> history;
  double best_val = 0.0;
  long best_step = 0;
  long total_steps = 0;
};

// Runs the loop, restores the best-validation parameters before returning.
// Deterministic given cfg.seed. Throws on NaN loss.
template <typename T>
TrainResult train(Network<T>& net, const Dataset<T>& data, const TrainConfig& cfg);

extern template TrainResult train<float>(Network<float>&, const Dataset<float>&, const TrainConfig&);
extern template TrainResult train<double>(Network<double>&, const Dataset<double>&, const TrainConfig&);

}  // namespace wami
