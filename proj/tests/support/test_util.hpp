#pragma once

#include "wami/rng.hpp"
#include "wami/tensor.hpp"
#include "wami/train.hpp"

namespace testutil {

template <typename T>
wami::Tensor<T> randn(std::vector<int> shape, wami::Rng& rng, double stddev = 1.0) {
  wami::Tensor<T> t(std::move(shape));
  for (auto& v : t.data) v = static_cast<T>(rng.normal(0.0, stddev));
  return t;
}

template <typename T>
wami::Tensor<T> positive(std::vector<int> shape, wami::Rng& rng, double floor = 0.1) {
  wami::Tensor<T> t(std::move(shape));
  for (auto& v : t.data) v = static_cast<T>(std::abs(rng.normal(0.0, 1.0)) + floor);
  return t;
}

template <typename T>
class InMemoryDataset : public wami::Dataset<T> {
 public:
  explicit InMemoryDataset(std::vector<wami::Sample<T>> samples) : samples_(std::move(samples)) {}
  std::size_t size() const override { return samples_.size(); }
  void fetch(std::size_t idx, wami::Sample<T>& out) const override { out = samples_[idx]; }

 private:
  std::vector<wami::Sample<T>> samples_;
};

}  // namespace testutil
