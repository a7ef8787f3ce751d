#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "wami/tensor.hpp"

namespace wami {

// Flat binary container:
//   bytes 0..7   magic "WAMICKP1"
//   bytes 8..15  little-endian u64 header length
//   header       JSON: dtype, tensor names/shapes/offsets/nbytes, free-form meta
//   data         raw little-endian tensor values, at offsets relative to the
//                end of the header
void save_checkpoint_f32(const std::string& path,
                         const std::vector<std::pair<std::string, const Tensor<float>*>>& tensors,
                         const nlohmann::json& meta = {});
void save_checkpoint_f64(const std::string& path,
                         const std::vector<std::pair<std::string, const Tensor<double>*>>& tensors,
                         const nlohmann::json& meta = {});

template <typename T>
std::map<std::string, Tensor<T>> load_checkpoint(const std::string& path,
                                                 nlohmann::json* meta_out = nullptr);

extern template std::map<std::string, Tensor<float>> load_checkpoint<float>(const std::string&,
                                                                            nlohmann::json*);
extern template std::map<std::string, Tensor<double>> load_checkpoint<double>(const std::string&,
                                                                              nlohmann::json*);

}  // namespace wami
