#include "wami/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace wami {

namespace {

constexpr char kMagic[8] = {'W', 'A', 'M', 'I', 'C', 'K', 'P', '1'};

template <typename T>
const char* dtype_name();
template <>
const char* dtype_name<float>() {
  return "f32";
}
template <>
const char* dtype_name<double>() {
  return "f64";
}

template <typename T>
void save_impl(const std::string& path,
               const std::vector<std::pair<std::string, const Tensor<T>*>>& tensors,
               const nlohmann::json& meta) {
  nlohmann::json header;
  header["format_version"] = 1;
  header["dtype"] = dtype_name<T>();
  header["meta"] = meta;
  std::uint64_t offset = 0;
  nlohmann::json list = nlohmann::json::array();
  for (const auto& [name, t] : tensors) {
    const std::uint64_t nbytes = t->size() * sizeof(T);
    list.push_back({{"name", name}, {"shape", t->shape}, {"offset", offset}, {"nbytes", nbytes}});
    offset += nbytes;
  }
  header["tensors"] = list;
  const std::string hs = header.dump();

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  f.write(kMagic, 8);
  const std::uint64_t hlen = hs.size();
  f.write(reinterpret_cast<const char*>(&hlen), 8);
  f.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  for (const auto& [name, t] : tensors) {
    (void)name;
    f.write(reinterpret_cast<const char*>(t->ptr()), static_cast<std::streamsize>(t->size() * sizeof(T)));
  }
  if (!f) throw std::runtime_error("checkpoint write failed: " + path);
}

}  // namespace

void save_checkpoint_f32(const std::string& path,
                         const std::vector<std::pair<std::string, const Tensor<float>*>>& tensors,
                         const nlohmann::json& meta) {
  save_impl(path, tensors, meta);
}

void save_checkpoint_f64(const std::string& path,
                         const std::vector<std::pair<std::string, const Tensor<double>*>>& tensors,
                         const nlohmann::json& meta) {
  save_impl(path, tensors, meta);
}

template <typename T>
std::map<std::string, Tensor<T>> load_checkpoint(const std::string& path, nlohmann::json* meta_out) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, kMagic, 8) != 0) {
    throw std::runtime_error("not a checkpoint file (bad magic): " + path);
  }
  std::uint64_t hlen = 0;
  f.read(reinterpret_cast<char*>(&hlen), 8);
  std::string hs(hlen, '\0');
  f.read(hs.data(), static_cast<std::streamsize>(hlen));
  if (!f) throw std::runtime_error("truncated checkpoint header: " + path);
  const nlohmann::json header = nlohmann::json::parse(hs);
  if (header.at("dtype").get<std::string>() != dtype_name<T>()) {
    throw std::runtime_error("checkpoint dtype is " + header.at("dtype").get<std::string>() +
                             ", expected " + dtype_name<T>() + ": " + path);
  }
  if (meta_out != nullptr) *meta_out = header.value("meta", nlohmann::json::object());

  const std::uint64_t data_start = 16 + hlen;
  std::map<std::string, Tensor<T>> out;
  for (const auto& e : header.at("tensors")) {
    const std::string name = e.at("name").get<std::string>();
    const std::vector<int> shape = e.at("shape").get<std::vector<int>>();
    Tensor<T> t(shape);
    const std::uint64_t nbytes = e.at("nbytes").get<std::uint64_t>();
    if (nbytes != t.size() * sizeof(T)) {
      throw std::runtime_error("checkpoint tensor " + name + " size mismatch");
    }
    f.seekg(static_cast<std::streamoff>(data_start + e.at("offset").get<std::uint64_t>()));
    f.read(reinterpret_cast<char*>(t.ptr()), static_cast<std::streamsize>(nbytes));
    if (!f) throw std::runtime_error("truncated checkpoint data for tensor " + name);
    out.emplace(name, std::move(t));
  }
  return out;
}

template std::map<std::string, Tensor<float>> load_checkpoint<float>(const std::string&, nlohmann::json*);
template std::map<std::string, Tensor<double>> load_checkpoint<double>(const std::string&, nlohmann::json*);

}  // namespace wami
