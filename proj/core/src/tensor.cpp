// Copyright (c) 2026, pitlab authors
// SPDX-License-Identifier: Apache-2.0

#include "pitlab/tensor.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "json.hpp"

namespace pitlab {
namespace {

constexpr char kMagic[8] = {'P', 'L', 'T', 'D', 'U', 'M', 'P', '1'};

template <typename U>
void byteswap_in_place(U* data, std::size_t n) {
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < n; ++i) {
      auto* b = reinterpret_cast<unsigned char*>(data + i);
      std::reverse(b, b + sizeof(U));
    }
  } else {
    (void)data;
    (void)n;
  }
}

void write_u64(std::ostream& out, std::uint64_t v) {
  byteswap_in_place(&v, 1);
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint64_t read_u64(std::istream& in, const std::filesystem::path& path) {
  std::uint64_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v))
    fail(ErrorKind::data, path.string() + ": truncated tensor dump");
  byteswap_in_place(&v, 1);
  return v;
}

template <Real T>
constexpr const char* precision_name() {
  return std::same_as<T, float> ? "f32" : "f64";
}

}  // namespace

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

template <Real T>
void write_tensors(const std::filesystem::path& path, const std::vector<NamedTensor<T>>& tensors) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::data, "cannot write " + path.string());
  out.write(kMagic, sizeof kMagic);
  write_u64(out, tensors.size());
  for (const auto& nt : tensors) {
    nlohmann::ordered_json h;
    h["name"] = nt.name;
    h["shape"] = nt.tensor.shape();
    h["precision"] = precision_name<T>();
    h["byte_order"] = "little";
    const std::string header = h.dump();
    write_u64(out, header.size());
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    std::vector<T> payload(nt.tensor.values().begin(), nt.tensor.values().end());
    byteswap_in_place(payload.data(), payload.size());
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size() * sizeof(T)));
  }
  if (!out) fail(ErrorKind::data, "failed writing " + path.string());
}

template <Real T>
std::vector<NamedTensor<T>> read_tensors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::data, "cannot open " + path.string());
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    fail(ErrorKind::data, path.string() + ": not a tensor dump");
  const std::uint64_t count = read_u64(in, path);
  std::vector<NamedTensor<T>> out;
  for (std::uint64_t r = 0; r < count; ++r) {
    const std::uint64_t len = read_u64(in, path);
    if (len > (1u << 20)) fail(ErrorKind::data, path.string() + ": implausible header length");
    std::string header(len, '\0');
    if (!in.read(header.data(), static_cast<std::streamsize>(len)))
      fail(ErrorKind::data, path.string() + ": truncated tensor dump");
    nlohmann::json h;
    Shape shape;
    std::string name, precision, order;
    try {
      h = nlohmann::json::parse(header);
      name = h.at("name").get<std::string>();
      shape = h.at("shape").get<Shape>();
      precision = h.at("precision").get<std::string>();
      order = h.at("byte_order").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::data, path.string() + ": bad tensor header: " + e.what());
    }
    if (order != "little") fail(ErrorKind::data, path.string() + ": unsupported byte order " + order);
    if (precision != precision_name<T>())
      fail(ErrorKind::data, path.string() + ": tensor '" + name + "' has precision " + precision +
                                ", expected " + precision_name<T>());
    std::vector<T> data(shape_size(shape));
    if (!in.read(reinterpret_cast<char*>(data.data()),
                 static_cast<std::streamsize>(data.size() * sizeof(T))))
      fail(ErrorKind::data, path.string() + ": truncated payload for '" + name + "'");
    byteswap_in_place(data.data(), data.size());
    out.push_back({std::move(name), Tensor<T>(std::move(shape), std::move(data))});
  }
  return out;
}

template void write_tensors<float>(const std::filesystem::path&, const std::vector<NamedTensor<float>>&);
template void write_tensors<double>(const std::filesystem::path&, const std::vector<NamedTensor<double>>&);
template std::vector<NamedTensor<float>> read_tensors<float>(const std::filesystem::path&);
template std::vector<NamedTensor<double>> read_tensors<double>(const std::filesystem::path&);

}  // namespace pitlab
