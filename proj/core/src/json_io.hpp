// Copyright (c) 2026, pitlab authors
// SPDX-License-Identifier: Apache-2.0

// JSON conversions shared by the implementation files. Not installed.

#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "pitlab/error.hpp"
#include "pitlab/model.hpp"
#include "pitlab/optim.hpp"

namespace pitlab::detail {

using ojson = nlohmann::ordered_json;

inline ojson to_json(const ModelConfig& c) {
  ojson j;
  j["layers"] = c.layers;
  j["heads"] = c.heads;
  j["dim"] = c.dim;
  j["ff"] = c.ff_dim();
  j["context"] = c.context;
  j["vocab_size"] = c.vocab_size;
  j["seed"] = c.seed;
  return j;
}

/// Reads a JSON value, reporting a data error that names the key.
template <typename V>
V get_or(const ojson& j, const char* key, V fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  try {
    return it->get<V>();
  } catch (const ojson::exception&) {
    fail(ErrorKind::data, std::string("field '") + key + "' has the wrong type");
  }
}

inline ModelConfig model_config_from_json(const ojson& j) {
  ModelConfig c;
  c.layers = get_or(j, "layers", c.layers);
  c.heads = get_or(j, "heads", c.heads);
  c.dim = get_or(j, "dim", c.dim);
  c.ff = get_or(j, "ff", c.ff);
  c.context = get_or(j, "context", c.context);
  c.vocab_size = get_or(j, "vocab_size", c.vocab_size);
  c.seed = get_or(j, "seed", c.seed);
  return c;
}

inline ojson read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::data, "cannot open " + path.string());
  try {
    return ojson::parse(in);
  } catch (const ojson::exception& e) {
    fail(ErrorKind::data, path.string() + ": " + e.what());
  }
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::data, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorKind::data, "failed writing " + path.string());
}

}  // namespace pitlab::detail
