// Copyright (c) 2026, pitlab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "pitlab/model.hpp"
#include "pitlab/optim.hpp"
#include "pitlab/tokenizer.hpp"

namespace pitlab {

/// A checkpoint directory holds manifest.json (config, vocab hash, step,
/// free-form string metadata), params.bin, vocab.json and, when saved with
/// optimizer state, optim.bin.
template <Real T>
struct Checkpoint {
  Model<T> model;
  Vocab vocab;
  std::optional<OptimState<T>> optim;
  std::uint64_t step = 0;
  std::map<std::string, std::string> meta;
};

template <Real T>
void save_checkpoint(const std::filesystem::path& dir, const Model<T>& model, const Vocab& vocab,
                     const OptimState<T>* optim = nullptr, std::uint64_t step = 0,
                     const std::map<std::string, std::string>& meta = {});

template <Real T>
Checkpoint<T> load_checkpoint(const std::filesystem::path& dir);

/// Reads only manifest.json metadata without touching the tensors.
std::map<std::string, std::string> read_checkpoint_meta(const std::filesystem::path& dir);

bool is_checkpoint(const std::filesystem::path& dir);

}  // namespace pitlab
