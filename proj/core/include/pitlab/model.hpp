// Copyright (c) 2026, pitlab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pitlab/ops.hpp"
#include "pitlab/tape.hpp"
#include "pitlab/tensor.hpp"
#include "pitlab/tokenizer.hpp"

namespace pitlab {

struct ModelConfig {
  std::size_t layers = 4;
  std::size_t heads = 8;
  std::size_t dim = 256;
  /// Feed-forward width; 0 means 4 * dim.
  std::size_t ff = 0;
  std::size_t context = 256;
  std::size_t vocab_size = 0;
  std::uint64_t seed = 0;

  std::size_t ff_dim() const { return ff == 0 ? 4 * dim : ff; }
  /// Throws a usage error describing the first violated constraint.
  void validate() const;
  /// V*D + C*D + L*(4D^2 + 2DF + 9D + F) + 2D
  std::size_t parameter_count() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Several sequences concatenated row-wise. Positions restart at 0 for every
/// segment and attention never crosses a segment boundary.
struct PackedBatch {
  std::vector<TokenId> tokens;
  std::vector<TokenId> positions;
  std::vector<ops::Segment> segments;

  static PackedBatch pack(std::span<const TokenSequence> sequences);
  std::size_t rows() const { return tokens.size(); }
};

/// Pre-LN decoder-only transformer with learned positions and an output head
/// tied to the token embedding.
template <Real T>
class Model {
 public:
  explicit Model(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  std::vector<Parameter<T>>& parameters() { return params_; }
  const std::vector<Parameter<T>>& parameters() const { return params_; }
  Parameter<T>& parameter(const std::string& name);
  const Parameter<T>& parameter(const std::string& name) const;
  std::size_t parameter_count() const;
  void zero_grad();

  /// Records the network on `tape` and returns logits for the rows listed in
  /// `rows` (all rows when empty). Gradients flow into Parameter::grad.
  Var forward(Tape<T>& tape, const PackedBatch& batch, std::span<const std::size_t> rows = {});
  /// Same graph with parameters entering the tape as constants.
  Var forward_inference(Tape<T>& tape, const PackedBatch& batch,
                        std::span<const std::size_t> rows = {}) const;

  /// [len, vocab] logits of one sequence.
  Tensor<T> logits(const TokenSequence& tokens) const;

 private:
  struct Layer {
    std::size_t ln1_g, ln1_b, w_qkv, b_qkv, w_o, b_o, ln2_g, ln2_b, w_fc1, b_fc1, w_fc2, b_fc2;
  };

  std::size_t add_param(std::string name, Shape shape, bool decay);
  template <typename Leaf>
  Var graph(Tape<T>& tape, const PackedBatch& batch, std::span<const std::size_t> rows,
            Leaf&& leaf) const;

  ModelConfig config_;
  std::vector<Parameter<T>> params_;
  std::size_t tok_emb_ = 0, pos_emb_ = 0, lnf_g_ = 0, lnf_b_ = 0;
  std::vector<Layer> layers_;
};

struct Decoded {
  TokenSequence tokens;  // continuation, without the stop token
  bool stopped = false;  // ended on a stop token or newline
};

/// Greedy decoding of several prompts at once. Ties go to the lowest id.
/// Decoding ends at a stop token, the newline token, `max_new` tokens, or
/// the context limit.
template <Real T>
std::vector<Decoded> greedy_decode(const Model<T>& model, std::span<const TokenSequence> prefixes,
                                   std::size_t max_new, std::span<const TokenId> stop = {},
                                   std::size_t batch_size = 64);

template <Real T>
Decoded greedy_decode(const Model<T>& model, const TokenSequence& prefix, std::size_t max_new,
                      std::span<const TokenId> stop = {});

}  // namespace pitlab
