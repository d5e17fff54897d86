// Copyright (c) 2026, pitlab authors
// SPDX-License-Identifier: Apache-2.0

#include "pitlab/model.hpp"

#include <algorithm>
#include <cmath>

#include "pitlab/random.hpp"

namespace pitlab {

void ModelConfig::validate() const {
  auto bad = [](const std::string& what) { fail(ErrorKind::usage, "invalid model config: " + what); };
  if (layers == 0) bad("layers must be >= 1");
  if (heads == 0) bad("heads must be >= 1");
  if (dim == 0) bad("dim must be >= 1");
  if (dim % heads != 0)
    bad("dim " + std::to_string(dim) + " is not divisible by heads " + std::to_string(heads));
  if (context == 0) bad("context must be >= 1");
  if (vocab_size <= Vocab::reserved_count) bad("vocab_size must exceed the reserved token block");
}

std::size_t ModelConfig::parameter_count() const {
  const std::size_t d = dim, f = ff_dim();
  return vocab_size * d + context * d + layers * (4 * d * d + 2 * d * f + 9 * d + f) + 2 * d;
}

PackedBatch PackedBatch::pack(std::span<const TokenSequence> sequences) {
  PackedBatch b;
  std::size_t total = 0;
  for (const auto& s : sequences) total += s.size();
  b.tokens.reserve(total);
  b.positions.reserve(total);
  for (const auto& s : sequences) {
    if (s.empty()) fail(ErrorKind::usage, "cannot pack an empty sequence");
    b.segments.push_back({b.tokens.size(), s.size()});
    for (std::size_t i = 0; i < s.size(); ++i) {
      b.tokens.push_back(s[i]);
      b.positions.push_back(static_cast<TokenId>(i));
    }
  }
  return b;
}

template <Real T>
Model<T>::Model(const ModelConfig& config) : config_(config) {
  config_.validate();
  const std::size_t d = config_.dim, f = config_.ff_dim();
  tok_emb_ = add_param("tok_emb", {config_.vocab_size, d}, false);
  pos_emb_ = add_param("pos_emb", {config_.context, d}, false);
  for (std::size_t l = 0; l < config_.layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    Layer L{};
    L.ln1_g = add_param(p + "ln1.gain", {d}, false);
    L.ln1_b = add_param(p + "ln1.bias", {d}, false);
    L.w_qkv = add_param(p + "attn.w_qkv", {d, 3 * d}, true);
    L.b_qkv = add_param(p + "attn.b_qkv", {3 * d}, false);
    L.w_o = add_param(p + "attn.w_o", {d, d}, true);
    L.b_o = add_param(p + "attn.b_o", {d}, false);
    L.ln2_g = add_param(p + "ln2.gain", {d}, false);
    L.ln2_b = add_param(p + "ln2.bias", {d}, false);
    L.w_fc1 = add_param(p + "mlp.w_fc1", {d, f}, true);
    L.b_fc1 = add_param(p + "mlp.b_fc1", {f}, false);
    L.w_fc2 = add_param(p + "mlp.w_fc2", {f, d}, true);
    L.b_fc2 = add_param(p + "mlp.b_fc2", {d}, false);
    layers_.push_back(L);
  }
  lnf_g_ = add_param("lnf.gain", {d}, false);
  lnf_b_ = add_param("lnf.bias", {d}, false);

  Rng rng(config_.seed);
  const double residual_std = 0.02 / std::sqrt(2.0 * static_cast<double>(config_.layers));
  auto normal = [&](std::size_t idx, double stddev) {
    for (auto& x : params_[idx].value.values()) x = static_cast<T>(rng.normal(0.0, stddev));
  };
  auto ones = [&](std::size_t idx) { params_[idx].value.fill(T(1)); };
  normal(tok_emb_, 0.02);
  normal(pos_emb_, 0.02);
  for (const auto& L : layers_) {
    ones(L.ln1_g);
    ones(L.ln2_g);
    normal(L.w_qkv, 0.02);
    normal(L.w_o, residual_std);
    normal(L.w_fc1, 0.02);
    normal(L.w_fc2, residual_std);
  }
  ones(lnf_g_);
}

template <Real T>
std::size_t Model<T>::add_param(std::string name, Shape shape, bool decay) {
  Parameter<T> p;
  p.name = std::move(name);
  p.value = Tensor<T>(std::move(shape));
  p.decay = decay;
  params_.push_back(std::move(p));
  return params_.size() - 1;
}

template <Real T>
Parameter<T>& Model<T>::parameter(const std::string& name) {
  for (auto& p : params_)
    if (p.name == name) return p;
  fail(ErrorKind::usage, "unknown parameter '" + name + "'");
}

template <Real T>
const Parameter<T>& Model<T>::parameter(const std::string& name) const {
  return const_cast<Model*>(this)->parameter(name);
}

template <Real T>
std::size_t Model<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

template <Real T>
void Model<T>::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

template <Real T>
template <typename Leaf>
Var Model<T>::graph(Tape<T>& tape, const PackedBatch& batch, std::span<const std::size_t> rows,
                    Leaf&& leaf) const {
  if (batch.rows() == 0) fail(ErrorKind::usage, "forward on an empty batch");
  for (const auto& s : batch.segments)
    if (s.length > config_.context)
      fail(ErrorKind::usage, "sequence of " + std::to_string(s.length) +
                                 " tokens exceeds the context length " +
                                 std::to_string(config_.context));
  for (TokenId t : batch.tokens)
    if (t < 0 || static_cast<std::size_t>(t) >= config_.vocab_size)
      fail(ErrorKind::usage, "token id " + std::to_string(t) + " outside the vocabulary");

  const Var tok = leaf(tok_emb_);
  Var x = ops::add(tape, ops::embedding_lookup(tape, tok, batch.tokens),
                   ops::embedding_lookup(tape, leaf(pos_emb_), batch.positions));
  for (const auto& L : layers_) {
    Var h = ops::layer_norm(tape, x, leaf(L.ln1_g), leaf(L.ln1_b));
    Var qkv = ops::add(tape, ops::matmul(tape, h, leaf(L.w_qkv)), leaf(L.b_qkv));
    Var a = ops::causal_self_attention(tape, qkv, config_.heads, std::span(batch.segments));
    x = ops::add(tape, x, ops::add(tape, ops::matmul(tape, a, leaf(L.w_o)), leaf(L.b_o)));
    Var h2 = ops::layer_norm(tape, x, leaf(L.ln2_g), leaf(L.ln2_b));
    Var f = ops::gelu(tape, ops::add(tape, ops::matmul(tape, h2, leaf(L.w_fc1)), leaf(L.b_fc1)));
    x = ops::add(tape, x, ops::add(tape, ops::matmul(tape, f, leaf(L.w_fc2)), leaf(L.b_fc2)));
  }
  x = ops::layer_norm(tape, x, leaf(lnf_g_), leaf(lnf_b_));
  if (!rows.empty()) x = ops::gather_rows(tape, x, rows);
  return ops::matmul_nt(tape, x, tok);
}

template <Real T>
Var Model<T>::forward(Tape<T>& tape, const PackedBatch& batch, std::span<const std::size_t> rows) {
  std::vector<Var> leaves(params_.size());
  std::vector<bool> made(params_.size(), false);
  return graph(tape, batch, rows, [&](std::size_t i) {
    if (!made[i]) {
      leaves[i] = tape.parameter(params_[i]);
      made[i] = true;
    }
    return leaves[i];
  });
}

template <Real T>
Var Model<T>::forward_inference(Tape<T>& tape, const PackedBatch& batch,
                                std::span<const std::size_t> rows) const {
  std::vector<Var> leaves(params_.size());
  std::vector<bool> made(params_.size(), false);
  return graph(tape, batch, rows, [&](std::size_t i) {
    if (!made[i]) {
      leaves[i] = tape.reference(params_[i].value);
      made[i] = true;
    }
    return leaves[i];
  });
}

template <Real T>
Tensor<T> Model<T>::logits(const TokenSequence& tokens) const {
  Tape<T> tape;
  const TokenSequence* one = &tokens;
  const PackedBatch batch = PackedBatch::pack(std::span(one, 1));
  return tape.value(forward_inference(tape, batch));
}

template <Real T>
std::vector<Decoded> greedy_decode(const Model<T>& model, std::span<const TokenSequence> prefixes,
                                   std::size_t max_new, std::span<const TokenId> stop,
                                   std::size_t batch_size) {
  const std::size_t ctx = model.config().context;
  for (const auto& p : prefixes) {
    if (p.empty()) fail(ErrorKind::usage, "greedy_decode needs a non-empty prefix");
    if (p.size() > ctx)
      fail(ErrorKind::usage, "prefix of " + std::to_string(p.size()) +
                                 " tokens exceeds the context length " + std::to_string(ctx));
  }
  auto is_stop = [&](TokenId t) {
    return t == Vocab::newline || std::find(stop.begin(), stop.end(), t) != stop.end();
  };

  std::vector<Decoded> out(prefixes.size());
  std::vector<TokenSequence> seqs(prefixes.begin(), prefixes.end());
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < seqs.size(); ++i)
    if (max_new > 0 && seqs[i].size() < ctx) active.push_back(i);

  Tape<T> tape;
  while (!active.empty()) {
    std::vector<std::size_t> still;
    for (std::size_t start = 0; start < active.size(); start += std::max<std::size_t>(batch_size, 1)) {
      const std::size_t end = std::min(active.size(), start + std::max<std::size_t>(batch_size, 1));
      std::vector<TokenSequence> chunk;
      for (std::size_t i = start; i < end; ++i) chunk.push_back(seqs[active[i]]);
      const PackedBatch batch = PackedBatch::pack(chunk);
      std::vector<std::size_t> last;
      for (const auto& s : batch.segments) last.push_back(s.offset + s.length - 1);
      tape.reset();
      const Tensor<T>& logits = tape.value(model.forward_inference(tape, batch, last));
      const std::size_t v = logits.cols();
      for (std::size_t r = 0; r < last.size(); ++r) {
        const std::size_t idx = active[start + r];
        const T* row = logits.data() + r * v;
        const TokenId next = static_cast<TokenId>(std::max_element(row, row + v) - row);
        if (is_stop(next)) {
          out[idx].stopped = true;
          continue;
        }
        out[idx].tokens.push_back(next);
        seqs[idx].push_back(next);
        if (out[idx].tokens.size() < max_new && seqs[idx].size() < ctx) still.push_back(idx);
      }
    }
    active = std::move(still);
  }
  return out;
}

template <Real T>
Decoded greedy_decode(const Model<T>& model, const TokenSequence& prefix, std::size_t max_new,
                      std::span<const TokenId> stop) {
  return greedy_decode(model, std::span(&prefix, 1), max_new, stop, 1).front();
}

template class Model<float>;
template class Model<double>;
template std::vector<Decoded> greedy_decode<float>(const Model<float>&, std::span<const TokenSequence>,
                                                   std::size_t, std::span<const TokenId>, std::size_t);
template std::vector<Decoded> greedy_decode<double>(const Model<double>&, std::span<const TokenSequence>,
                                                    std::size_t, std::span<const TokenId>, std::size_t);
template Decoded greedy_decode<float>(const Model<float>&, const TokenSequence&, std::size_t,
                                      std::span<const TokenId>);
template Decoded greedy_decode<double>(const Model<double>&, const TokenSequence&, std::size_t,
                                       std::span<const TokenId>);

}  // namespace pitlab
