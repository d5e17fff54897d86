// Copyright (c) 2026, pitlab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "pitlab/tape.hpp"
#include "pitlab/tensor.hpp"

/// Differentiable operations. Every op validates shapes (numerical error
/// naming both shapes on mismatch) and records a backward closure.
namespace pitlab::ops {

/// A contiguous run of rows forming one sequence inside a packed batch.
struct Segment {
  std::size_t offset = 0;
  std::size_t length = 0;
};

/// [m,k] x [k,n] -> [m,n]
template <Real T> Var matmul(Tape<T>& tape, Var a, Var b);
/// a * b^T: [m,k] x [n,k] -> [m,n]
template <Real T> Var matmul_nt(Tape<T>& tape, Var a, Var b);
/// Elementwise sum; a rank-1 `b` of length cols(a) is broadcast over rows.
template <Real T> Var add(Tape<T>& tape, Var a, Var b);
template <Real T> Var mul(Tape<T>& tape, Var a, Var b);
template <Real T> Var scale(Tape<T>& tape, Var a, T factor);
template <Real T> Var sum(Tape<T>& tape, Var a);
/// Row-wise softmax with max subtraction.
template <Real T> Var softmax(Tape<T>& tape, Var a);
template <Real T> Var layer_norm(Tape<T>& tape, Var x, Var gain, Var bias, T eps = T(1e-5));
/// tanh approximation of GELU.
template <Real T> Var gelu(Tape<T>& tape, Var x);
template <Real T> Var embedding_lookup(Tape<T>& tape, Var table, std::span<const std::int32_t> ids);
template <Real T> Var gather_rows(Tape<T>& tape, Var x, std::span<const std::size_t> rows);

/// Value written into masked (future) positions of attention scores.
template <Real T> constexpr T masked_score = T(-1e9);

/// scale * q k^T with entries above the diagonal replaced by masked_score.
template <Real T> Var causal_masked_attention_scores(Tape<T>& tape, Var q, Var k, T scale);

/// Multi-head causal self-attention over a packed [rows, 3*dim] q|k|v
/// projection. Attention never crosses segment boundaries.
template <Real T>
Var causal_self_attention(Tape<T>& tape, Var qkv, std::size_t heads,
                          std::span<const Segment> segments);

/// sum_t w_t * -log softmax(logits_t)[target_t] / sum_t w_t.
template <Real T>
Var cross_entropy_from_logits(Tape<T>& tape, Var logits, std::span<const std::int32_t> targets,
                              std::span<const T> weights);

}  // namespace pitlab::ops
