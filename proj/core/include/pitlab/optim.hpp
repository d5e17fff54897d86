// Copyright (c) 2026, pitlab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "pitlab/tensor.hpp"

namespace pitlab {

struct OptimConfig {
  double lr0 = 3e-5;
  double beta1 = 0.9;
  double beta2 = 0.95;
  double weight_decay = 0.1;
  double eps = 1e-8;
  /// Schedule length in optimizer steps.
  std::size_t total_steps = 1;
  /// Final learning rate as a fraction of lr0.
  double final_fraction = 0.1;
  /// Global gradient-norm clip; 0 disables.
  double clip_norm = 0.0;

  void validate() const;
  friend bool operator==(const OptimConfig&, const OptimConfig&) = default;
};

/// Cosine decay from lr0 to final_fraction * lr0 over [0, total_steps],
/// without warm-up.
double lr_at(std::size_t step, const OptimConfig& config);

template <Real T>
struct OptimState {
  std::vector<Tensor<T>> m;
  std::vector<Tensor<T>> v;
  std::uint64_t step = 0;

  friend bool operator==(const OptimState&, const OptimState&) = default;
};

/// One AdamW update with bias correction and decoupled weight decay (only on
/// parameters with decay set). Fails with a numerical error naming the step
/// when any gradient is NaN or infinite; parameters are left untouched then.
template <Real T>
void adamw_step(std::vector<Parameter<T>>& params, OptimState<T>& state, const OptimConfig& config,
                double lr);

}  // namespace pitlab
