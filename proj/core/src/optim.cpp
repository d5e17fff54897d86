// Copyright (c) 2026, pitlab authors
// SPDX-License-Identifier: Apache-2.0

#include "pitlab/optim.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace pitlab {

void OptimConfig::validate() const {
  auto bad = [](const std::string& what) { fail(ErrorKind::usage, "invalid optimizer config: " + what); };
  if (!(lr0 > 0)) bad("lr0 must be positive");
  if (!(beta1 >= 0 && beta1 < 1)) bad("beta1 must lie in [0, 1)");
  if (!(beta2 >= 0 && beta2 < 1)) bad("beta2 must lie in [0, 1)");
  if (!(weight_decay >= 0)) bad("weight_decay must be non-negative");
  if (!(eps > 0)) bad("eps must be positive");
  if (total_steps < 1) bad("total_steps must be >= 1");
  if (!(final_fraction >= 0 && final_fraction <= 1)) bad("final_fraction must lie in [0, 1]");
  if (!(clip_norm >= 0)) bad("clip_norm must be non-negative");
}

double lr_at(std::size_t step, const OptimConfig& config) {
  if (step > config.total_steps)
    fail(ErrorKind::usage, "lr_at: step " + std::to_string(step) + " beyond schedule length " +
                               std::to_string(config.total_steps));
  const double lr_f = config.final_fraction * config.lr0;
  if (step == 0) return config.lr0;
  if (step == config.total_steps) return lr_f;
  const double frac = static_cast<double>(step) / static_cast<double>(config.total_steps);
  return lr_f + (config.lr0 - lr_f) * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
}

template <Real T>
void adamw_step(std::vector<Parameter<T>>& params, OptimState<T>& state, const OptimConfig& config,
                double lr) {
  if (!(lr >= 0)) fail(ErrorKind::usage, "adamw_step: negative learning rate");
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.value.shape());
      state.v.emplace_back(p.value.shape());
    }
  }
  if (state.m.size() != params.size())
    fail(ErrorKind::state, "optimizer state holds " + std::to_string(state.m.size()) +
                               " moments for " + std::to_string(params.size()) + " parameters");
  double norm2 = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& p = params[i];
    if (state.m[i].shape() != p.value.shape())
      fail(ErrorKind::state, "optimizer moment shape mismatch for '" + p.name + "'");
    if (p.grad.empty()) continue;
    if (p.grad.shape() != p.value.shape())
      fail(ErrorKind::numerical, "gradient shape mismatch for '" + p.name + "'");
    for (T g : p.grad.values()) {
      if (!std::isfinite(g))
        fail(ErrorKind::numerical, "non-finite gradient in '" + p.name + "' at step " +
                                       std::to_string(state.step + 1));
      norm2 += static_cast<double>(g) * static_cast<double>(g);
    }
  }
  double clip = 1.0;
  if (config.clip_norm > 0 && std::sqrt(norm2) > config.clip_norm) clip = config.clip_norm / std::sqrt(norm2);

  state.step += 1;
  const double b1 = config.beta1, b2 = config.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    T* theta = p.value.data();
    T* m = state.m[i].data();
    T* v = state.v[i].data();
    const T* g = p.grad.empty() ? nullptr : p.grad.data();
    const double decay = p.decay ? config.weight_decay : 0.0;
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      const double gk = g ? static_cast<double>(g[k]) * clip : 0.0;
      const double mk = b1 * m[k] + (1.0 - b1) * gk;
      const double vk = b2 * v[k] + (1.0 - b2) * gk * gk;
      m[k] = static_cast<T>(mk);
      v[k] = static_cast<T>(vk);
      const double mhat = mk / c1, vhat = vk / c2;
      const double th = theta[k];
      theta[k] = static_cast<T>(th - lr * mhat / (std::sqrt(vhat) + config.eps) - lr * decay * th);
    }
  }
}

template void adamw_step<float>(std::vector<Parameter<float>>&, OptimState<float>&, const OptimConfig&, double);
template void adamw_step<double>(std::vector<Parameter<double>>&, OptimState<double>&, const OptimConfig&, double);

}  // namespace pitlab
