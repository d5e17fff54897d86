// Copyright (c) 2026, pitlab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "pitlab/ops.hpp"
#include "pitlab/random.hpp"
#include "pitlab/tape.hpp"
#include "pitlab/tensor.hpp"

namespace pitlab::testing {

template <Real T>
Tensor<T> random_tensor(Rng& rng, Shape shape, double stddev = 1.0) {
  Tensor<T> t(std::move(shape));
  for (auto& x : t.values()) x = static_cast<T>(rng.normal(0.0, stddev));
  return t;
}

/// ||a - b|| / max(||a||, ||b||), with 0 when both vanish.
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double scale = std::sqrt(std::max(na, nb));
  return scale == 0 ? std::sqrt(diff) : std::sqrt(diff) / scale;
}

/// Builds an op graph from leaf inputs; returns any-shaped output.
template <Real T>
using GraphFn = std::function<Var(Tape<T>&, const std::vector<Var>&)>;

/// Worst relative error between tape gradients and central differences of
/// sum(out * R) for a fixed random R, over every input that `check` marks.
template <Real T>
double gradient_check(const std::vector<Tensor<T>>& inputs, const GraphFn<T>& build, Rng& rng, double h,
                      const std::vector<bool>& check = {}) {
  Tensor<T> probe;
  auto loss_of = [&](const std::vector<Tensor<T>>& xs, std::vector<Tensor<T>>* grads) {
    Tape<T> tape;
    std::vector<Var> vars;
    for (const auto& x : xs) vars.push_back(tape.leaf(x));
    Var out = build(tape, vars);
    if (probe.empty()) probe = random_tensor<T>(rng, tape.value(out).shape());
    Var loss = ops::sum(tape, ops::mul(tape, out, tape.constant(probe)));
    const double value = static_cast<double>(tape.value(loss).item());
    if (grads) {
      tape.backward(loss);
      for (const auto& v : vars) grads->push_back(tape.grad(v));
    }
    return value;
  };
  std::vector<Tensor<T>> analytic;
  loss_of(inputs, &analytic);
  double worst = 0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    if (!check.empty() && !check[k]) continue;
    std::vector<double> a, n;
    std::vector<Tensor<T>> xs = inputs;
    for (std::size_t i = 0; i < xs[k].size(); ++i) {
      const T saved = xs[k][i];
      xs[k][i] = saved + static_cast<T>(h);
      const double up = loss_of(xs, nullptr);
      xs[k][i] = saved - static_cast<T>(h);
      const double down = loss_of(xs, nullptr);
      xs[k][i] = saved;
      n.push_back((up - down) / (2 * h));
      a.push_back(static_cast<double>(analytic[k][i]));
    }
    worst = std::max(worst, relative_error(a, n));
  }
  return worst;
}

/// Fresh scratch directory under the system temp dir, removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("pitlab-test-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace pitlab::testing
