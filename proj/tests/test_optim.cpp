// Copyright (c) 2026, pitlab authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <limits>

#include "doctest.h"
#include "pitlab/optim.hpp"

using namespace pitlab;

namespace {

std::vector<Parameter<double>> scalar_param(double value, double grad, bool decay = true) {
  std::vector<Parameter<double>> p(1);
  p[0].name = "theta";
  p[0].value = Tensor<double>({1}, {value});
  p[0].grad = Tensor<double>({1}, {grad});
  p[0].decay = decay;
  return p;
}

}  // namespace

TEST_SUITE("optim") {

TEST_CASE("cosine schedule endpoints and midpoint") {
  OptimConfig c;
  c.lr0 = 3e-5;
  c.total_steps = 1000;
  CHECK(lr_at(0, c) == 3e-5);
  CHECK(lr_at(1000, c) == 0.1 * 3e-5);
  CHECK(lr_at(500, c) == doctest::Approx(1.65e-5).epsilon(1e-12));
  CHECK_THROWS_AS(lr_at(1001, c), Error);
  for (std::size_t t = 1; t < 1000; ++t) CHECK(lr_at(t, c) < lr_at(t - 1, c));
}

TEST_CASE("schedule over an odd step count stays exact at the ends") {
  OptimConfig c;
  c.lr0 = 5e-6;
  c.total_steps = 7;
  CHECK(lr_at(0, c) == 5e-6);
  CHECK(lr_at(7, c) == 0.1 * 5e-6);
}

TEST_CASE("config validation") {
  OptimConfig c;
  c.lr0 = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.beta1 = 1.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.total_steps = 0;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("first AdamW step from zero moves by lr") {
  OptimConfig c;
  c.weight_decay = 0;
  auto p = scalar_param(0.0, 1.0);
  OptimState<double> st;
  adamw_step(p, st, c, 1e-3);
  // m_hat = v_hat = 1, update = lr / (1 + eps).
  CHECK(std::abs(p[0].value[0] - (-1e-3 / (1 + 1e-8))) < 1e-9);
  CHECK(p[0].value[0] == doctest::Approx(-9.99999e-4).epsilon(1e-5));
  CHECK(st.step == 1);
}

TEST_CASE("zero gradient leaves the parameter alone without decay") {
  OptimConfig c;
  c.weight_decay = 0;
  auto p = scalar_param(0.75, 0.0);
  OptimState<double> st;
  adamw_step(p, st, c, 1e-3);
  CHECK(p[0].value[0] == 0.75);
}

TEST_CASE("decoupled decay alone") {
  OptimConfig c;
  c.weight_decay = 0.1;
  auto p = scalar_param(1.0, 0.0);
  OptimState<double> st;
  adamw_step(p, st, c, 1e-3);
  CHECK(std::abs(p[0].value[0] - 0.9999) < 1e-9);
  auto exempt = scalar_param(1.0, 0.0, false);
  OptimState<double> st2;
  adamw_step(exempt, st2, c, 1e-3);
  CHECK(exempt[0].value[0] == 1.0);
}

TEST_CASE("second step matches the hand-computed moments") {
  OptimConfig c;
  c.weight_decay = 0.1;
  auto p = scalar_param(0.5, 2.0);
  OptimState<double> st;
  const double lr = 1e-2;
  adamw_step(p, st, c, lr);
  p[0].grad[0] = -1.0;
  adamw_step(p, st, c, lr);
  // Replay by hand.
  double theta = 0.5, m = 0, v = 0;
  const double grads[2] = {2.0, -1.0};
  for (int t = 1; t <= 2; ++t) {
    const double g = grads[t - 1];
    m = 0.9 * m + 0.1 * g;
    v = 0.95 * v + 0.05 * g * g;
    const double mh = m / (1 - std::pow(0.9, t)), vh = v / (1 - std::pow(0.95, t));
    theta = theta - lr * mh / (std::sqrt(vh) + 1e-8) - lr * 0.1 * theta;
  }
  CHECK(std::abs(p[0].value[0] - theta) < 1e-12);
}

TEST_CASE("AdamW with the cosine schedule minimises a quadratic") {
  OptimConfig c;
  c.lr0 = 0.1;
  c.weight_decay = 0;
  c.total_steps = 200;
  auto p = scalar_param(3.0, 0.0);
  OptimState<double> st;
  const double initial = 0.5 * 3.0 * 3.0;
  for (std::size_t t = 0; t < 200; ++t) {
    p[0].grad[0] = p[0].value[0];  // d/dx of x^2 / 2
    adamw_step(p, st, c, lr_at(t, c));
  }
  const double final_loss = 0.5 * p[0].value[0] * p[0].value[0];
  CHECK(final_loss * 100 <= initial);
}

TEST_CASE("a non-finite gradient halts with the step index and keeps parameters") {
  OptimConfig c;
  auto p = scalar_param(1.0, std::numeric_limits<double>::quiet_NaN());
  OptimState<double> st;
  st.step = 41;
  st.m.push_back(Tensor<double>({1}));
  st.v.push_back(Tensor<double>({1}));
  try {
    adamw_step(p, st, c, 1e-3);
    FAIL("expected a numerical error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::numerical);
    CHECK(std::string(e.what()).find("theta") != std::string::npos);
    CHECK(std::string(e.what()).find("42") != std::string::npos);
  }
  CHECK(p[0].value[0] == 1.0);
}

}  // TEST_SUITE
