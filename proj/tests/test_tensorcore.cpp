// Copyright (c) 2026, pitlab authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <vector>

#include "doctest.h"
#include "pitlab/ops.hpp"
#include "support.hpp"

using namespace pitlab;
using pitlab::testing::gradient_check;
using pitlab::testing::random_tensor;

namespace {

constexpr int kTrials = 100;
constexpr double kTolDouble = 1e-6;

// Small random shape in [1, 8].
std::size_t small(Rng& rng) { return 1 + rng.index(8); }

// Runs `trials` seeded FD checks; returns the worst relative error.
template <typename Make>
double worst_over_trials(std::uint64_t salt, Make make) {
  double worst = 0;
  for (int t = 0; t < kTrials; ++t) {
    Rng rng(Rng::mix(salt, static_cast<std::uint64_t>(t)));
    worst = std::max(worst, make(rng));
  }
  return worst;
}

}  // namespace

TEST_SUITE("tensorcore") {

TEST_CASE("matmul gradient matches central differences") {
  const double worst = worst_over_trials(1, [](Rng& rng) {
    const auto m = small(rng), k = small(rng), n = small(rng);
    return gradient_check<double>({random_tensor<double>(rng, {m, k}), random_tensor<double>(rng, {k, n})},
                                  [](Tape<double>& t, const std::vector<Var>& v) { return ops::matmul(t, v[0], v[1]); },
                                  rng, 1e-5);
  });
  CHECK(worst < kTolDouble);
}

TEST_CASE("matmul_nt gradient matches central differences") {
  const double worst = worst_over_trials(2, [](Rng& rng) {
    const auto m = small(rng), k = small(rng), n = small(rng);
    return gradient_check<double>({random_tensor<double>(rng, {m, k}), random_tensor<double>(rng, {n, k})},
                                  [](Tape<double>& t, const std::vector<Var>& v) { return ops::matmul_nt(t, v[0], v[1]); },
                                  rng, 1e-5);
  });
  CHECK(worst < kTolDouble);
}

TEST_CASE("add gradient, same shape and row broadcast") {
  const double worst = worst_over_trials(3, [](Rng& rng) {
    const auto m = small(rng), n = small(rng);
    const bool broadcast = rng.index(2) == 1;
    const Shape bshape = broadcast ? Shape{n} : Shape{m, n};
    return gradient_check<double>({random_tensor<double>(rng, {m, n}), random_tensor<double>(rng, bshape)},
                                  [](Tape<double>& t, const std::vector<Var>& v) { return ops::add(t, v[0], v[1]); },
                                  rng, 1e-5);
  });
  CHECK(worst < kTolDouble);
}

TEST_CASE("mul, scale and sum gradients") {
  const double worst = worst_over_trials(4, [](Rng& rng) {
    const auto m = small(rng), n = small(rng);
    const double factor = rng.normal(0, 2);
    return gradient_check<double>(
        {random_tensor<double>(rng, {m, n}), random_tensor<double>(rng, {m, n})},
        [factor](Tape<double>& t, const std::vector<Var>& v) {
          return ops::scale(t, ops::mul(t, v[0], v[1]), factor);
        },
        rng, 1e-5);
  });
  CHECK(worst < kTolDouble);
  const double sum_worst = worst_over_trials(5, [](Rng& rng) {
    return gradient_check<double>({random_tensor<double>(rng, {small(rng), small(rng)})},
                                  [](Tape<double>& t, const std::vector<Var>& v) { return ops::sum(t, v[0]); }, rng,
                                  1e-5);
  });
  CHECK(sum_worst < kTolDouble);
}

TEST_CASE("softmax gradient and row sums") {
  const double worst = worst_over_trials(6, [](Rng& rng) {
    return gradient_check<double>({random_tensor<double>(rng, {small(rng), small(rng)}, 2.0)},
                                  [](Tape<double>& t, const std::vector<Var>& v) { return ops::softmax(t, v[0]); }, rng,
                                  1e-5);
  });
  CHECK(worst < kTolDouble);

  Rng rng(7);
  Tape<double> tape;
  const auto x = random_tensor<double>(rng, {6, 9}, 30.0);
  const auto& y = tape.value(ops::softmax(tape, tape.constant(x)));
  for (std::size_t r = 0; r < 6; ++r) {
    double s = 0;
    for (std::size_t c = 0; c < 9; ++c) s += y.at(r, c);
    CHECK(std::abs(s - 1.0) < 1e-6);
  }
}

TEST_CASE("softmax of zeros is uniform") {
  Tape<double> tape;
  const auto& y = tape.value(ops::softmax(tape, tape.constant(Tensor<double>({1, 3}))));
  for (std::size_t c = 0; c < 3; ++c) CHECK(y[c] == doctest::Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("layer_norm gradient") {
  // Width 2 is left out: its output is +-1 whatever x is, so the x-gradient
  // is O(eps) and central differences measure only roundoff.
  const double worst = worst_over_trials(8, [](Rng& rng) {
    const auto m = small(rng), n = 3 + rng.index(6);
    return gradient_check<double>(
        {random_tensor<double>(rng, {m, n}), random_tensor<double>(rng, {n}), random_tensor<double>(rng, {n})},
        [](Tape<double>& t, const std::vector<Var>& v) { return ops::layer_norm(t, v[0], v[1], v[2]); }, rng, 1e-5);
  });
  CHECK(worst < kTolDouble);
}

TEST_CASE("gelu gradient") {
  const double worst = worst_over_trials(9, [](Rng& rng) {
    return gradient_check<double>({random_tensor<double>(rng, {small(rng), small(rng)}, 2.0)},
                                  [](Tape<double>& t, const std::vector<Var>& v) { return ops::gelu(t, v[0]); }, rng,
                                  1e-5);
  });
  CHECK(worst < kTolDouble);
}

TEST_CASE("embedding_lookup and gather_rows gradients") {
  const double worst = worst_over_trials(10, [](Rng& rng) {
    const auto vocab = small(rng), dim = small(rng), len = small(rng);
    std::vector<std::int32_t> ids(len);
    for (auto& id : ids) id = static_cast<std::int32_t>(rng.index(vocab));
    return gradient_check<double>({random_tensor<double>(rng, {vocab, dim})},
                                  [ids](Tape<double>& t, const std::vector<Var>& v) {
                                    return ops::embedding_lookup(t, v[0], ids);
                                  },
                                  rng, 1e-5);
  });
  CHECK(worst < kTolDouble);
  const double gather = worst_over_trials(11, [](Rng& rng) {
    const auto m = small(rng), n = small(rng), k = small(rng);
    std::vector<std::size_t> rows(k);
    for (auto& r : rows) r = rng.index(m);
    return gradient_check<double>({random_tensor<double>(rng, {m, n})},
                                  [rows](Tape<double>& t, const std::vector<Var>& v) {
                                    return ops::gather_rows(t, v[0], rows);
                                  },
                                  rng, 1e-5);
  });
  CHECK(gather < kTolDouble);
}

TEST_CASE("causal_masked_attention_scores gradient and mask") {
  const double worst = worst_over_trials(12, [](Rng& rng) {
    const auto n = small(rng), d = small(rng);
    const double s = 1.0 / std::sqrt(static_cast<double>(d));
    return gradient_check<double>({random_tensor<double>(rng, {n, d}), random_tensor<double>(rng, {n, d})},
                                  [s](Tape<double>& t, const std::vector<Var>& v) {
                                    return ops::softmax(t, ops::causal_masked_attention_scores(t, v[0], v[1], s));
                                  },
                                  rng, 1e-5);
  });
  CHECK(worst < kTolDouble);

  Rng rng(13);
  Tape<double> tape;
  const auto& sc = tape.value(ops::causal_masked_attention_scores(
      tape, tape.constant(random_tensor<double>(rng, {5, 3})), tape.constant(random_tensor<double>(rng, {5, 3})),
      1.0));
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = i + 1; j < 5; ++j) CHECK(sc.at(i, j) == ops::masked_score<double>);
}

TEST_CASE("fused causal_self_attention gradient over packed segments") {
  const double worst = worst_over_trials(14, [](Rng& rng) {
    const std::size_t heads = 1 + rng.index(3), hd = 1 + rng.index(3), dim = heads * hd;
    std::vector<ops::Segment> segs;
    std::size_t rows = 0;
    for (std::size_t s = 0, n = 1 + rng.index(3); s < n; ++s) {
      const std::size_t len = 1 + rng.index(4);
      segs.push_back({rows, len});
      rows += len;
    }
    return gradient_check<double>({random_tensor<double>(rng, {rows, 3 * dim})},
                                  [heads, segs](Tape<double>& t, const std::vector<Var>& v) {
                                    return ops::causal_self_attention(t, v[0], heads, segs);
                                  },
                                  rng, 1e-5);
  });
  CHECK(worst < kTolDouble);
}

TEST_CASE("fused attention agrees with the composed reference") {
  Rng rng(15);
  const std::size_t n = 6, d = 4;
  const auto qkv = random_tensor<double>(rng, {n, 3 * d});
  Tape<double> tape;
  const auto& fused = tape.value(ops::causal_self_attention(tape, tape.constant(qkv), 1, std::vector<ops::Segment>{{0, n}}));
  Tensor<double> q({n, d}), k({n, d}), v({n, d});
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) {
      q.at(r, c) = qkv.at(r, c);
      k.at(r, c) = qkv.at(r, d + c);
      v.at(r, c) = qkv.at(r, 2 * d + c);
    }
  Var p = ops::softmax(tape, ops::causal_masked_attention_scores(tape, tape.constant(q), tape.constant(k),
                                                                  1.0 / std::sqrt(double(d))));
  const auto& ref = tape.value(ops::matmul(tape, p, tape.constant(v)));
  for (std::size_t i = 0; i < fused.size(); ++i) CHECK(fused[i] == doctest::Approx(ref[i]).epsilon(1e-12));
}

TEST_CASE("cross_entropy gradient with weights") {
  const double worst = worst_over_trials(16, [](Rng& rng) {
    const auto n = small(rng), v = 2 + rng.index(7);
    std::vector<std::int32_t> targets(n);
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
      targets[i] = static_cast<std::int32_t>(rng.index(v));
      w[i] = rng.index(3) == 0 ? 0.0 : rng.uniform() + 0.1;
    }
    w[0] = 1.0;
    return gradient_check<double>({random_tensor<double>(rng, {n, v}, 3.0)},
                                  [targets, w](Tape<double>& t, const std::vector<Var>& x) {
                                    return ops::cross_entropy_from_logits<double>(t, x[0], targets, w);
                                  },
                                  rng, 1e-4);
  });
  CHECK(worst < kTolDouble);
}

TEST_CASE("cross_entropy over uniform logits is ln V") {
  Tape<double> tape;
  std::vector<std::int32_t> targets{0, 5, 15, 3};
  std::vector<double> w(4, 1.0);
  const double loss =
      tape.value(ops::cross_entropy_from_logits<double>(tape, tape.constant(Tensor<double>({4, 16})), targets, w))
          .item();
  CHECK(loss == doctest::Approx(std::log(16.0)).epsilon(1e-12));
}

TEST_CASE("cross_entropy with unit weights is the mean token NLL") {
  Rng rng(17);
  const auto logits = random_tensor<double>(rng, {7, 5}, 2.0);
  std::vector<std::int32_t> targets{1, 0, 4, 2, 2, 3, 1};
  std::vector<double> w(7, 1.0);
  Tape<double> tape;
  const double loss = tape.value(ops::cross_entropy_from_logits<double>(tape, tape.constant(logits), targets, w)).item();
  double ref = 0;
  for (std::size_t r = 0; r < 7; ++r) {
    double z = 0;
    for (std::size_t c = 0; c < 5; ++c) z += std::exp(logits.at(r, c));
    ref += std::log(z) - logits.at(r, static_cast<std::size_t>(targets[r]));
  }
  CHECK(loss == doctest::Approx(ref / 7).epsilon(1e-12));
}

TEST_CASE("cross_entropy rejects zero total weight and bad weights") {
  Tape<double> tape;
  Var x = tape.constant(Tensor<double>({2, 3}));
  std::vector<std::int32_t> targets{0, 1};
  std::vector<double> zero{0.0, 0.0}, negative{1.0, -1.0};
  CHECK_THROWS_WITH_AS(ops::cross_entropy_from_logits<double>(tape, x, targets, zero),
                       doctest::Contains("no loss-bearing tokens"), Error);
  CHECK_THROWS_AS(ops::cross_entropy_from_logits<double>(tape, x, targets, negative), Error);
}

TEST_CASE("shape mismatch names both shapes") {
  Tape<double> tape;
  Var a = tape.constant(Tensor<double>({2, 3})), b = tape.constant(Tensor<double>({4, 5}));
  try {
    ops::matmul(tape, a, b);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::numerical);
    CHECK(std::string(e.what()).find("[2,3]") != std::string::npos);
    CHECK(std::string(e.what()).find("[4,5]") != std::string::npos);
  }
}

TEST_CASE("x squared at 3 has gradient 6") {
  Tape<double> tape;
  Var x = tape.leaf(Tensor<double>::scalar(3.0));
  Var y = ops::mul(tape, x, x);
  tape.backward(y);
  CHECK(tape.grad(x).item() == 6.0);
}

TEST_CASE("sum of gelu(Wx) matches central differences") {
  const double worst = worst_over_trials(18, [](Rng& rng) {
    const auto m = small(rng), k = small(rng);
    return gradient_check<double>({random_tensor<double>(rng, {m, k}), random_tensor<double>(rng, {k, 1})},
                                  [](Tape<double>& t, const std::vector<Var>& v) {
                                    return ops::sum(t, ops::gelu(t, ops::matmul(t, v[0], v[1])));
                                  },
                                  rng, 1e-5);
  });
  CHECK(worst < kTolDouble);
}

TEST_CASE("constant loss gives zero gradients") {
  Tape<double> tape;
  Parameter<double> p{"w", Tensor<double>({2, 2}, {1, 2, 3, 4}), {}, true};
  p.zero_grad();
  Var w = tape.parameter(p);
  Var c = tape.constant(Tensor<double>::scalar(5.0));
  Var loss = ops::add(tape, ops::scale(tape, ops::sum(tape, w), 0.0), c);
  tape.backward(loss);
  for (double g : p.grad.values()) CHECK(g == 0.0);
}

TEST_CASE("backward twice without reset fails") {
  Tape<double> tape;
  Var x = tape.leaf(Tensor<double>::scalar(2.0));
  Var y = ops::mul(tape, x, x);
  tape.backward(y);
  CHECK_THROWS_AS(tape.backward(y), Error);
  tape.reset();
  Var z = tape.leaf(Tensor<double>::scalar(1.0));
  CHECK_NOTHROW(tape.backward(ops::scale(tape, z, 2.0)));
}

TEST_CASE("a variable from another tape is detected") {
  Tape<double> a, b;
  Var x = a.leaf(Tensor<double>::scalar(1.0));
  CHECK_THROWS_WITH_AS(ops::scale(b, x, 2.0), doctest::Contains("detached"), Error);
}

TEST_CASE("single-precision gradients agree with double to 1e-3") {
  Rng rng(19);
  const double worst = gradient_check<float>(
      {random_tensor<float>(rng, {4, 6}), random_tensor<float>(rng, {6}), random_tensor<float>(rng, {6})},
      [](Tape<float>& t, const std::vector<Var>& v) {
        return ops::softmax(t, ops::gelu(t, ops::layer_norm(t, v[0], v[1], v[2])));
      },
      rng, 1e-2);
  CHECK(worst < 1e-3);
}

TEST_CASE("tensor dump round-trips bit-identically") {
  pitlab::testing::TempDir dir("dump");
  Rng rng(20);
  std::vector<NamedTensor<float>> in{{"a", random_tensor<float>(rng, {3, 4})}, {"b", random_tensor<float>(rng, {5})}};
  write_tensors(dir / "t.bin", in);
  const auto out = read_tensors<float>(dir / "t.bin");
  REQUIRE(out.size() == 2);
  CHECK(out[0].name == "a");
  CHECK(out[0].tensor == in[0].tensor);
  CHECK(out[1].tensor == in[1].tensor);
  CHECK_THROWS_AS(read_tensors<double>(dir / "t.bin"), Error);
}

}  // TEST_SUITE
