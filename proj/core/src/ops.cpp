// Copyright (c) 2026, pitlab authors
// SPDX-License-Identifier: Apache-2.0

#include "pitlab/ops.hpp"

#include <Eigen/Core>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

namespace pitlab::ops {
namespace {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Stride = Eigen::OuterStride<>;

template <Real T>
Eigen::Map<const Mat<T>> cmap(const Tensor<T>& t) {
  return Eigen::Map<const Mat<T>>(t.data(), static_cast<Eigen::Index>(t.rows()),
                                  static_cast<Eigen::Index>(t.cols()));
}

template <Real T>
Eigen::Map<Mat<T>> map(Tensor<T>& t) {
  return Eigen::Map<Mat<T>>(t.data(), static_cast<Eigen::Index>(t.rows()),
                            static_cast<Eigen::Index>(t.cols()));
}

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
  fail(ErrorKind::numerical,
       std::string(op) + ": incompatible shapes " + shape_string(a) + " and " + shape_string(b));
}

template <Real T>
void require_rank2(const char* op, const Tensor<T>& t) {
  if (t.rank() != 2)
    fail(ErrorKind::numerical, std::string(op) + ": expected a matrix, got " + shape_string(t.shape()));
}

}  // namespace

template <Real T>
Var matmul(Tape<T>& tape, Var a, Var b) {
  const Tensor<T>& A = tape.value(a);
  const Tensor<T>& B = tape.value(b);
  if (A.rank() != 2 || B.rank() != 2 || A.shape()[1] != B.shape()[0])
    shape_error("matmul", A.shape(), B.shape());
  const std::size_t m = A.shape()[0], n = B.shape()[1];
  Tensor<T> C(Shape{m, n});
  map(C).noalias() = cmap(A) * cmap(B);
  const std::uint32_t ia = a.index, ib = b.index;
  return tape.record(std::move(C), {a, b}, [ia, ib](Tape<T>& t, std::uint32_t self) {
    const auto g = cmap(t.node_grad(self));
    if (t.node_requires_grad(ia)) map(t.grad_buffer(ia)).noalias() += g * cmap(t.node_value(ib)).transpose();
    if (t.node_requires_grad(ib)) map(t.grad_buffer(ib)).noalias() += cmap(t.node_value(ia)).transpose() * g;
  });
}

template <Real T>
Var matmul_nt(Tape<T>& tape, Var a, Var b) {
  const Tensor<T>& A = tape.value(a);
  const Tensor<T>& B = tape.value(b);
  if (A.rank() != 2 || B.rank() != 2 || A.shape()[1] != B.shape()[1])
    shape_error("matmul_nt", A.shape(), B.shape());
  const std::size_t m = A.shape()[0], n = B.shape()[0];
  Tensor<T> C(Shape{m, n});
  map(C).noalias() = cmap(A) * cmap(B).transpose();
  const std::uint32_t ia = a.index, ib = b.index;
  return tape.record(std::move(C), {a, b}, [ia, ib](Tape<T>& t, std::uint32_t self) {
    const auto g = cmap(t.node_grad(self));
    if (t.node_requires_grad(ia)) map(t.grad_buffer(ia)).noalias() += g * cmap(t.node_value(ib));
    if (t.node_requires_grad(ib)) map(t.grad_buffer(ib)).noalias() += g.transpose() * cmap(t.node_value(ia));
  });
}

template <Real T>
Var add(Tape<T>& tape, Var a, Var b) {
  const Tensor<T>& A = tape.value(a);
  const Tensor<T>& B = tape.value(b);
  const bool same = A.shape() == B.shape();
  const bool broadcast = !same && A.rank() == 2 && B.rank() == 1 && B.size() == A.cols();
  if (!same && !broadcast) shape_error("add", A.shape(), B.shape());
  Tensor<T> C = A;
  if (same) {
    for (std::size_t i = 0; i < C.size(); ++i) C[i] += B[i];
  } else {
    map(C).rowwise() += cmap(B).row(0);
  }
  const std::uint32_t ia = a.index, ib = b.index;
  return tape.record(std::move(C), {a, b}, [ia, ib, same](Tape<T>& t, std::uint32_t self) {
    const Tensor<T>& g = t.node_grad(self);
    if (t.node_requires_grad(ia)) {
      Tensor<T>& ga = t.grad_buffer(ia);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (t.node_requires_grad(ib)) {
      Tensor<T>& gb = t.grad_buffer(ib);
      if (same) {
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
      } else {
        map(gb).row(0) += cmap(g).colwise().sum();
      }
    }
  });
}

template <Real T>
Var mul(Tape<T>& tape, Var a, Var b) {
  const Tensor<T>& A = tape.value(a);
  const Tensor<T>& B = tape.value(b);
  if (A.shape() != B.shape()) shape_error("mul", A.shape(), B.shape());
  Tensor<T> C = A;
  for (std::size_t i = 0; i < C.size(); ++i) C[i] *= B[i];
  const std::uint32_t ia = a.index, ib = b.index;
  return tape.record(std::move(C), {a, b}, [ia, ib](Tape<T>& t, std::uint32_t self) {
    const Tensor<T>& g = t.node_grad(self);
    if (t.node_requires_grad(ia)) {
      Tensor<T>& ga = t.grad_buffer(ia);
      const Tensor<T>& vb = t.node_value(ib);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * vb[i];
    }
    if (t.node_requires_grad(ib)) {
      Tensor<T>& gb = t.grad_buffer(ib);
      const Tensor<T>& va = t.node_value(ia);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * va[i];
    }
  });
}

template <Real T>
Var scale(Tape<T>& tape, Var a, T factor) {
  Tensor<T> C = tape.value(a);
  for (auto& x : C.values()) x *= factor;
  const std::uint32_t ia = a.index;
  return tape.record(std::move(C), {a}, [ia, factor](Tape<T>& t, std::uint32_t self) {
    const Tensor<T>& g = t.node_grad(self);
    Tensor<T>& ga = t.grad_buffer(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += factor * g[i];
  });
}

template <Real T>
Var sum(Tape<T>& tape, Var a) {
  const Tensor<T>& A = tape.value(a);
  T total = 0;
  for (T x : A.values()) total += x;
  const std::uint32_t ia = a.index;
  return tape.record(Tensor<T>::scalar(total), {a}, [ia](Tape<T>& t, std::uint32_t self) {
    const T g = t.node_grad(self)[0];
    Tensor<T>& ga = t.grad_buffer(ia);
    for (auto& x : ga.values()) x += g;
  });
}

template <Real T>
Var softmax(Tape<T>& tape, Var a) {
  const Tensor<T>& A = tape.value(a);
  Tensor<T> Y = A;
  const std::size_t rows = A.rows(), cols = A.cols();
  for (std::size_t r = 0; r < rows; ++r) {
    T* y = Y.data() + r * cols;
    T mx = y[0];
    for (std::size_t c = 1; c < cols; ++c) mx = std::max(mx, y[c]);
    T z = 0;
    for (std::size_t c = 0; c < cols; ++c) z += (y[c] = std::exp(y[c] - mx));
    for (std::size_t c = 0; c < cols; ++c) y[c] /= z;
  }
  const std::uint32_t ia = a.index;
  return tape.record(std::move(Y), {a}, [ia, rows, cols](Tape<T>& t, std::uint32_t self) {
    const Tensor<T>& g = t.node_grad(self);
    const Tensor<T>& y = t.node_value(self);
    Tensor<T>& ga = t.grad_buffer(ia);
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t o = r * cols;
      T dot = 0;
      for (std::size_t c = 0; c < cols; ++c) dot += g[o + c] * y[o + c];
      for (std::size_t c = 0; c < cols; ++c) ga[o + c] += y[o + c] * (g[o + c] - dot);
    }
  });
}

template <Real T>
Var layer_norm(Tape<T>& tape, Var x, Var gain, Var bias, T eps) {
  const Tensor<T>& X = tape.value(x);
  const Tensor<T>& G = tape.value(gain);
  const Tensor<T>& B = tape.value(bias);
  const std::size_t rows = X.rows(), d = X.cols();
  if (G.size() != d || B.size() != d) shape_error("layer_norm", X.shape(), G.shape());
  Tensor<T> Y(X.shape());
  auto xhat = std::make_shared<AlignedVector<T>>(X.size());
  auto rstd = std::make_shared<AlignedVector<T>>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = X.data() + r * d;
    T mean = 0;
    for (std::size_t c = 0; c < d; ++c) mean += xr[c];
    mean /= static_cast<T>(d);
    T var = 0;
    for (std::size_t c = 0; c < d; ++c) var += (xr[c] - mean) * (xr[c] - mean);
    var /= static_cast<T>(d);
    const T rs = T(1) / std::sqrt(var + eps);
    (*rstd)[r] = rs;
    for (std::size_t c = 0; c < d; ++c) {
      const T h = (xr[c] - mean) * rs;
      (*xhat)[r * d + c] = h;
      Y[r * d + c] = h * G[c] + B[c];
    }
  }
  const std::uint32_t ix = x.index, ig = gain.index, ib = bias.index;
  return tape.record(std::move(Y), {x, gain, bias},
                     [ix, ig, ib, rows, d, xhat, rstd](Tape<T>& t, std::uint32_t self) {
    const Tensor<T>& g = t.node_grad(self);
    const Tensor<T>& G = t.node_value(ig);
    if (t.node_requires_grad(ig)) {
      Tensor<T>& gg = t.grad_buffer(ig);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < d; ++c) gg[c] += g[r * d + c] * (*xhat)[r * d + c];
    }
    if (t.node_requires_grad(ib)) {
      Tensor<T>& gb = t.grad_buffer(ib);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < d; ++c) gb[c] += g[r * d + c];
    }
    if (t.node_requires_grad(ix)) {
      Tensor<T>& gx = t.grad_buffer(ix);
      for (std::size_t r = 0; r < rows; ++r) {
        T mean_dh = 0, mean_dh_h = 0;
        for (std::size_t c = 0; c < d; ++c) {
          const T dh = g[r * d + c] * G[c];
          mean_dh += dh;
          mean_dh_h += dh * (*xhat)[r * d + c];
        }
        mean_dh /= static_cast<T>(d);
        mean_dh_h /= static_cast<T>(d);
        for (std::size_t c = 0; c < d; ++c) {
          const T dh = g[r * d + c] * G[c];
          gx[r * d + c] += (*rstd)[r] * (dh - mean_dh - (*xhat)[r * d + c] * mean_dh_h);
        }
      }
    }
  });
}

template <Real T>
Var gelu(Tape<T>& tape, Var x) {
  constexpr T k = T(0.7978845608028654);  // sqrt(2/pi)
  constexpr T c3 = T(0.044715);
  const Tensor<T>& X = tape.value(x);
  Tensor<T> Y(X.shape());
  for (std::size_t i = 0; i < X.size(); ++i) {
    const T v = X[i];
    Y[i] = T(0.5) * v * (T(1) + std::tanh(k * (v + c3 * v * v * v)));
  }
  const std::uint32_t ix = x.index;
  return tape.record(std::move(Y), {x}, [ix](Tape<T>& t, std::uint32_t self) {
    const Tensor<T>& g = t.node_grad(self);
    const Tensor<T>& X = t.node_value(ix);
    Tensor<T>& gx = t.grad_buffer(ix);
    for (std::size_t i = 0; i < X.size(); ++i) {
      const T v = X[i];
      const T th = std::tanh(k * (v + c3 * v * v * v));
      const T dv = T(0.5) * (T(1) + th) +
                   T(0.5) * v * (T(1) - th * th) * k * (T(1) + T(3) * c3 * v * v);
      gx[i] += g[i] * dv;
    }
  });
}

template <Real T>
Var embedding_lookup(Tape<T>& tape, Var table, std::span<const std::int32_t> ids) {
  const Tensor<T>& E = tape.value(table);
  require_rank2("embedding_lookup", E);
  const std::size_t vocab = E.shape()[0], d = E.shape()[1];
  Tensor<T> Y(Shape{ids.size(), d});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= vocab)
      fail(ErrorKind::numerical, "embedding_lookup: id " + std::to_string(ids[i]) +
                                     " outside table " + shape_string(E.shape()));
    std::copy_n(E.data() + static_cast<std::size_t>(ids[i]) * d, d, Y.data() + i * d);
  }
  const std::uint32_t ie = table.index;
  std::vector<std::int32_t> idx(ids.begin(), ids.end());
  return tape.record(std::move(Y), {table}, [ie, d, idx = std::move(idx)](Tape<T>& t, std::uint32_t self) {
    const Tensor<T>& g = t.node_grad(self);
    Tensor<T>& ge = t.grad_buffer(ie);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      T* dst = ge.data() + static_cast<std::size_t>(idx[i]) * d;
      const T* src = g.data() + i * d;
      for (std::size_t c = 0; c < d; ++c) dst[c] += src[c];
    }
  });
}

template <Real T>
Var gather_rows(Tape<T>& tape, Var x, std::span<const std::size_t> rows) {
  const Tensor<T>& X = tape.value(x);
  require_rank2("gather_rows", X);
  const std::size_t n = X.shape()[0], d = X.shape()[1];
  Tensor<T> Y(Shape{rows.size(), d});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= n)
      fail(ErrorKind::numerical, "gather_rows: row " + std::to_string(rows[i]) + " outside " +
                                     shape_string(X.shape()));
    std::copy_n(X.data() + rows[i] * d, d, Y.data() + i * d);
  }
  const std::uint32_t ix = x.index;
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  return tape.record(std::move(Y), {x}, [ix, d, idx = std::move(idx)](Tape<T>& t, std::uint32_t self) {
    const Tensor<T>& g = t.node_grad(self);
    Tensor<T>& gx = t.grad_buffer(ix);
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t c = 0; c < d; ++c) gx[idx[i] * d + c] += g[i * d + c];
  });
}

template <Real T>
Var causal_masked_attention_scores(Tape<T>& tape, Var q, Var k, T scale_factor) {
  const Tensor<T>& Q = tape.value(q);
  const Tensor<T>& K = tape.value(k);
  if (Q.rank() != 2 || Q.shape() != K.shape()) shape_error("causal_masked_attention_scores", Q.shape(), K.shape());
  const std::size_t n = Q.shape()[0];
  Tensor<T> S(Shape{n, n});
  map(S).noalias() = scale_factor * (cmap(Q) * cmap(K).transpose());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) S[i * n + j] = masked_score<T>;
  const std::uint32_t iq = q.index, ik = k.index;
  return tape.record(std::move(S), {q, k}, [iq, ik, n, scale_factor](Tape<T>& t, std::uint32_t self) {
    Mat<T> g = cmap(t.node_grad(self));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 0;
    if (t.node_requires_grad(iq)) map(t.grad_buffer(iq)).noalias() += scale_factor * (g * cmap(t.node_value(ik)));
    if (t.node_requires_grad(ik)) map(t.grad_buffer(ik)).noalias() += scale_factor * (g.transpose() * cmap(t.node_value(iq)));
  });
}

template <Real T>
Var causal_self_attention(Tape<T>& tape, Var qkv, std::size_t heads,
                          std::span<const Segment> segments) {
  const Tensor<T>& X = tape.value(qkv);
  require_rank2("causal_self_attention", X);
  const std::size_t rows = X.shape()[0];
  if (X.shape()[1] % 3 != 0 || heads == 0 || (X.shape()[1] / 3) % heads != 0)
    fail(ErrorKind::numerical, "causal_self_attention: width " + std::to_string(X.shape()[1]) +
                                   " is not 3 * heads * head_dim for heads=" + std::to_string(heads));
  const std::size_t dim = X.shape()[1] / 3, hd = dim / heads;
  std::size_t expected = 0, probs_size = 0;
  for (const auto& s : segments) {
    if (s.offset != expected)
      fail(ErrorKind::numerical, "causal_self_attention: segments must tile the rows contiguously");
    expected += s.length;
    probs_size += heads * s.length * s.length;
  }
  if (expected != rows)
    fail(ErrorKind::numerical, "causal_self_attention: segments cover " + std::to_string(expected) +
                                   " of " + std::to_string(rows) + " rows");

  const T sc = T(1) / std::sqrt(static_cast<T>(hd));
  const auto ld = static_cast<Eigen::Index>(3 * dim);
  const auto eh = static_cast<Eigen::Index>(hd);
  Tensor<T> Y(Shape{rows, dim});
  auto probs = std::make_shared<AlignedVector<T>>(probs_size);
  std::size_t po = 0;
  for (const auto& s : segments) {
    const auto len = static_cast<Eigen::Index>(s.length);
    for (std::size_t h = 0; h < heads; ++h) {
      const T* base = X.data() + s.offset * 3 * dim + h * hd;
      Eigen::Map<const Mat<T>, 0, Stride> Q(base, len, eh, Stride(ld));
      Eigen::Map<const Mat<T>, 0, Stride> K(base + dim, len, eh, Stride(ld));
      Eigen::Map<const Mat<T>, 0, Stride> V(base + 2 * dim, len, eh, Stride(ld));
      Eigen::Map<Mat<T>> P(probs->data() + po, len, len);
      P.noalias() = sc * (Q * K.transpose());
      for (Eigen::Index i = 0; i < len; ++i) {
        T mx = P(i, 0);
        for (Eigen::Index j = 1; j <= i; ++j) mx = std::max(mx, P(i, j));
        T z = 0;
        for (Eigen::Index j = 0; j <= i; ++j) z += (P(i, j) = std::exp(P(i, j) - mx));
        for (Eigen::Index j = 0; j <= i; ++j) P(i, j) /= z;
        for (Eigen::Index j = i + 1; j < len; ++j) P(i, j) = 0;
      }
      Eigen::Map<Mat<T>, 0, Stride> O(Y.data() + s.offset * dim + h * hd, len, eh,
                                      Stride(static_cast<Eigen::Index>(dim)));
      O.noalias() = P * V;
      po += static_cast<std::size_t>(len * len);
    }
  }

  const std::uint32_t ix = qkv.index;
  std::vector<Segment> segs(segments.begin(), segments.end());
  return tape.record(std::move(Y), {qkv},
                     [ix, heads, dim, hd, sc, probs, segs = std::move(segs)](Tape<T>& t, std::uint32_t self) {
    const Tensor<T>& G = t.node_grad(self);
    const Tensor<T>& X = t.node_value(ix);
    Tensor<T>& GX = t.grad_buffer(ix);
    const auto ld = static_cast<Eigen::Index>(3 * dim);
    const auto eh = static_cast<Eigen::Index>(hd);
    std::size_t po = 0;
    Mat<T> dP, dS;
    for (const auto& s : segs) {
      const auto len = static_cast<Eigen::Index>(s.length);
      for (std::size_t h = 0; h < heads; ++h) {
        const std::size_t col = s.offset * 3 * dim + h * hd;
        Eigen::Map<const Mat<T>, 0, Stride> Q(X.data() + col, len, eh, Stride(ld));
        Eigen::Map<const Mat<T>, 0, Stride> K(X.data() + col + dim, len, eh, Stride(ld));
        Eigen::Map<const Mat<T>, 0, Stride> V(X.data() + col + 2 * dim, len, eh, Stride(ld));
        Eigen::Map<Mat<T>, 0, Stride> dQ(GX.data() + col, len, eh, Stride(ld));
        Eigen::Map<Mat<T>, 0, Stride> dK(GX.data() + col + dim, len, eh, Stride(ld));
        Eigen::Map<Mat<T>, 0, Stride> dV(GX.data() + col + 2 * dim, len, eh, Stride(ld));
        Eigen::Map<const Mat<T>, 0, Stride> dO(G.data() + s.offset * dim + h * hd, len, eh,
                                               Stride(static_cast<Eigen::Index>(dim)));
        Eigen::Map<const Mat<T>> P(probs->data() + po, len, len);
        dP.noalias() = dO * V.transpose();
        dV.noalias() += P.transpose() * dO;
        dS.resize(len, len);
        for (Eigen::Index i = 0; i < len; ++i) {
          T dot = 0;
          for (Eigen::Index j = 0; j <= i; ++j) dot += P(i, j) * dP(i, j);
          for (Eigen::Index j = 0; j <= i; ++j) dS(i, j) = P(i, j) * (dP(i, j) - dot);
          for (Eigen::Index j = i + 1; j < len; ++j) dS(i, j) = 0;
        }
        dQ.noalias() += sc * (dS * K);
        dK.noalias() += sc * (dS.transpose() * Q);
        po += static_cast<std::size_t>(len * len);
      }
    }
  });
}

template <Real T>
Var cross_entropy_from_logits(Tape<T>& tape, Var logits, std::span<const std::int32_t> targets,
                              std::span<const T> weights) {
  const Tensor<T>& L = tape.value(logits);
  const std::size_t rows = L.rows(), vocab = L.cols();
  if (targets.size() != rows)
    fail(ErrorKind::numerical, "cross_entropy: " + std::to_string(targets.size()) +
                                   " targets for logits " + shape_string(L.shape()));
  if (!weights.empty() && weights.size() != targets.size())
    fail(ErrorKind::numerical, "cross_entropy: " + std::to_string(weights.size()) +
                                   " weights for " + std::to_string(targets.size()) + " targets");
  std::vector<T> w(rows, T(1));
  if (!weights.empty()) w.assign(weights.begin(), weights.end());
  double total_w = 0;
  for (T x : w) {
    if (!(x >= T(0)) || !std::isfinite(static_cast<double>(x)))
      fail(ErrorKind::numerical, "cross_entropy: weights must be finite and non-negative");
    total_w += x;
  }
  if (total_w <= 0) fail(ErrorKind::numerical, "cross_entropy: no loss-bearing tokens");

  auto lse = std::make_shared<AlignedVector<T>>(rows, T(0));
  double loss = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (targets[r] < 0 || static_cast<std::size_t>(targets[r]) >= vocab)
      fail(ErrorKind::numerical, "cross_entropy: target " + std::to_string(targets[r]) +
                                     " outside vocabulary of " + std::to_string(vocab));
    if (w[r] == T(0)) continue;
    const T* x = L.data() + r * vocab;
    T mx = x[0];
    for (std::size_t c = 1; c < vocab; ++c) mx = std::max(mx, x[c]);
    T z = 0;
    for (std::size_t c = 0; c < vocab; ++c) z += std::exp(x[c] - mx);
    (*lse)[r] = mx + std::log(z);
    loss += static_cast<double>(w[r]) * static_cast<double>((*lse)[r] - x[targets[r]]);
  }
  const T inv_w = static_cast<T>(1.0 / total_w);
  const std::uint32_t il = logits.index;
  std::vector<std::int32_t> tgt(targets.begin(), targets.end());
  return tape.record(Tensor<T>::scalar(static_cast<T>(loss / total_w)), {logits},
                     [il, vocab, inv_w, lse, w = std::move(w), tgt = std::move(tgt)](Tape<T>& t, std::uint32_t self) {
    const T g = t.node_grad(self)[0];
    const Tensor<T>& L = t.node_value(il);
    Tensor<T>& gl = t.grad_buffer(il);
    for (std::size_t r = 0; r < tgt.size(); ++r) {
      if (w[r] == T(0)) continue;
      const T coef = g * w[r] * inv_w;
      const T* x = L.data() + r * vocab;
      T* dx = gl.data() + r * vocab;
      for (std::size_t c = 0; c < vocab; ++c) dx[c] += coef * std::exp(x[c] - (*lse)[r]);
      dx[tgt[r]] -= coef;
    }
  });
}

#define PITLAB_INSTANTIATE_OPS(T)                                                                  \
  template Var matmul<T>(Tape<T>&, Var, Var);                                                      \
  template Var matmul_nt<T>(Tape<T>&, Var, Var);                                                   \
  template Var add<T>(Tape<T>&, Var, Var);                                                         \
  template Var mul<T>(Tape<T>&, Var, Var);                                                         \
  template Var scale<T>(Tape<T>&, Var, T);                                                         \
  template Var sum<T>(Tape<T>&, Var);                                                              \
  template Var softmax<T>(Tape<T>&, Var);                                                          \
  template Var layer_norm<T>(Tape<T>&, Var, Var, Var, T);                                          \
  template Var gelu<T>(Tape<T>&, Var);                                                             \
  template Var embedding_lookup<T>(Tape<T>&, Var, std::span<const std::int32_t>);                  \
  template Var gather_rows<T>(Tape<T>&, Var, std::span<const std::size_t>);                        \
  template Var causal_masked_attention_scores<T>(Tape<T>&, Var, Var, T);                           \
  template Var causal_self_attention<T>(Tape<T>&, Var, std::size_t, std::span<const Segment>);     \
  template Var cross_entropy_from_logits<T>(Tape<T>&, Var, std::span<const std::int32_t>,          \
                                            std::span<const T>);

PITLAB_INSTANTIATE_OPS(float)
PITLAB_INSTANTIATE_OPS(double)

}  // namespace pitlab::ops
