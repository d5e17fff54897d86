// Copyright (c) 2026, pitlab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <string>
#include <vector>

#include "pitlab/error.hpp"
#include "pitlab/tensor.hpp"

namespace pitlab {

/// Handle to a value recorded on a tape. Only valid for the tape (and
/// generation) that produced it.
struct Var {
  std::uint64_t tape_id = 0;
  std::uint32_t generation = 0;
  std::uint32_t index = 0;
};

/// Reverse-mode recorder for one forward pass. Nodes are appended in
/// evaluation order, so reverse index order is a valid topological order.
/// A tape belongs to one thread; parameter gradients are accumulated into
/// Parameter::grad, so several tapes may feed the same accumulator in turn.
template <Real T>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::uint32_t)>;

  Tape() : id_(next_id()) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor<T> value) { return push(std::move(value), nullptr, nullptr, false, {}); }
  /// Owned leaf whose gradient is kept on the tape.
  Var leaf(Tensor<T> value) { return push(std::move(value), nullptr, nullptr, true, {}); }
  /// Leaf referencing a parameter; with requires_grad its gradient is added
  /// to p.grad during backward().
  Var parameter(Parameter<T>& p, bool requires_grad = true) {
    return push(Tensor<T>(), &p.value, requires_grad ? &p : nullptr, requires_grad, {});
  }
  /// Non-differentiable reference to external storage.
  Var reference(const Tensor<T>& t) { return push(Tensor<T>(), &t, nullptr, false, {}); }

  /// Records an op result. The backward closure is dropped when no input
  /// requires a gradient.
  Var record(Tensor<T> value, std::initializer_list<Var> inputs, BackwardFn fn) {
    bool needs = false;
    for (const Var& v : inputs) needs = needs || nodes_[check(v)].requires_grad;
    return push(std::move(value), nullptr, nullptr, needs, needs ? std::move(fn) : nullptr);
  }

  const Tensor<T>& value(Var v) const { return node_value(check(v)); }
  bool requires_grad(Var v) const { return nodes_[check(v)].requires_grad; }

  /// Gradient of the last backward() target with respect to v (zeros if
  /// v did not influence it). For parameters this is the accumulator
  /// Parameter::grad.
  Tensor<T> grad(Var v) const {
    const std::uint32_t i = check(v);
    const Node& n = nodes_[i];
    const Tensor<T>& g = n.sink != nullptr ? n.sink->grad : n.grad;
    if (!same_layout(g, node_value(i))) return Tensor<T>(node_value(i).shape());
    return g;
  }

  void backward(Var loss) {
    const std::uint32_t root = check(loss);
    if (backward_done_)
      fail(ErrorKind::state, "backward() called twice on the same tape without reset()");
    if (node_value(root).size() != 1)
      fail(ErrorKind::numerical, "backward() needs a scalar loss, got shape " +
                                     shape_string(node_value(root).shape()));
    backward_done_ = true;
    if (!nodes_[root].requires_grad) return;
    grad_buffer(root)[0] = T(1);
    for (std::uint32_t i = root + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (n.backward && !n.grad.empty()) n.backward(*this, i);
    }
  }

  void reset() {
    nodes_.clear();
    ++generation_;
    backward_done_ = false;
  }

  std::size_t size() const { return nodes_.size(); }

  // Op authoring interface.
  const Tensor<T>& node_value(std::uint32_t i) const {
    const Node& n = nodes_[i];
    return n.ref != nullptr ? *n.ref : n.value;
  }
  bool node_requires_grad(std::uint32_t i) const { return nodes_[i].requires_grad; }
  const Tensor<T>& node_grad(std::uint32_t i) const { return nodes_[i].grad; }
  /// Zero-initialised on first use; parameters accumulate in place.
  Tensor<T>& grad_buffer(std::uint32_t i) {
    Node& n = nodes_[i];
    Tensor<T>& g = n.sink != nullptr ? n.sink->grad : n.grad;
    if (!same_layout(g, node_value(i))) g = Tensor<T>(node_value(i).shape());
    return g;
  }
  std::uint32_t check(Var v) const {
    if (v.tape_id != id_ || v.generation != generation_ || v.index >= nodes_.size())
      fail(ErrorKind::state, "detached tensor: variable does not belong to this tape");
    return v.index;
  }

 private:
  struct Node {
    Tensor<T> value;
    const Tensor<T>* ref = nullptr;
    Parameter<T>* sink = nullptr;
    Tensor<T> grad;
    bool requires_grad = false;
    BackwardFn backward;
  };

  // A default tensor and a scalar share the empty shape; size tells them apart.
  static bool same_layout(const Tensor<T>& a, const Tensor<T>& b) {
    return a.size() == b.size() && a.shape() == b.shape();
  }

  static std::uint64_t next_id() {
    static std::atomic<std::uint64_t> counter{1};
    return counter.fetch_add(1);
  }

  Var push(Tensor<T> value, const Tensor<T>* ref, Parameter<T>* sink, bool requires_grad,
           BackwardFn fn) {
    nodes_.push_back(Node{std::move(value), ref, sink, Tensor<T>(), requires_grad, std::move(fn)});
    return Var{id_, generation_, static_cast<std::uint32_t>(nodes_.size() - 1)};
  }

  std::uint64_t id_;
  std::uint32_t generation_ = 0;
  bool backward_done_ = false;
  std::vector<Node> nodes_;
};

}  // namespace pitlab
