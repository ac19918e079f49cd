#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <vector>

#include "pcgssl/nn/tensor.hpp"

namespace pcgssl::nn {

/// Branch choices of the piecewise-linear ops (relu, max pooling), one list
/// per op in evaluation order. Recorded once, then replayed so that every op
/// takes the recorded branch: the network becomes a smooth function that
/// agrees with the real one around the recording point.
struct BranchPattern {
  std::vector<std::vector<std::uint32_t>> choices;
  std::size_t cursor = 0;
  bool replay = false;

  /// Records `chosen` or, when replaying, returns the recorded list for this op.
  const std::vector<std::uint32_t>& visit(std::vector<std::uint32_t> chosen) {
    if (!replay) {
      choices.push_back(std::move(chosen));
      return choices.back();
    }
    require(cursor < choices.size() && choices[cursor].size() == chosen.size(), Errc::ShapeMismatch,
            "branch pattern replayed on a different graph");
    return choices[cursor++];
  }
};

template <std::floating_point T>
class Tape;

/// Handle to a value recorded on a Tape.
template <std::floating_point T>
class Var {
 public:
  Var() = default;
  Var(Tape<T>* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape<T>& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  const Tensor<T>& value() const { return tape_->value(id_); }
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const { return tape_->requires_grad(id_); }
  /// Gradient accumulated by Tape::backward.
  std::span<T> grad() const { return tape_->grad(id_); }

 private:
  Tape<T>* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Wengert list for reverse-mode differentiation.
///
/// Nodes are appended in evaluation order, which is a topological order, so
/// backward() walks the list once in reverse. Parameter leaves alias tensors
/// owned elsewhere (a ParameterSet) and accumulate into their gradient slots.
/// A node requires a gradient iff one of its parents does; nodes that do not
/// keep no backward closure.
template <std::floating_point T>
class Tape {
 public:
  /// Called as fn(tape, self_id) after the node's own gradient is complete.
  using Backward = std::function<void(Tape&, std::size_t)>;

  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool grad_enabled() const { return grad_enabled_; }

  /// Routes relu and max-pool branch choices through `pattern` (null: free).
  void set_branch_pattern(BranchPattern* pattern) { pattern_ = pattern; }
  BranchPattern* branch_pattern() const { return pattern_; }

  Var<T> constant(Tensor<T> value) { return push(std::move(value), nullptr, false, {}); }

  Var<T> variable(Tensor<T> value) { return push(std::move(value), nullptr, grad_enabled_, {}); }

  /// Leaf aliasing `param`; gradients land in param.grad() when trainable.
  Var<T> parameter(Tensor<T>& param, bool trainable = true) {
    return push(Tensor<T>{}, &param, grad_enabled_ && trainable, {});
  }

  /// Appends an op result. `backward` is dropped when no parent needs a gradient.
  Var<T> record(Tensor<T> value, std::initializer_list<std::size_t> parents, Backward backward) {
    bool needs = false;
    for (std::size_t p : parents) needs = needs || nodes_.at(p).requires_grad;
    return push(std::move(value), nullptr, needs, needs ? std::move(backward) : Backward{});
  }

  const Tensor<T>& value(std::size_t id) const {
    const Node& n = nodes_.at(id);
    return n.external ? *n.external : n.owned;
  }

  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }

  std::span<T> grad(std::size_t id) {
    Node& n = nodes_.at(id);
    return n.external ? n.external->grad() : n.owned.grad();
  }

  std::size_t size() const { return nodes_.size(); }

  /// Seeds d(root)/d(root) = 1 and propagates to every node that needs it.
  void backward(const Var<T>& root) {
    require(root.value().size() == 1, Errc::ShapeMismatch, "backward() needs a scalar root");
    if (!nodes_.at(root.id()).requires_grad) return;
    grad(root.id())[0] += T(1);
    for (std::size_t id = root.id() + 1; id-- > 0;) {
      Node& n = nodes_[id];
      const bool reached = n.external ? n.external->has_grad() : n.owned.has_grad();
      if (n.requires_grad && n.backward && reached) n.backward(*this, id);
    }
  }

 private:
  struct Node {
    Tensor<T> owned;
    Tensor<T>* external = nullptr;
    bool requires_grad = false;
    Backward backward;
  };

  Var<T> push(Tensor<T> value, Tensor<T>* external, bool requires_grad, Backward backward) {
    nodes_.push_back(Node{std::move(value), external, requires_grad, std::move(backward)});
    return Var<T>(this, nodes_.size() - 1);
  }

  std::vector<Node> nodes_;
  bool grad_enabled_;
  BranchPattern* pattern_ = nullptr;
};

}  // namespace pcgssl::nn
