#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "milnli/numerics/tensor.hpp"

namespace milnli {

/// Named trainable tensors, in insertion order.
class ParameterSet {
 public:
  std::size_t add(std::string name, Tensor init);

  std::size_t size() const { return values_.size(); }
  const std::string& name(std::size_t i) const { return names_[i]; }
  Tensor& value(std::size_t i) { return values_[i]; }
  const Tensor& value(std::size_t i) const { return values_[i]; }

  std::optional<std::size_t> find(const std::string& name) const;
  /// Index of `name`; throws ContractError if absent.
  std::size_t index(const std::string& name) const;
  Tensor& operator[](const std::string& name) { return values_[index(name)]; }
  const Tensor& operator[](const std::string& name) const {
    return values_[index(name)];
  }

  std::size_t total_elements() const;

  friend bool operator==(const ParameterSet& a, const ParameterSet& b) {
    return a.names_ == b.names_ && a.values_ == b.values_;
  }

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
  std::unordered_map<std::string, std::size_t> lookup_;
};

/// One gradient tensor per entry of a ParameterSet, same order and shapes.
using Gradients = std::vector<Tensor>;

Gradients zero_gradients(const ParameterSet& params);
void accumulate(Gradients& into, const Gradients& from);

class Tape;

/// Handle to a node on a Tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
};

// Define-by-run record of a forward computation. Nodes are appended in
// evaluation order, so the node list is already topologically sorted and
// backward() is a single reverse sweep.
class Tape {
 public:
  /// Propagates the gradient of node `self` into its inputs.
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  explicit Tape(bool record_gradients = true) : recording_(record_gradients) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return recording_; }

  Var constant(Tensor value);
  /// Leaf bound to `params.value(index)`; backward() routes its gradient there.
  /// The tape refers to the parameter in place, so it must outlive the tape
  /// unchanged.
  Var parameter(const ParameterSet& params, std::size_t index);

  /// Appends an operation result computed from `inputs`. The backward
  /// function is kept only if some input depends on a parameter.
  Var push(Tensor value, std::span<const Var> inputs, BackwardFn backward);
  Var push(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward) {
    return push(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                std::move(backward));
  }

  const Tensor& value(std::size_t id) const {
    const Node& n = nodes_[id];
    return n.external ? *n.external : n.value;
  }
  /// Gradient buffer of a node, allocated as zeros on first access.
  Tensor& grad(std::size_t id);
  /// True if the node depends on at least one parameter.
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  std::size_t size() const { return nodes_.size(); }

  /// Reverse sweep from a single-element `loss`. Returns a gradient for every
  /// parameter in `params`; parameters not reachable from the loss get zeros.
  Gradients backward(Var loss, const ParameterSet& params);

 private:
  struct Node {
    Tensor value;
    const Tensor* external = nullptr;
    Tensor grad;
    BackwardFn backward;
    std::optional<std::size_t> parameter;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
  bool recording_;
};

/// Binds parameters to a tape on first use, by name.
class ParamBinder {
 public:
  ParamBinder(Tape& tape, const ParameterSet& params) : tape_(tape), params_(params) {}
  Var operator()(const std::string& name);
  Tape& tape() { return tape_; }

 private:
  Tape& tape_;
  const ParameterSet& params_;
  std::unordered_map<std::size_t, Var> bound_;
};

}  // namespace milnli
