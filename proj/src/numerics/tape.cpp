#include "milnli/numerics/tape.hpp"

#include "milnli/numerics/errors.hpp"

namespace milnli {

std::size_t ParameterSet::add(std::string name, Tensor init) {
  if (lookup_.count(name)) throw ContractError("duplicate parameter '" + name + "'");
  const std::size_t idx = values_.size();
  lookup_.emplace(name, idx);
  names_.push_back(std::move(name));
  values_.push_back(std::move(init));
  return idx;
}

std::optional<std::size_t> ParameterSet::find(const std::string& name) const {
  auto it = lookup_.find(name);
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

std::size_t ParameterSet::index(const std::string& name) const {
  auto idx = find(name);
  if (!idx) throw ContractError("unknown parameter '" + name + "'");
  return *idx;
}

std::size_t ParameterSet::total_elements() const {
  std::size_t n = 0;
  for (const auto& v : values_) n += v.size();
  return n;
}

Gradients zero_gradients(const ParameterSet& params) {
  Gradients grads;
  grads.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    grads.emplace_back(params.value(i).shape(), 0.0);
  }
  return grads;
}

void accumulate(Gradients& into, const Gradients& from) {
  if (into.size() != from.size()) throw ShapeError("gradient set size mismatch");
  for (std::size_t i = 0; i < into.size(); ++i) into[i].accumulate(from[i]);
}

const Tensor& Var::value() const { return tape->value(id); }

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), nullptr, Tensor(), nullptr, std::nullopt, false});
  return Var{this, nodes_.size() - 1};
}

Var Tape::parameter(const ParameterSet& params, std::size_t index) {
  nodes_.push_back(Node{Tensor(), &params.value(index), Tensor(), nullptr, index, true});
  return Var{this, nodes_.size() - 1};
}

Var Tape::push(Tensor value, std::span<const Var> inputs, BackwardFn backward) {
  bool needs = false;
  for (const Var& in : inputs) {
    if (in.tape != this) throw ContractError("operation mixes nodes from two tapes");
    needs = needs || nodes_[in.id].requires_grad;
  }
  const bool keep = recording_ && needs;
  nodes_.push_back(Node{std::move(value), nullptr, Tensor(),
                        keep ? std::move(backward) : BackwardFn{}, std::nullopt,
                        keep});
  return Var{this, nodes_.size() - 1};
}

Tensor& Tape::grad(std::size_t id) {
  Node& node = nodes_[id];
  const Tensor& v = value(id);
  if (node.grad.empty() && !v.empty()) {
    node.grad = Tensor(v.shape(), 0.0);
  }
  return node.grad;
}

Gradients Tape::backward(Var loss, const ParameterSet& params) {
  if (loss.tape != this) throw ContractError("loss node belongs to another tape");
  if (value(loss.id).size() != 1) {
    throw ContractError("backward() needs a scalar loss, got shape " +
                        shape_string(value(loss.id).shape()));
  }
  if (!recording_) throw ContractError("backward() on a tape that does not record");

  for (auto& node : nodes_) node.grad = Tensor();
  grad(loss.id).fill(1.0);

  Gradients result = zero_gradients(params);
  for (std::size_t id = loss.id + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (node.grad.empty()) continue;
    if (node.backward) node.backward(*this, id);
    if (node.parameter) {
      if (*node.parameter >= result.size()) {
        throw ContractError("tape parameter index outside the parameter set");
      }
      result[*node.parameter].accumulate(node.grad);
    }
  }
  return result;
}

Var ParamBinder::operator()(const std::string& name) {
  const std::size_t idx = params_.index(name);
  auto it = bound_.find(idx);
  if (it != bound_.end()) return it->second;
  Var v = tape_.parameter(params_, idx);
  bound_.emplace(idx, v);
  return v;
}

}  // namespace milnli
