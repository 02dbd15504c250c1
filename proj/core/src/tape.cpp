#include "feather/tape.hpp"

#include <string>

#include "feather/error.hpp"

namespace feather {

const Tensor& Var::value() const { return tape_->value(*this); }

const Tensor& BackwardContext::output() const { return tape_.nodes_[node_].value; }

const Tensor& BackwardContext::input(std::size_t k) const {
  return tape_.nodes_[tape_.nodes_[node_].inputs[k]].value;
}

bool BackwardContext::needs_grad(std::size_t k) const {
  return tape_.nodes_[tape_.nodes_[node_].inputs[k]].requires_grad;
}

Tensor& BackwardContext::input_grad(std::size_t k) {
  const std::uint32_t id = tape_.nodes_[node_].inputs[k];
  Tensor& g = grads_[id];
  if (g.empty()) {
    const Tensor& v = tape_.nodes_[id].value;
    g = Tensor(v.rows(), v.cols(), Precision::kF64);
  }
  return g;
}

Tensor Gradients::of(Var v) const {
  if (has(v)) return grads_[v.id()];
  const Tensor& value = tape_->value(v);
  return Tensor(value.rows(), value.cols(), Precision::kF64);
}

Var Tape::variable(Tensor value) {
  value.round(precision_);
  if (!value.all_finite()) throw NumericError("non-finite value in variable leaf");
  nodes_.push_back(Node{std::move(value), {}, {}, true});
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::constant(Tensor value) {
  value.round(precision_);
  if (!value.all_finite()) throw NumericError("non-finite value in constant leaf");
  nodes_.push_back(Node{std::move(value), {}, {}, false});
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::record(std::string_view op, Tensor value, std::initializer_list<Var> inputs,
                 BackwardFn backward) {
  return record(op, std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                std::move(backward));
}

Var Tape::record(std::string_view op, Tensor value, std::span<const Var> inputs,
                 BackwardFn backward) {
  value.round(precision_);
  if (!value.all_finite()) {
    throw NumericError("non-finite output from " + std::string(op) + " " +
                       value.shape_string());
  }
  Node node;
  node.value = std::move(value);
  node.inputs.reserve(inputs.size());
  for (const Var& in : inputs) {
    if (&in.tape() != this) throw ContractError(std::string(op) + ": input from another tape");
    node.inputs.push_back(in.id());
    node.requires_grad = node.requires_grad || nodes_[in.id()].requires_grad;
  }
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Gradients Tape::backward(Var loss) {
  if (&loss.tape() != this) throw ContractError("backward: loss recorded on another tape");
  const Tensor& lv = nodes_[loss.id()].value;
  if (!lv.is_scalar()) {
    throw ContractError("backward: loss must be a scalar, got " + lv.shape_string());
  }
  Gradients out;
  out.tape_ = this;
  out.grads_.resize(nodes_.size());
  out.grads_[loss.id()] = Tensor::scalar(1.0);
  for (std::uint32_t id = loss.id() + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (!node.backward || out.grads_[id].empty()) continue;
    BackwardContext ctx(*this, id, out.grads_[id], out.grads_);
    node.backward(ctx);
    out.visited_.push_back(id);
  }
  return out;
}

}  // namespace feather
