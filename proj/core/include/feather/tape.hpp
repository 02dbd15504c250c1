#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

#include "feather/tensor.hpp"

namespace feather {

class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}

  const Tensor& value() const;
  double item() const { return value().item(); }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  Tape& tape() const { return *tape_; }
  std::uint32_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

// View handed to a node's backward function.
class BackwardContext {
 public:
  const Tensor& grad() const { return *grad_; }
  const Tensor& output() const;
  const Tensor& input(std::size_t k) const;
  bool needs_grad(std::size_t k) const;
  // Accumulator for input k, zero-initialised on first use.
  Tensor& input_grad(std::size_t k);

 private:
  friend class Tape;
  BackwardContext(Tape& tape, std::uint32_t node, const Tensor& grad,
                  std::vector<Tensor>& grads)
      : tape_(tape), node_(node), grad_(&grad), grads_(grads) {}

  Tape& tape_;
  std::uint32_t node_;
  const Tensor* grad_;
  std::vector<Tensor>& grads_;
};

using BackwardFn = std::function<void(BackwardContext&)>;

// Gradients produced by one backward pass, indexed by node id.
class Gradients {
 public:
  // Zero tensor of the value's shape when nothing flowed into `v`.
  Tensor of(Var v) const;
  bool has(Var v) const { return v.id() < grads_.size() && !grads_[v.id()].empty(); }
  // Node ids in the order their backward functions ran.
  std::span<const std::uint32_t> visit_order() const { return visited_; }

 private:
  friend class Tape;
  const Tape* tape_ = nullptr;
  std::vector<Tensor> grads_;
  std::vector<std::uint32_t> visited_;
};

// Flat reverse-mode tape. Nodes are appended in evaluation order, so the
// recording order is already a topological order and backward walks it in
// reverse. Confined to one thread.
class Tape {
 public:
  explicit Tape(Precision precision = Precision::kF64) : precision_(precision) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Precision precision() const noexcept { return precision_; }
  std::size_t size() const noexcept { return nodes_.size(); }

  // Leaf that receives a gradient.
  Var variable(Tensor value);
  // Leaf that never receives a gradient.
  Var constant(Tensor value);

  const Tensor& value(Var v) const { return nodes_[v.id()].value; }
  bool requires_grad(Var v) const { return nodes_[v.id()].requires_grad; }

  // Appends a node computed from `inputs`. The value is rounded to the tape
  // precision and must be finite; `op` names the operation in diagnostics.
  Var record(std::string_view op, Tensor value, std::initializer_list<Var> inputs,
             BackwardFn backward);
  Var record(std::string_view op, Tensor value, std::span<const Var> inputs,
             BackwardFn backward);

  // Reverse pass from a scalar loss.
  Gradients backward(Var loss);

 private:
  friend class BackwardContext;
  struct Node {
    Tensor value;
    std::vector<std::uint32_t> inputs;
    BackwardFn backward;
    bool requires_grad = false;
  };

  Precision precision_;
  std::deque<Node> nodes_;  // stable addresses: value() references survive growth
};

}  // namespace feather
