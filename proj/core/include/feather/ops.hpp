#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "feather/tape.hpp"

// Differentiable primitives recorded on a Tape. Shapes are checked eagerly and
// a mismatch throws DimensionError naming both operands.
//
// Broadcasting is limited to two forms: a 1x1 operand against any tensor, and
// a 1xN bias row as the right operand of an MxN tensor.
namespace feather::ops {

Var matmul(Var a, Var b);
// x * w^T, for x [M x K] and w [N x K].
Var linear(Var x, Var w);
Var transpose(Var a);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);

Var scale(Var a, double factor);
Var add_scalar(Var a, double offset);
Var neg(Var a);
Var square(Var a);

Var exp(Var a);
Var log(Var a);
Var tanh(Var a);
Var sigmoid(Var a);
Var softplus(Var a);
// |x| with subgradient 0 at x == 0.
Var abs(Var a);
// axis 0 normalises each column, axis 1 each row.
Var softmax(Var a, int axis);

Var sum(Var a);
Var mean(Var a);
// mean(|a - b|); subgradient 0 where a == b.
Var l1_loss(Var a, Var b);

Var concat(std::span<const Var> parts, int axis);
Var slice_rows(Var a, std::size_t begin, std::size_t end);
Var slice_cols(Var a, std::size_t begin, std::size_t end);
Var reshape(Var a, std::size_t rows, std::size_t cols);
// Rows of `table` selected by `ids`; out-of-range ids throw InputError.
Var embedding(Var table, std::span<const int> ids);
// Identity in the forward pass, blocks the gradient.
Var stop_gradient(Var a);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator/(Var a, Var b) { return div(a, b); }
inline Var operator-(Var a) { return neg(a); }

}  // namespace feather::ops
