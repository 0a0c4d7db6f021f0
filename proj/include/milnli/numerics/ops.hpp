#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "milnli/numerics/tape.hpp"
#include "milnli/numerics/tensor.hpp"

// Differentiable primitives. Every function records its result on the tape
// of its inputs and, when that tape records gradients, registers the
// matching backward rule.
namespace milnli::ops {

enum class Unary { kTanh, kRelu, kSigmoid, kExp, kLog };

/// [m x k] x [k x n] -> [m x n].
Var matmul(Var a, Var b);
Var transpose(Var a);

/// Element-wise, identical shapes.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var add_scalar(Var a, double offset);
/// Adds a bias with `cols(a)` elements to every row of a matrix.
Var add_row(Var a, Var bias);
/// Multiplies row i of matrix `a` by element i of `weights` (m elements).
Var scale_rows(Var a, Var weights);

Var unary_apply(Var x, Unary fn);
inline Var tanh(Var x) { return unary_apply(x, Unary::kTanh); }
inline Var relu(Var x) { return unary_apply(x, Unary::kRelu); }
inline Var sigmoid(Var x) { return unary_apply(x, Unary::kSigmoid); }
inline Var exp(Var x) { return unary_apply(x, Unary::kExp); }
/// Throws DomainError naming the first non-positive element.
inline Var log(Var x) { return unary_apply(x, Unary::kLog); }
Var square(Var x);

/// Max-shifted softmax over all elements.
Var softmax(Var x);
/// w / ||w||_1 over all elements. Throws DegenerateInputError when the norm
/// is zero and DomainError on negative entries.
Var l1_normalize(Var w);
/// -sum p log p with 0 log 0 := 0; scalar result.
Var entropy(Var p);

Var sum(Var x);
/// Largest element (first on ties); the gradient flows to that element.
Var max_element(Var x);
/// Smallest element strictly greater than `floor`; a scalar 0 with no
/// gradient when no element qualifies.
Var min_above(Var x, double floor);
/// Element at flat index `i`, as a scalar.
Var pick(Var x, std::size_t i);

Var reshape(Var x, Shape shape);
/// Row r of a matrix as a [1 x cols] matrix.
Var row(Var a, std::size_t r);
/// Column c of a matrix as a [rows x 1] matrix.
Var column(Var a, std::size_t c);
/// Columns [begin, end) of a matrix.
Var slice_cols(Var a, std::size_t begin, std::size_t end);
/// Horizontal concatenation of matrices with equal row counts.
Var concat_cols(Var a, Var b);
/// Vertical stack of [1 x n] rows into [rows x n].
Var stack_rows(std::span<const Var> rows);

}  // namespace milnli::ops
