#pragma once

#include <span>

#include "plasticity/grad/tape.hpp"

namespace plasticity {

// Elementwise binary ops accept equal shapes, or one operand with a single
// element that is broadcast.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);

Var neg(Var x);
Var abs(Var x);
Var cos(Var x);
Var sin(Var x);
Var exp(Var x);
Var tanh(Var x);
Var scale(Var x, float factor);

// Sum of all elements as a one-element tensor.
Var sum(Var x);
Var reshape(Var x, Shape shape);

// (m x k) * (k x n). dA = G Bt, dB = At G.
Var matmul(Var a, Var b);
// x (rows x n) + bias (n), broadcast over rows.
Var add_bias(Var x, Var bias);

// Valid convolution, stride 1. input is (C x H x W) or (B x C x H x W),
// kernels (O x C x KH x KW), bias (O).
Var conv2d(Var input, Var kernels, Var bias);
// 2x2 window, stride 2, over the last two axes. Ties go to the first
// element in row-major order.
Var maxpool2d(Var input);

// Mean over rows of -log softmax(logits)[label].
Var softmax_cross_entropy(Var logits, std::span<const int> labels);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator-(Var x) { return neg(x); }

namespace kernels {

// C (m x n) = A (m x k) * B (k x n), or C += A * B when accumulate is set.
// Inner products accumulate in double.
void gemm(const float* a, const float* b, float* c, std::size_t m, std::size_t k, std::size_t n,
          bool accumulate = false);
// B (cols x rows) = A (rows x cols) transposed.
void transpose(const float* a, float* b, std::size_t rows, std::size_t cols);

}  // namespace kernels

}  // namespace plasticity
