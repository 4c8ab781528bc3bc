#pragma once

// Exact structural operations on QTT vectors. None of them rounds; callers
// decide when to compress.

#include "qttv/tt_core.hpp"

namespace qttv {

/// [x, a(0), ..., a(2^d - 2)]; internal ranks grow by one.
template <class T>
TensorTrain<T> push(const TensorTrain<T>& a, T x = T(0));

/// [a(1), ..., a(2^d - 1), y]; internal ranks grow by one.
template <class T>
TensorTrain<T> pull(const TensorTrain<T>& a, T y = T(0));

/// result(k) = a(2^d - 1 - k): swap the slices of every core.
template <class T>
TensorTrain<T> reverse(const TensorTrain<T>& a);

/// First 2^t entries as a t-mode train, 1 <= t <= d.
template <class T>
TensorTrain<T> leading_block(const TensorTrain<T>& a, std::size_t t);

/// [a(2^t + j)] for j < 2^t, 1 <= t <= d - 1.
template <class T>
TensorTrain<T> block_column(const TensorTrain<T>& a, std::size_t t);

/// [a(2^t - j)] for j < 2^t, 1 <= t <= d - 1. The pulled-in fill value never
/// reaches the result.
template <class T>
TensorTrain<T> block_row(const TensorTrain<T>& a, std::size_t t);

/// Concatenation [b, g] with one extra (most significant) mode.
template <class T>
TensorTrain<T> interleave_concat(const TensorTrain<T>& b, const TensorTrain<T>& g);

}  // namespace qttv
