#pragma once

#include <cstddef>

#include "sdfc/diff/tape.hpp"

namespace sdfc::diff {

inline Tensor square(Tensor x) { return x.tape->mul(x, x); }

inline Tensor mean_all(Tensor x) {
    Tape& t = *x.tape;
    return t.scale(t.sum_all(x), 1.0 / static_cast<double>(x.shape().count()));
}

// Euclidean norm of all entries: sqrt(sum x^2). Not differentiable at 0.
inline Tensor l2_norm(Tensor x) {
    Tape& t = *x.tape;
    return t.sqrt(t.sum_all(square(x)));
}

// per-row Euclidean norms: [m x n] -> [m x 1]
inline Tensor row_norms(Tensor x) {
    Tape& t = *x.tape;
    return t.sqrt(t.sum_cols(square(x)));
}

// x[m x in] * w[in x out] + b[1 x out]
inline Tensor linear(Tensor x, Tensor w, Tensor b) {
    Tape& t = *x.tape;
    return t.add(t.matmul(x, w), t.repeat_rows(b, x.shape().rows));
}

// Row-wise layer normalization with learnable affine terms.
// gain/bias are [1 x n]; eps keeps the zero-variance row finite (output 0).
inline Tensor layer_norm_rows(Tensor x, Tensor gain, Tensor bias, double eps = 1e-5) {
    Tape& t = *x.tape;
    const std::size_t m = x.shape().rows, n = x.shape().cols;
    Tensor mean = t.scale(t.sum_cols(x), 1.0 / static_cast<double>(n));
    Tensor centered = t.sub(x, t.repeat_cols(mean, n));
    Tensor var = t.scale(t.sum_cols(square(centered)), 1.0 / static_cast<double>(n));
    Tensor inv_std = t.sqrt(t.add_const(var, eps));
    Tensor normed = t.div(centered, t.repeat_cols(inv_std, n));
    return t.add(t.mul(normed, t.repeat_rows(gain, m)), t.repeat_rows(bias, m));
}

}  // namespace sdfc::diff
