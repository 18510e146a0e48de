#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "sdfc/diff/param_store.hpp"

namespace sdfc::net::value_detail {

// Plain-value mirrors of the tape ops used by the forward passes. Loop
// structure and accumulation order must match the tape implementations
// exactly: the contract is bit-for-bit agreement with the recorded path.

// x[m x in] @ w[in x out] + b[1 x out]
inline std::vector<double> linear_rows(const std::vector<double>& x, std::size_t m, std::size_t in,
                                       const diff::Param& w, const diff::Param& b) {
    const std::size_t out = w.shape.cols;
    std::vector<double> y(m * out, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        double* yrow = y.data() + i * out;
        const double* xrow = x.data() + i * in;
        for (std::size_t k = 0; k < in; ++k) {
            double xik = xrow[k];
            if (xik == 0.0) continue;
            const double* wrow = w.value.data() + k * out;
            for (std::size_t j = 0; j < out; ++j) yrow[j] += xik * wrow[j];
        }
        for (std::size_t j = 0; j < out; ++j) yrow[j] += b.value[j];
    }
    return y;
}

inline void leaky_relu_inplace(std::vector<double>& x, double slope) {
    for (double& v : x) v = v > 0.0 ? v : slope * v;
}

inline void layer_norm_rows_inplace(std::vector<double>& x, std::size_t m, std::size_t n,
                                    const diff::Param& gain, const diff::Param& bias, double eps) {
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < m; ++i) {
        double* row = x.data() + i * n;
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) sum += row[j];
        const double mean = sum * inv_n;
        double var_sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double c = row[j] - mean;
            var_sum += c * c;
        }
        const double sd = std::sqrt(var_sum * inv_n + eps);
        for (std::size_t j = 0; j < n; ++j) {
            const double normed = (row[j] - mean) / sd;
            row[j] = normed * gain.value[j] + bias.value[j];
        }
    }
}

// column-wise max over rows: [m x n] -> [1 x n]
inline std::vector<double> max_pool_rows(const std::vector<double>& x, std::size_t m, std::size_t n) {
    std::vector<double> y(n);
    for (std::size_t j = 0; j < n; ++j) {
        double best = x[j];
        for (std::size_t i = 1; i < m; ++i) best = std::max(best, x[i * n + j]);
        y[j] = best;
    }
    return y;
}

}  // namespace sdfc::net::value_detail
