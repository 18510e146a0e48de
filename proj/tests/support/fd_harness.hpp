#pragma once

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "sdfc/diff/tape.hpp"
#include "sdfc/rng.hpp"

namespace fd {

inline double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

// Central-difference oracle. `build` must be a pure function of the leaf
// values: it is re-run on perturbed copies and its scalar output compared
// against the reverse-mode gradient of the unperturbed run.
using BuildFn = std::function<sdfc::diff::Tensor(sdfc::diff::Tape&,
                                                 std::span<const sdfc::diff::Tensor>)>;

inline void check_against_fd(const std::string& label, const std::vector<sdfc::diff::Shape>& shapes,
                             const BuildFn& build, std::vector<std::vector<double>> vals,
                             double h = 1e-5, double tol = 1e-4) {
    using sdfc::diff::Tape;
    using sdfc::diff::Tensor;

    auto eval = [&](const std::vector<std::vector<double>>& v) {
        Tape t;
        std::vector<Tensor> leaves;
        for (std::size_t i = 0; i < shapes.size(); ++i) leaves.push_back(t.leaf(shapes[i], v[i], true));
        return build(t, leaves).scalar();
    };

    Tape t;
    std::vector<Tensor> leaves;
    for (std::size_t i = 0; i < shapes.size(); ++i) leaves.push_back(t.leaf(shapes[i], vals[i], true));
    Tensor out = build(t, leaves);
    std::vector<Tensor> gs = t.grad(out, leaves, false);

    for (std::size_t i = 0; i < shapes.size(); ++i) {
        for (std::size_t k = 0; k < vals[i].size(); ++k) {
            auto vp = vals;
            vp[i][k] += h;
            double fplus = eval(vp);
            vp[i][k] -= 2.0 * h;
            double fminus = eval(vp);
            double fd_grad = (fplus - fminus) / (2.0 * h);
            double g = gs[i].value()[k];
            INFO(label << " input " << i << " entry " << k << " grad " << g << " fd " << fd_grad);
            REQUIRE(rel_err(g, fd_grad) < tol);
        }
    }
}

inline std::vector<double> random_values(std::size_t n, sdfc::Rng& rng, double lo = -1.0,
                                         double hi = 1.0) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(lo, hi);
    return v;
}

// values with |x| >= margin, for ops with a kink or a pole at zero
inline std::vector<double> values_away_from_zero(std::size_t n, sdfc::Rng& rng,
                                                 double margin = 0.05) {
    std::vector<double> v(n);
    for (double& x : v) {
        double m = rng.uniform(margin, 1.0);
        x = rng.uniform01() < 0.5 ? -m : m;
    }
    return v;
}

// pairwise column separation > margin so max arguments are stable under FD
inline std::vector<double> values_with_max_margin(std::size_t rows, std::size_t cols,
                                                  sdfc::Rng& rng, double margin = 1e-2) {
    std::vector<double> v(rows * cols);
    for (std::size_t j = 0; j < cols; ++j) {
        std::vector<double> col(rows);
        for (std::size_t i = 0; i < rows; ++i) col[i] = rng.uniform(-1.0, 1.0);
        std::sort(col.begin(), col.end());
        for (std::size_t i = 1; i < rows; ++i)
            if (col[i] - col[i - 1] < margin) col[i] = col[i - 1] + margin;
        rng.shuffle(col);
        for (std::size_t i = 0; i < rows; ++i) v[i * cols + j] = col[i];
    }
    return v;
}

}  // namespace fd
