#pragma once

#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "sdfc/diff/ops.hpp"
#include "sdfc/diff/param_store.hpp"
#include "sdfc/diff/tape.hpp"
#include "sdfc/error.hpp"
#include "sdfc/geom/point_cloud.hpp"
#include "sdfc/net/generator.hpp"

namespace sdfc::train {

struct LossWeights {
    double lambda_rec = 8e-3;
    double lambda_norm = 0.01;
    double lambda_gp = 10.0;

    void validate() const {
        if (lambda_rec < 0.0 || lambda_norm < 0.0 || lambda_gp < 0.0)
            throw ConfigError("loss weights must be nonnegative");
    }
};

struct GanLosses {
    diff::Tensor wasserstein;  // E[D(d_full)] - E[D(d_rec)], the critic's objective
    diff::Tensor gp;           // (|grad_dhat D| - 1)^2 at the interpolated field
};

// Critic objective and gradient penalty for one shape. `critic` maps a
// [n x 1] field tensor on `t` to a scalar score; the interpolation
// coefficient is drawn by the caller (one per batch element). The penalty
// gradient is taken w.r.t. the interpolated field and stays differentiable.
template <typename Critic>
GanLosses gan_critic_losses(diff::Tape& t, Critic&& critic, std::span<const double> d_full,
                            std::span<const double> d_rec, double lambda) {
    if (d_full.size() != d_rec.size())
        throw ShapeError("gan losses: field lengths differ");
    if (d_full.empty()) throw ShapeError("gan losses: empty fields");
    const std::size_t n = d_full.size();

    diff::Tensor full = t.leaf({n, 1}, std::vector<double>(d_full.begin(), d_full.end()));
    diff::Tensor rec = t.leaf({n, 1}, std::vector<double>(d_rec.begin(), d_rec.end()));
    diff::Tensor wasserstein = t.sub(critic(full), critic(rec));

    std::vector<double> mixed(n);
    for (std::size_t i = 0; i < n; ++i) mixed[i] = (1.0 - lambda) * d_full[i] + lambda * d_rec[i];
    diff::Tensor dhat = t.leaf({n, 1}, std::move(mixed), true);
    diff::Tensor score_hat = critic(dhat);
    diff::Tensor g = t.grad(score_hat, {dhat}, true)[0];
    diff::Tensor excess = t.add_const(diff::l2_norm(g), -1.0);
    return {wasserstein, t.mul(excess, excess)};
}

// RMS of the predicted distances at the partial input points: |d|_2 / sqrt(m)
inline diff::Tensor loss_rec_from_field(diff::Tape& t, diff::Tensor d_pred) {
    if (d_pred.shape().cols != 1 || d_pred.shape().rows == 0)
        throw ShapeError("loss_rec: prediction must be [m x 1]");
    return t.scale(diff::l2_norm(d_pred),
                   1.0 / std::sqrt(static_cast<double>(d_pred.shape().rows)));
}

// mean over points of |grad_x SDF(x_i) - n_i|_2, given the gradient rows
inline diff::Tensor loss_norm_from_rows(diff::Tape& t, diff::Tensor grad_rows,
                                        std::span<const geom::Vec3> normals) {
    const std::size_t m = normals.size();
    if (!(grad_rows.shape() == diff::Shape{m, 3}))
        throw ShapeError("loss_norm: gradient rows must be [m x 3]");
    std::vector<double> flat;
    flat.reserve(m * 3);
    for (const geom::Vec3& nv : normals) {
        flat.push_back(nv.x);
        flat.push_back(nv.y);
        flat.push_back(nv.z);
    }
    diff::Tensor target = t.leaf({m, 3}, std::move(flat));
    diff::Tensor diffs = t.sub(grad_rows, target);
    return t.scale(t.sum_all(diff::row_norms(diffs)), 1.0 / static_cast<double>(m));
}

// Per-point spatial gradients of the generator field at `queries`: [k x 3],
// recorded with create_graph so the result can be trained through. Row i is
// exactly the gradient at query i because the generator is per-point.
inline diff::Tensor generator_input_gradients(diff::Tape& t, const diff::BoundParams& gen,
                                              const net::NetConfig& cfg, diff::Tensor queries,
                                              diff::Tensor z) {
    diff::Tensor d = net::generate_from_tensor(t, gen, cfg, queries, z);
    return t.grad(t.sum_all(d), {queries}, true)[0];
}

// Self-contained forms matching the training objective, one shape at a time.

inline diff::Tensor loss_rec(diff::Tape& t, const diff::BoundParams& gen,
                             const net::NetConfig& cfg, std::span<const geom::Vec3> v_part,
                             diff::Tensor z) {
    return loss_rec_from_field(t, net::generate(t, gen, cfg, v_part, z));
}

inline diff::Tensor loss_norm(diff::Tape& t, const diff::BoundParams& gen,
                              const net::NetConfig& cfg, const geom::PointCloud& v_part,
                              diff::Tensor z) {
    if (!v_part.has_normals()) throw InvalidInput("loss_norm: partial input has no normals");
    if (v_part.points.empty()) throw InvalidInput("loss_norm: empty partial input");
    std::vector<double> flat;
    flat.reserve(v_part.points.size() * 3);
    for (const geom::Vec3& p : v_part.points) {
        flat.push_back(p.x);
        flat.push_back(p.y);
        flat.push_back(p.z);
    }
    diff::Tensor x = t.leaf({v_part.points.size(), 3}, std::move(flat), true);
    diff::Tensor rows = generator_input_gradients(t, gen, cfg, x, z);
    return loss_norm_from_rows(t, rows, v_part.normals);
}

}  // namespace sdfc::train
