#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "sdfc/diff/ops.hpp"
#include "sdfc/diff/param_store.hpp"
#include "sdfc/diff/tape.hpp"
#include "sdfc/error.hpp"
#include "sdfc/geom/vec3.hpp"
#include "sdfc/net/config.hpp"
#include "sdfc/net/encoder.hpp"
#include "sdfc/net/point_ops.hpp"
#include "sdfc/rng.hpp"

namespace sdfc::net {

namespace critic_detail {

inline std::size_t last_point_width(const NetConfig& cfg) {
    if (cfg.critic == CriticVariant::PointNetPP) return cfg.set_abstraction.back().mlp.back();
    std::size_t w = 4;
    for (const SetAbstractionSpec& sa : cfg.set_abstraction) w = sa.mlp.back();
    return w;
}

}  // namespace critic_detail

inline void init_discriminator(diff::ParamStore& store, const NetConfig& cfg, Rng& rng) {
    if (cfg.critic == CriticVariant::PointNetPP) {
        std::size_t fan = 4;  // relative xyz + field value
        for (std::size_t lvl = 0; lvl < cfg.set_abstraction.size(); ++lvl) {
            const SetAbstractionSpec& sa = cfg.set_abstraction[lvl];
            for (std::size_t j = 0; j < sa.mlp.size(); ++j) {
                diff::add_linear_params(
                    store, "d.sa" + std::to_string(lvl) + ".l" + std::to_string(j), fan, sa.mlp[j], rng);
                fan = sa.mlp[j];
            }
            fan += 3;  // next level concatenates relative coords again
        }
    } else {
        // ablation: one per-point MLP over absolute (x, y, z, d)
        std::size_t fan = 4, j = 0;
        for (const SetAbstractionSpec& sa : cfg.set_abstraction)
            for (std::size_t w : sa.mlp) {
                diff::add_linear_params(store, "d.pn.l" + std::to_string(j++), fan, w, rng);
                fan = w;
            }
    }
    std::size_t fan = critic_detail::last_point_width(cfg);
    for (std::size_t j = 0; j < cfg.critic_global_mlp.size(); ++j) {
        diff::add_linear_params(store, "d.global.l" + std::to_string(j), fan, cfg.critic_global_mlp[j],
                                rng);
        fan = cfg.critic_global_mlp[j];
    }
    diff::add_linear_params(store, "d.head.l0", fan, cfg.critic_head[0], rng);
    diff::add_linear_params(store, "d.head.l1", cfg.critic_head[0], cfg.critic_head[1], rng);
    diff::add_linear_params(store, "d.head.l2", cfg.critic_head[1], 1, rng);
}

// WGAN critic score for a signed distance field over query positions.
// `field` is [n x 1] on the tape (gradients flow through it); positions are
// plain geometry and enter the tape as constants.
inline diff::Tensor discriminate(diff::Tape& t, const diff::BoundParams& p, const NetConfig& cfg,
                                 std::span<const geom::Vec3> positions, diff::Tensor field) {
    const std::size_t n = positions.size();
    if (n == 0) throw InvalidInput("discriminate: empty cloud");
    if (!(field.shape() == diff::Shape{n, 1}))
        throw ShapeError("discriminate: field length must match query count");

    diff::Tensor feats = field;
    if (cfg.critic == CriticVariant::PointNetPP) {
        std::vector<geom::Vec3> coords(positions.begin(), positions.end());
        for (std::size_t lvl = 0; lvl < cfg.set_abstraction.size(); ++lvl) {
            const SetAbstractionSpec& sa = cfg.set_abstraction[lvl];
            std::size_t c = std::max<std::size_t>(1, n / sa.centroid_div);
            c = std::min(c, coords.size());
            std::vector<std::size_t> centroids = farthest_point_sample(coords, c, 0);

            std::vector<std::size_t> flat_idx, group_of;
            std::vector<double> rel;
            for (std::size_t g = 0; g < centroids.size(); ++g) {
                const geom::Vec3& cp = coords[centroids[g]];
                std::vector<std::size_t> nb = ball_query(coords, cp, sa.radius, sa.max_neighbors);
                if (nb.empty()) nb.push_back(centroids[g]);  // fall back to the centroid itself
                for (std::size_t i : nb) {
                    flat_idx.push_back(i);
                    group_of.push_back(g);
                    const geom::Vec3 r = coords[i] - cp;
                    rel.push_back(r.x);
                    rel.push_back(r.y);
                    rel.push_back(r.z);
                }
            }
            diff::Tensor rel_t = t.leaf({flat_idx.size(), 3}, std::move(rel));
            diff::Tensor x = t.concat_cols(rel_t, t.gather_rows(feats, flat_idx));
            for (std::size_t j = 0; j < sa.mlp.size(); ++j) {
                const std::string l = "d.sa" + std::to_string(lvl) + ".l" + std::to_string(j);
                x = t.leaky_relu(diff::linear(x, p[l + ".w"], p[l + ".b"]), cfg.leaky_slope);
            }
            feats = t.group_max(x, group_of, centroids.size());

            std::vector<geom::Vec3> next;
            next.reserve(centroids.size());
            for (std::size_t ci : centroids) next.push_back(coords[ci]);
            coords = std::move(next);
        }
    } else {
        diff::Tensor x = t.concat_cols(points_leaf(t, positions), field);
        std::size_t layers = 0;
        for (const SetAbstractionSpec& sa : cfg.set_abstraction) layers += sa.mlp.size();
        for (std::size_t j = 0; j < layers; ++j) {
            const std::string l = "d.pn.l" + std::to_string(j);
            x = t.leaky_relu(diff::linear(x, p[l + ".w"], p[l + ".b"]), cfg.leaky_slope);
        }
        feats = x;
    }

    diff::Tensor x = feats;
    for (std::size_t j = 0; j < cfg.critic_global_mlp.size(); ++j) {
        const std::string l = "d.global.l" + std::to_string(j);
        x = t.leaky_relu(diff::linear(x, p[l + ".w"], p[l + ".b"]), cfg.leaky_slope);
    }
    diff::Tensor pooled = t.max_pool_rows(x);
    diff::Tensor h = t.leaky_relu(diff::linear(pooled, p["d.head.l0.w"], p["d.head.l0.b"]),
                                  cfg.leaky_slope);
    h = t.leaky_relu(diff::linear(h, p["d.head.l1.w"], p["d.head.l1.b"]), cfg.leaky_slope);
    return diff::linear(h, p["d.head.l2.w"], p["d.head.l2.b"]);
}

}  // namespace sdfc::net
