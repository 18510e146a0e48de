#pragma once

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
#include "sdfc/net/value_ops.hpp"
#include "sdfc/rng.hpp"

namespace sdfc::net {

inline void init_generator(diff::ParamStore& store, const NetConfig& cfg, Rng& rng) {
    const std::size_t w = cfg.gen_width;
    diff::add_linear_params(store, "g.point", 3, w, rng);
    diff::add_linear_params(store, "g.zembed", cfg.latent_dim, w, rng);
    for (std::size_t i = 1; i <= cfg.gen_depth; ++i) {
        const std::string l = "g.l" + std::to_string(i);
        diff::add_linear_params(store, l, w, w, rng);
        store.add(l + ".gain", {1, w}, std::vector<double>(w, 1.0));
        store.add(l + ".bias", {1, w}, std::vector<double>(w, 0.0));
    }
    diff::add_linear_params(store, "g.skip", cfg.latent_dim, w, rng);
    // small head so initial fields start near the zero level set
    diff::add_linear_params(store, "g.out", w, 1, rng, 0.1);
}

// Same network with caller-supplied query tensor, so query positions can be
// differentiable leaves (needed by the input-gradient loss).
inline diff::Tensor generate_from_tensor(diff::Tape& t, const diff::BoundParams& p,
                                         const NetConfig& cfg, diff::Tensor x, diff::Tensor z) {
    if (x.shape().cols != 3 || x.shape().rows == 0)
        throw ShapeError("generate: queries must be [k x 3]");
    if (!(z.shape() == diff::Shape{1, cfg.latent_dim}))
        throw ShapeError("generate: latent dimension mismatch");
    const std::size_t k = x.shape().rows;
    diff::Tensor h = t.add(diff::linear(x, p["g.point.w"], p["g.point.b"]),
                           t.repeat_rows(diff::linear(z, p["g.zembed.w"], p["g.zembed.b"]), k));
    for (std::size_t i = 1; i <= cfg.gen_depth; ++i) {
        const std::string l = "g.l" + std::to_string(i);
        diff::Tensor pre = diff::linear(h, p[l + ".w"], p[l + ".b"]);
        diff::Tensor normed = diff::layer_norm_rows(pre, p[l + ".gain"], p[l + ".bias"],
                                                    cfg.layer_norm_eps);
        h = t.leaky_relu(normed, cfg.leaky_slope);
        if (i + 1 == cfg.skip_layer)
            h = t.add(h, t.repeat_rows(diff::linear(z, p["g.skip.w"], p["g.skip.b"]), k));
    }
    return diff::linear(h, p["g.out.w"], p["g.out.b"]);
}

// Signed distances at query points conditioned on z: [k x 1].
// Every op is row-local, so the field is exactly batch-decomposable.
inline diff::Tensor generate(diff::Tape& t, const diff::BoundParams& p, const NetConfig& cfg,
                             std::span<const geom::Vec3> queries, diff::Tensor z) {
    if (queries.empty()) throw InvalidInput("generate: empty query set");
    return generate_from_tensor(t, p, cfg, points_leaf(t, queries), z);
}

// Tape-free forward, bit-identical to generate()
inline std::vector<double> generate_values(const diff::ParamStore& store, const NetConfig& cfg,
                                           std::span<const geom::Vec3> queries,
                                           const std::vector<double>& z) {
    if (queries.empty()) throw InvalidInput("generate: empty query set");
    if (z.size() != cfg.latent_dim) throw ShapeError("generate: latent dimension mismatch");
    const std::size_t k = queries.size();
    const std::size_t w = cfg.gen_width;
    std::vector<double> x;
    x.reserve(k * 3);
    for (const geom::Vec3& q : queries) {
        x.push_back(q.x);
        x.push_back(q.y);
        x.push_back(q.z);
    }
    std::vector<double> zemb =
        value_detail::linear_rows(z, 1, cfg.latent_dim, store.at("g.zembed.w"), store.at("g.zembed.b"));
    std::vector<double> h = value_detail::linear_rows(x, k, 3, store.at("g.point.w"), store.at("g.point.b"));
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < w; ++j) h[i * w + j] += zemb[j];
    std::vector<double> zskip;
    for (std::size_t i = 1; i <= cfg.gen_depth; ++i) {
        const std::string l = "g.l" + std::to_string(i);
        h = value_detail::linear_rows(h, k, w, store.at(l + ".w"), store.at(l + ".b"));
        value_detail::layer_norm_rows_inplace(h, k, w, store.at(l + ".gain"), store.at(l + ".bias"),
                                              cfg.layer_norm_eps);
        value_detail::leaky_relu_inplace(h, cfg.leaky_slope);
        if (i + 1 == cfg.skip_layer) {
            if (zskip.empty())
                zskip = value_detail::linear_rows(z, 1, cfg.latent_dim, store.at("g.skip.w"),
                                                  store.at("g.skip.b"));
            for (std::size_t r = 0; r < k; ++r)
                for (std::size_t j = 0; j < w; ++j) h[r * w + j] += zskip[j];
        }
    }
    return value_detail::linear_rows(h, k, w, store.at("g.out.w"), store.at("g.out.b"));
}

}  // namespace sdfc::net
