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
#include "sdfc/net/value_ops.hpp"
#include "sdfc/rng.hpp"

namespace sdfc::net {

inline diff::Tensor points_leaf(diff::Tape& t, std::span<const geom::Vec3> points) {
    std::vector<double> flat;
    flat.reserve(points.size() * 3);
    for (const geom::Vec3& p : points) {
        flat.push_back(p.x);
        flat.push_back(p.y);
        flat.push_back(p.z);
    }
    return t.leaf({points.size(), 3}, std::move(flat));
}

inline void init_encoder(diff::ParamStore& store, const NetConfig& cfg, Rng& rng) {
    std::size_t fan_in = 3;
    for (std::size_t i = 0; i < cfg.encoder_widths.size(); ++i) {
        diff::add_linear_params(store, "e.l" + std::to_string(i), fan_in, cfg.encoder_widths[i], rng);
        fan_in = cfg.encoder_widths[i];
    }
}

// Per-point MLP over xyz followed by a max pool over points -> [1 x latent].
inline diff::Tensor encode(diff::Tape& t, const diff::BoundParams& p, const NetConfig& cfg,
                           std::span<const geom::Vec3> points) {
    if (points.empty()) throw InvalidInput("encode: empty cloud");
    diff::Tensor x = points_leaf(t, points);
    for (std::size_t i = 0; i < cfg.encoder_widths.size(); ++i) {
        const std::string l = "e.l" + std::to_string(i);
        x = t.leaky_relu(diff::linear(x, p[l + ".w"], p[l + ".b"]), cfg.leaky_slope);
    }
    return t.max_pool_rows(x);
}

// Tape-free forward, bit-identical to encode()
inline std::vector<double> encode_values(const diff::ParamStore& store, const NetConfig& cfg,
                                         std::span<const geom::Vec3> points) {
    if (points.empty()) throw InvalidInput("encode: empty cloud");
    const std::size_t n = points.size();
    std::vector<double> x;
    x.reserve(n * 3);
    for (const geom::Vec3& p : points) {
        x.push_back(p.x);
        x.push_back(p.y);
        x.push_back(p.z);
    }
    std::size_t width = 3;
    for (std::size_t i = 0; i < cfg.encoder_widths.size(); ++i) {
        const std::string l = "e.l" + std::to_string(i);
        x = value_detail::linear_rows(x, n, width, store.at(l + ".w"), store.at(l + ".b"));
        value_detail::leaky_relu_inplace(x, cfg.leaky_slope);
        width = cfg.encoder_widths[i];
    }
    return value_detail::max_pool_rows(x, n, width);
}

}  // namespace sdfc::net
