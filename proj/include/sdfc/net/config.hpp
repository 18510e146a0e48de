#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "sdfc/error.hpp"

namespace sdfc::net {

enum class CriticVariant { PointNetPP, PointNet };

// One set-abstraction level: farthest-point sampling of n/centroid_div
// centroids, ball grouping, shared per-point MLP, per-group max pool.
struct SetAbstractionSpec {
    std::size_t centroid_div = 4;   // centroid count = max(1, n / centroid_div), n = input cloud size
    double radius = 0.2;
    std::size_t max_neighbors = 32; // ascending index, capped
    std::vector<std::size_t> mlp;
};

struct NetConfig {
    std::size_t latent_dim = 64;
    std::vector<std::size_t> encoder_widths{8, 16, 32, 64};  // last width = latent_dim
    std::size_t gen_depth = 8;
    std::size_t gen_width = 64;
    std::size_t skip_layer = 5;  // latent embedding added to the previous layer's output, before this one
    double leaky_slope = 0.01;
    double layer_norm_eps = 1e-5;
    CriticVariant critic = CriticVariant::PointNetPP;
    std::vector<SetAbstractionSpec> set_abstraction{
        {4, 0.2, 32, {16, 32}},
        {16, 0.4, 32, {32, 64}},
    };
    std::vector<std::size_t> critic_global_mlp{64, 128};
    std::vector<std::size_t> critic_head{64, 32};  // followed by the final scalar layer

    static NetConfig desk() { return NetConfig{}; }

    static NetConfig paper() {
        NetConfig c;
        c.latent_dim = 512;
        c.encoder_widths = {64, 128, 256, 512};
        c.gen_width = 128;
        c.set_abstraction = {
            {4, 0.2, 32, {64, 64, 128}},
            {16, 0.4, 32, {128, 256}},
        };
        c.critic_global_mlp = {256, 512};
        c.critic_head = {256, 128};
        return c;
    }

    void validate() const {
        if (latent_dim == 0) throw ConfigError("latent_dim must be positive");
        if (encoder_widths.empty()) throw ConfigError("encoder_widths must be non-empty");
        for (std::size_t w : encoder_widths)
            if (w == 0) throw ConfigError("encoder widths must be positive");
        if (encoder_widths.back() != latent_dim)
            throw ConfigError("last encoder width must equal latent_dim");
        if (gen_depth == 0 || gen_width == 0) throw ConfigError("generator dims must be positive");
        if (skip_layer < 2 || skip_layer > gen_depth)
            throw ConfigError("skip_layer must lie within the generator depth");
        if (leaky_slope <= 0.0 || leaky_slope >= 1.0) throw ConfigError("leaky slope out of range");
        if (set_abstraction.empty() && critic == CriticVariant::PointNetPP)
            throw ConfigError("pointnet++ critic needs at least one set-abstraction level");
        for (const SetAbstractionSpec& sa : set_abstraction) {
            if (sa.centroid_div == 0) throw ConfigError("centroid_div must be positive");
            if (sa.radius <= 0.0) throw ConfigError("ball radius must be positive");
            if (sa.max_neighbors == 0) throw ConfigError("max_neighbors must be positive");
            if (sa.mlp.empty()) throw ConfigError("set-abstraction MLP must be non-empty");
            for (std::size_t w : sa.mlp)
                if (w == 0) throw ConfigError("set-abstraction widths must be positive");
        }
        for (std::size_t w : critic_global_mlp)
            if (w == 0) throw ConfigError("critic global MLP widths must be positive");
        if (critic_head.size() != 2)
            throw ConfigError("critic head takes exactly two hidden widths (three linear layers)");
        for (std::size_t w : critic_head)
            if (w == 0) throw ConfigError("critic head widths must be positive");
    }
};

inline const char* to_string(CriticVariant v) {
    return v == CriticVariant::PointNetPP ? "pointnet++" : "pointnet";
}

inline CriticVariant critic_from_string(const std::string& s) {
    if (s == "pointnet++") return CriticVariant::PointNetPP;
    if (s == "pointnet") return CriticVariant::PointNet;
    throw ConfigError("unknown critic variant: " + s);
}

}  // namespace sdfc::net
