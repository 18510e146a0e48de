#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "sdfc/binio.hpp"
#include "sdfc/error.hpp"
#include "sdfc/train/state.hpp"

namespace sdfc::train {

inline constexpr char kCheckpointMagic[4] = {'S', 'D', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace ck_detail {

namespace io = sdfc::binio;

inline void write_string(std::ostream& out, const std::string& s) {
    io::write_pod(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& in, const char* what) {
    auto len = io::read_pod<std::uint32_t>(in, what);
    std::string s(len, '\0');
    in.read(s.data(), static_cast<std::streamsize>(len));
    if (!in) throw IoError(std::string("truncated checkpoint: ") + what);
    return s;
}

inline void write_sizes(std::ostream& out, const std::vector<std::size_t>& v) {
    io::write_pod(out, static_cast<std::uint64_t>(v.size()));
    for (std::size_t x : v) io::write_pod(out, static_cast<std::uint64_t>(x));
}

inline std::vector<std::size_t> read_sizes(std::istream& in, const char* what) {
    auto count = io::read_pod<std::uint64_t>(in, what);
    std::vector<std::size_t> v(count);
    for (auto& x : v) x = static_cast<std::size_t>(io::read_pod<std::uint64_t>(in, what));
    return v;
}

inline void write_net_config(std::ostream& out, const net::NetConfig& c) {
    io::write_pod(out, static_cast<std::uint64_t>(c.latent_dim));
    write_sizes(out, c.encoder_widths);
    io::write_pod(out, static_cast<std::uint64_t>(c.gen_depth));
    io::write_pod(out, static_cast<std::uint64_t>(c.gen_width));
    io::write_pod(out, static_cast<std::uint64_t>(c.skip_layer));
    io::write_pod(out, c.leaky_slope);
    io::write_pod(out, c.layer_norm_eps);
    io::write_pod(out, static_cast<std::uint8_t>(c.critic));
    io::write_pod(out, static_cast<std::uint64_t>(c.set_abstraction.size()));
    for (const net::SetAbstractionSpec& sa : c.set_abstraction) {
        io::write_pod(out, static_cast<std::uint64_t>(sa.centroid_div));
        io::write_pod(out, sa.radius);
        io::write_pod(out, static_cast<std::uint64_t>(sa.max_neighbors));
        write_sizes(out, sa.mlp);
    }
    write_sizes(out, c.critic_global_mlp);
    write_sizes(out, c.critic_head);
}

inline net::NetConfig read_net_config(std::istream& in) {
    net::NetConfig c;
    c.latent_dim = static_cast<std::size_t>(io::read_pod<std::uint64_t>(in, "latent dim"));
    c.encoder_widths = read_sizes(in, "encoder widths");
    c.gen_depth = static_cast<std::size_t>(io::read_pod<std::uint64_t>(in, "gen depth"));
    c.gen_width = static_cast<std::size_t>(io::read_pod<std::uint64_t>(in, "gen width"));
    c.skip_layer = static_cast<std::size_t>(io::read_pod<std::uint64_t>(in, "skip layer"));
    c.leaky_slope = io::read_pod<double>(in, "leaky slope");
    c.layer_norm_eps = io::read_pod<double>(in, "layer norm eps");
    auto variant = io::read_pod<std::uint8_t>(in, "critic variant");
    if (variant > 1) throw IoError("checkpoint: unknown critic variant");
    c.critic = static_cast<net::CriticVariant>(variant);
    auto levels = io::read_pod<std::uint64_t>(in, "set abstraction levels");
    c.set_abstraction.clear();
    for (std::uint64_t i = 0; i < levels; ++i) {
        net::SetAbstractionSpec sa;
        sa.centroid_div = static_cast<std::size_t>(io::read_pod<std::uint64_t>(in, "centroid div"));
        sa.radius = io::read_pod<double>(in, "sa radius");
        sa.max_neighbors = static_cast<std::size_t>(io::read_pod<std::uint64_t>(in, "sa cap"));
        sa.mlp = read_sizes(in, "sa mlp");
        c.set_abstraction.push_back(std::move(sa));
    }
    c.critic_global_mlp = read_sizes(in, "global mlp");
    c.critic_head = read_sizes(in, "critic head");
    return c;
}

}  // namespace ck_detail

inline void save_checkpoint(std::ostream& out, const TrainConfig& cfg, const TrainState& st) {
    namespace io = sdfc::binio;
    io::write_magic(out, kCheckpointMagic);
    io::write_pod(out, kCheckpointVersion);
    ck_detail::write_net_config(out, cfg.net);
    io::write_pod(out, cfg.weights.lambda_rec);
    io::write_pod(out, cfg.weights.lambda_norm);
    io::write_pod(out, cfg.weights.lambda_gp);
    ck_detail::write_sizes(out, cfg.schedule.stage_points);
    io::write_pod(out, static_cast<std::uint64_t>(cfg.schedule.epochs_per_stage));
    io::write_pod(out, static_cast<std::uint64_t>(cfg.schedule.refine_epochs));
    io::write_pod(out, cfg.lr_d);
    io::write_pod(out, cfg.lr_eg);
    io::write_pod(out, static_cast<std::uint64_t>(cfg.batch_size));
    io::write_pod(out, cfg.seed);
    io::write_pod(out, static_cast<std::uint64_t>(cfg.checkpoint_every));

    io::write_pod(out, static_cast<std::uint64_t>(st.epoch));
    io::write_pod(out, st.seed);
    io::write_pod(out, static_cast<std::uint64_t>(st.history.size()));
    for (const EpochRow& r : st.history) {
        io::write_pod(out, static_cast<std::uint64_t>(r.epoch));
        io::write_pod(out, static_cast<std::uint64_t>(r.stage));
        io::write_pod(out, r.wasserstein);
        io::write_pod(out, r.gp);
        io::write_pod(out, r.rec);
        io::write_pod(out, r.norm);
        io::write_pod(out, r.total);
    }
    diff::save_params(out, "encoder", st.enc);
    diff::save_params(out, "generator", st.gen);
    diff::save_params(out, "critic", st.disc);
    if (!out) throw IoError("checkpoint write failed");
}

struct Checkpoint {
    TrainConfig config;
    TrainState state;
};

inline Checkpoint load_checkpoint(std::istream& in) {
    namespace io = sdfc::binio;
    io::expect_magic(in, kCheckpointMagic, "checkpoint");
    auto version = io::read_pod<std::uint32_t>(in, "checkpoint version");
    if (version != kCheckpointVersion) throw IoError("unsupported checkpoint version");
    Checkpoint ck;
    ck.config.net = ck_detail::read_net_config(in);
    ck.config.weights.lambda_rec = io::read_pod<double>(in, "lambda_rec");
    ck.config.weights.lambda_norm = io::read_pod<double>(in, "lambda_norm");
    ck.config.weights.lambda_gp = io::read_pod<double>(in, "lambda_gp");
    ck.config.schedule.stage_points = ck_detail::read_sizes(in, "stage points");
    ck.config.schedule.epochs_per_stage =
        static_cast<std::size_t>(io::read_pod<std::uint64_t>(in, "epochs per stage"));
    ck.config.schedule.refine_epochs =
        static_cast<std::size_t>(io::read_pod<std::uint64_t>(in, "refine epochs"));
    ck.config.lr_d = io::read_pod<double>(in, "lr_d");
    ck.config.lr_eg = io::read_pod<double>(in, "lr_eg");
    ck.config.batch_size = static_cast<std::size_t>(io::read_pod<std::uint64_t>(in, "batch size"));
    ck.config.seed = io::read_pod<std::uint64_t>(in, "config seed");
    ck.config.checkpoint_every =
        static_cast<std::size_t>(io::read_pod<std::uint64_t>(in, "checkpoint interval"));

    ck.state.epoch = static_cast<std::size_t>(io::read_pod<std::uint64_t>(in, "epoch"));
    ck.state.seed = io::read_pod<std::uint64_t>(in, "state seed");
    auto rows = io::read_pod<std::uint64_t>(in, "history length");
    ck.state.history.reserve(rows);
    for (std::uint64_t i = 0; i < rows; ++i) {
        EpochRow r;
        r.epoch = static_cast<std::size_t>(io::read_pod<std::uint64_t>(in, "row epoch"));
        r.stage = static_cast<std::size_t>(io::read_pod<std::uint64_t>(in, "row stage"));
        r.wasserstein = io::read_pod<double>(in, "row wasserstein");
        r.gp = io::read_pod<double>(in, "row gp");
        r.rec = io::read_pod<double>(in, "row rec");
        r.norm = io::read_pod<double>(in, "row norm");
        r.total = io::read_pod<double>(in, "row total");
        ck.state.history.push_back(r);
    }
    auto enc = diff::load_params(in);
    auto gen = diff::load_params(in);
    auto disc = diff::load_params(in);
    if (enc.network != "encoder" || gen.network != "generator" || disc.network != "critic")
        throw IoError("checkpoint: parameter blocks out of order");
    ck.state.enc = std::move(enc.store);
    ck.state.gen = std::move(gen.store);
    ck.state.disc = std::move(disc.store);
    ck.config.validate();
    return ck;
}

inline void save_checkpoint(const std::filesystem::path& path, const TrainConfig& cfg,
                            const TrainState& st) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    save_checkpoint(out, cfg, st);
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path.string());
    return load_checkpoint(in);
}

}  // namespace sdfc::train
