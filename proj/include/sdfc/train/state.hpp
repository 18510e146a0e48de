#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "sdfc/diff/param_store.hpp"
#include "sdfc/error.hpp"
#include "sdfc/net/config.hpp"
#include "sdfc/net/discriminator.hpp"
#include "sdfc/net/encoder.hpp"
#include "sdfc/net/generator.hpp"
#include "sdfc/rng.hpp"
#include "sdfc/train/losses.hpp"
#include "sdfc/train/schedule.hpp"

namespace sdfc::train {

struct TrainConfig {
    net::NetConfig net;
    LossWeights weights;
    Schedule schedule;
    double lr_d = 1e-5;
    double lr_eg = 1e-3;
    std::size_t batch_size = 10;  // shapes per optimization step; an epoch chunks
                                  // one round-robin pass over the train split
    std::uint64_t seed = 1;
    std::size_t checkpoint_every = 50;  // epochs

    void validate() const {
        net.validate();
        weights.validate();
        schedule.validate();
        if (!(lr_d > 0.0) || !(lr_eg > 0.0))
            throw ConfigError("trainer: learning rates must be positive");
        if (batch_size < 1) throw ConfigError("trainer: batch_size must be >= 1");
        if (checkpoint_every < 1) throw ConfigError("trainer: checkpoint_every must be >= 1");
    }
};

struct EpochRow {
    std::size_t epoch = 0;
    std::size_t stage = 0;
    double wasserstein = 0.0;
    double gp = 0.0;
    double rec = 0.0;
    double norm = 0.0;
    double total = 0.0;  // generator-side objective
};

struct TrainState {
    std::size_t epoch = 0;  // epochs completed
    diff::ParamStore enc, gen, disc;
    std::uint64_t seed = 0;
    std::vector<EpochRow> history;
};

inline TrainState init_train_state(const TrainConfig& cfg) {
    cfg.validate();
    TrainState st;
    st.seed = cfg.seed;
    Rng re(derive_seed(cfg.seed, 0xE11C));
    Rng rg(derive_seed(cfg.seed, 0x9E11));
    Rng rd(derive_seed(cfg.seed, 0xD15C));
    net::init_encoder(st.enc, cfg.net, re);
    net::init_generator(st.gen, cfg.net, rg);
    net::init_discriminator(st.disc, cfg.net, rd);
    return st;
}

inline constexpr const char* kLossCsvHeader = "epoch,stage,wasserstein,gp,rec,norm,total";

inline std::string format_epoch_row(const EpochRow& r) {
    char buf[192];
    std::snprintf(buf, sizeof buf, "%zu,%zu,%.17g,%.17g,%.17g,%.17g,%.17g", r.epoch, r.stage,
                  r.wasserstein, r.gp, r.rec, r.norm, r.total);
    return buf;
}

// full rewrite from history: resumed runs continue without epoch gaps
inline void write_loss_csv(const std::filesystem::path& path,
                           const std::vector<EpochRow>& history) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write loss csv: " + path.string());
    out << kLossCsvHeader << '\n';
    for (const EpochRow& r : history) out << format_epoch_row(r) << '\n';
    if (!out) throw IoError("loss csv write failed");
}

}  // namespace sdfc::train
