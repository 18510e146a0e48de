#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "sdfc/data/corpus.hpp"
#include "sdfc/diff/ops.hpp"
#include "sdfc/diff/param_store.hpp"
#include "sdfc/diff/tape.hpp"
#include "sdfc/error.hpp"
#include "sdfc/net/discriminator.hpp"
#include "sdfc/net/encoder.hpp"
#include "sdfc/net/generator.hpp"
#include "sdfc/rng.hpp"
#include "sdfc/train/checkpoint.hpp"
#include "sdfc/train/losses.hpp"
#include "sdfc/train/state.hpp"

namespace sdfc::train {

namespace tr_detail {

inline std::uint64_t value_checksum(const diff::ParamStore& store) {
    std::uint64_t h = 1469598103934665603ULL;  // FNV-1a over the raw value bytes
    for (const diff::Param& p : store)
        for (double v : p.value) {
            std::uint64_t bits;
            std::memcpy(&bits, &v, sizeof bits);
            for (int b = 0; b < 8; ++b) {
                h ^= (bits >> (8 * b)) & 0xffULL;
                h *= 1099511628211ULL;
            }
        }
    return h;
}

inline std::vector<std::vector<double>> zero_grads(const diff::ParamStore& store) {
    std::vector<std::vector<double>> g;
    g.reserve(store.size());
    for (const diff::Param& p : store) g.emplace_back(p.value.size(), 0.0);
    return g;
}

inline void accumulate(std::vector<std::vector<double>>& into,
                       std::span<const diff::Tensor> grads) {
    for (std::size_t i = 0; i < grads.size(); ++i) {
        const std::vector<double>& v = grads[i].value();
        std::vector<double>& dst = into[i];
        for (std::size_t k = 0; k < v.size(); ++k) dst[k] += v[k];
    }
}

inline void scale_grads(std::vector<std::vector<double>>& g, double s) {
    for (auto& v : g)
        for (double& x : v) x *= s;
}

// one shape's training sample at the current stage size
struct BatchSample {
    const data::ShapeRecord* record = nullptr;
    std::vector<geom::Vec3> u;    // uniform queries, sub-sampled from the pool
    std::vector<double> d_full;   // pool distances at u
    geom::PointCloud v_part;      // partial surface input with normals
    double lambda = 0.0;          // GP interpolation coefficient
};

inline BatchSample build_sample(const data::ShapeRecord& rec, std::size_t n, Rng& rng) {
    BatchSample s;
    s.record = &rec;
    std::vector<std::size_t> idx = rng.sample_without_replacement(rec.sdf.size(), n);
    s.u.reserve(n);
    s.d_full.reserve(n);
    for (std::size_t i : idx) {
        s.u.push_back(rec.sdf.queries[i]);
        s.d_full.push_back(rec.sdf.distances[i]);
    }
    geom::PointCloud cut = data::draw_partial(rec, data::PartialMode::Train, rng);
    s.v_part = geom::subsample(cut, n, rng);
    s.lambda = rng.uniform01();
    return s;
}

}  // namespace tr_detail

// One pass over the train split in round-robin chunks of batch_size. Each
// chunk runs a critic update on the current generator's fields, then one
// joint encoder+generator update against the fresh critic.
inline EpochRow train_epoch(TrainState& st, const TrainConfig& cfg,
                            std::span<const data::ShapeRecord* const> shapes) {
    if (shapes.empty()) throw InvalidInput("train_epoch: no training shapes");
    if (cfg.batch_size == 0) throw InvalidInput("train_epoch: batch_size must be >= 1");
    const std::size_t epoch = st.epoch;
    const std::size_t stage = cfg.schedule.stage_at(epoch);
    const std::size_t n = cfg.schedule.stage_points[stage];
    const std::size_t batch = std::min(cfg.batch_size, shapes.size());
    const std::size_t chunks = (shapes.size() + batch - 1) / batch;

    std::string batch_desc;
    try {
        EpochRow row;
        row.epoch = epoch;
        row.stage = stage;

        std::vector<tr_detail::BatchSample> samples;
        samples.reserve(batch);
        for (std::size_t c = 0; c < chunks; ++c) {
            // the chunk counter feeds both the round-robin offset and the sample
            // seeds, so a one-chunk epoch draws exactly what a one-batch epoch did
            const std::size_t step = epoch * chunks + c;
            samples.clear();
            batch_desc.clear();
            for (std::size_t j = 0; j < batch; ++j) {
                std::size_t g = (step * batch + j) % shapes.size();
                const data::ShapeRecord& rec = *shapes[g];
                if (rec.sdf.size() < n || rec.surface.size() < 2 * n)
                    throw InvalidInput("train_epoch: record " + rec.id +
                                       " too small for stage size " + std::to_string(n));
                Rng rng(derive_seed(st.seed, step, g, 0xBA7C));
                samples.push_back(tr_detail::build_sample(rec, n, rng));
                batch_desc += rec.id + " ";
            }

            // critic step; d_rec comes from the value path, which matches the
            // taped generator bit for bit
            auto d_accum = tr_detail::zero_grads(st.disc);
            for (const tr_detail::BatchSample& s : samples) {
                std::vector<double> z = net::encode_values(st.enc, cfg.net, s.v_part.points);
                std::vector<double> d_rec = net::generate_values(st.gen, cfg.net, s.u, z);
                diff::Tape td;
                diff::BoundParams bd = diff::bind(td, st.disc);
                auto critic = [&](diff::Tensor f) {
                    return net::discriminate(td, bd, cfg.net, s.u, f);
                };
                GanLosses gl = gan_critic_losses(td, critic, s.d_full, d_rec, s.lambda);
                diff::Tensor d_loss =
                    td.add(td.scale(gl.wasserstein, -1.0), td.scale(gl.gp, cfg.weights.lambda_gp));
                std::vector<diff::Tensor> grads = td.grad(d_loss, bd.tensors, false);
                tr_detail::accumulate(d_accum, grads);
                row.wasserstein += gl.wasserstein.value()[0];
                row.gp += gl.gp.value()[0];
            }
            tr_detail::scale_grads(d_accum, 1.0 / static_cast<double>(batch));
            diff::rmsprop_step(st.disc, d_accum, cfg.lr_d);

            // joint encoder+generator step against the updated critic
            const std::uint64_t disc_sum = tr_detail::value_checksum(st.disc);
            auto e_accum = tr_detail::zero_grads(st.enc);
            auto g_accum = tr_detail::zero_grads(st.gen);
            for (const tr_detail::BatchSample& s : samples) {
                diff::Tape tg;
                diff::BoundParams be = diff::bind(tg, st.enc);
                diff::BoundParams bg = diff::bind(tg, st.gen);
                diff::BoundParams bdg = diff::bind(tg, st.disc);

                diff::Tensor z = net::encode(tg, be, cfg.net, s.v_part.points);
                diff::Tensor d_rec = net::generate(tg, bg, cfg.net, s.u, z);
                diff::Tensor score = net::discriminate(tg, bdg, cfg.net, s.u, d_rec);

                std::vector<double> flat;
                flat.reserve(s.v_part.size() * 3);
                for (const geom::Vec3& p : s.v_part.points) {
                    flat.push_back(p.x);
                    flat.push_back(p.y);
                    flat.push_back(p.z);
                }
                diff::Tensor xv = tg.leaf({s.v_part.size(), 3}, std::move(flat), true);
                diff::Tensor d_v = net::generate_from_tensor(tg, bg, cfg.net, xv, z);
                diff::Tensor l_rec = loss_rec_from_field(tg, d_v);
                diff::Tensor grad_rows = tg.grad(tg.sum_all(d_v), {xv}, true)[0];
                diff::Tensor l_norm = loss_norm_from_rows(tg, grad_rows, s.v_part.normals);

                diff::Tensor total =
                    tg.add(tg.add(tg.scale(score, -1.0), tg.scale(l_rec, cfg.weights.lambda_rec)),
                           tg.scale(l_norm, cfg.weights.lambda_norm));

                std::vector<diff::Tensor> wrt = be.tensors;
                wrt.insert(wrt.end(), bg.tensors.begin(), bg.tensors.end());
                std::vector<diff::Tensor> grads = tg.grad(total, wrt, false);
                tr_detail::accumulate(e_accum, std::span(grads).first(be.tensors.size()));
                tr_detail::accumulate(g_accum, std::span(grads).subspan(be.tensors.size()));
                row.rec += l_rec.value()[0];
                row.norm += l_norm.value()[0];
                row.total += total.value()[0];
            }
            tr_detail::scale_grads(e_accum, 1.0 / static_cast<double>(batch));
            tr_detail::scale_grads(g_accum, 1.0 / static_cast<double>(batch));
            diff::rmsprop_step(st.enc, e_accum, cfg.lr_eg);
            diff::rmsprop_step(st.gen, g_accum, cfg.lr_eg);
            if (tr_detail::value_checksum(st.disc) != disc_sum)
                throw DiagnosticError("train_epoch: critic parameters mutated by the E+G step");
        }

        double inv = 1.0 / static_cast<double>(chunks * batch);
        row.wasserstein *= inv;
        row.gp *= inv;
        row.rec *= inv;
        row.norm *= inv;
        row.total *= inv;
        st.history.push_back(row);
        st.epoch = epoch + 1;
        return row;
    } catch (const DiagnosticError& e) {
        throw DiagnosticError("epoch " + std::to_string(epoch) + ", stage " +
                              std::to_string(stage) + ", batch [ " + batch_desc + "]: " +
                              e.what());
    }
}

inline std::vector<const data::ShapeRecord*> train_split_view(
    std::span<const data::ShapeRecord> corpus) {
    std::vector<const data::ShapeRecord*> out;
    for (const data::ShapeRecord& r : corpus)
        if (r.split == data::Split::Train) out.push_back(&r);
    return out;
}

inline std::filesystem::path checkpoint_path(const std::filesystem::path& out_dir,
                                             std::size_t epoch) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "checkpoint_%05zu.bin", epoch);
    return out_dir / buf;
}

// Drives the full schedule from wherever `st` stands: CSV rewritten from the
// persisted history every epoch, checkpoints on the configured cadence, NaN
// aborts dumped to nan_dump.txt and rethrown.
inline TrainState run_training(const TrainConfig& cfg, std::span<const data::ShapeRecord> corpus,
                               const std::filesystem::path& out_dir, TrainState st) {
    cfg.validate();
    std::filesystem::create_directories(out_dir);
    std::vector<const data::ShapeRecord*> shapes = train_split_view(corpus);
    if (shapes.empty()) throw InvalidInput("run_training: corpus has no train-split shapes");

    const std::size_t total = cfg.schedule.total_epochs();
    while (st.epoch < total) {
        try {
            train_epoch(st, cfg, shapes);
        } catch (const DiagnosticError& e) {
            std::ofstream dump(out_dir / "nan_dump.txt");
            dump << e.what() << "\n\nrecent loss rows:\n" << kLossCsvHeader << '\n';
            std::size_t from = st.history.size() > 20 ? st.history.size() - 20 : 0;
            for (std::size_t i = from; i < st.history.size(); ++i)
                dump << format_epoch_row(st.history[i]) << '\n';
            throw;
        }
        write_loss_csv(out_dir / "losses.csv", st.history);
        if (st.epoch % cfg.checkpoint_every == 0 || st.epoch == total)
            save_checkpoint(checkpoint_path(out_dir, st.epoch), cfg, st);
    }
    save_checkpoint(out_dir / "checkpoint_final.bin", cfg, st);
    return st;
}

inline TrainState run_training(const TrainConfig& cfg, std::span<const data::ShapeRecord> corpus,
                               const std::filesystem::path& out_dir) {
    return run_training(cfg, corpus, out_dir, init_train_state(cfg));
}

}  // namespace sdfc::train
