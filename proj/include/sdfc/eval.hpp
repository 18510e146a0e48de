#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "sdfc/data/corpus.hpp"
#include "sdfc/error.hpp"
#include "sdfc/geom/chamfer.hpp"
#include "sdfc/geom/sampling.hpp"
#include "sdfc/rng.hpp"
#include "sdfc/train/complete.hpp"
#include "sdfc/train/trainer.hpp"

namespace sdfc::eval {

inline constexpr double kCurveMaxThreshold = 0.05;
inline constexpr std::size_t kCurveSamples = 51;  // uniform over [0, 0.05], cap sample appended

struct ShapeEval {
    std::string id;
    double cd = 0.0;         // gen_to_gt + gt_to_gen
    double gen_to_gt = 0.0;  // mean squared nearest distance, X_rec into X_full
    double gt_to_gen = 0.0;
};

struct CurveSample {
    double threshold = 0.0;  // squared-distance threshold
    double frac_gen_to_gt = 0.0;
    double frac_gt_to_gen = 0.0;
};

struct EvalReport {
    std::vector<ShapeEval> shapes;      // successful completions, input order
    std::vector<std::string> failures;  // shapes whose field never crossed zero
    double mean_cd = 0.0;
    double mean_gen_to_gt = 0.0;
    double mean_gt_to_gen = 0.0;
    // cumulative fraction of pooled per-point squared distances at or below
    // each threshold; final sample sits at the largest observed distance so
    // the curve always ends at 1
    std::vector<CurveSample> curve;

    void check() const {
        double s = 0.0;
        for (const ShapeEval& r : shapes) s += r.cd;
        double m = shapes.empty() ? 0.0 : s / static_cast<double>(shapes.size());
        if (std::abs(m - mean_cd) > 1e-12 * std::max(1.0, std::abs(m)))
            throw DiagnosticError("eval report: mean cd does not match its rows");
        for (std::size_t i = 1; i < curve.size(); ++i) {
            if (curve[i].threshold < curve[i - 1].threshold ||
                curve[i].frac_gen_to_gt < curve[i - 1].frac_gen_to_gt ||
                curve[i].frac_gt_to_gen < curve[i - 1].frac_gt_to_gen)
                throw DiagnosticError("eval report: cumulative curve must be non-decreasing");
        }
        if (!curve.empty() &&
            (curve.back().frac_gen_to_gt != 1.0 || curve.back().frac_gt_to_gen != 1.0))
            throw DiagnosticError("eval report: cumulative curve must end at 1");
    }
};

namespace eval_detail {

inline constexpr std::uint64_t kEvalSalt = 0xE7A1;

// cumulative fraction of values <= t, for sorted values
inline double cum_frac(const std::vector<double>& sorted, double t) {
    auto it = std::upper_bound(sorted.begin(), sorted.end(), t);
    return static_cast<double>(it - sorted.begin()) / static_cast<double>(sorted.size());
}

struct ShapeOutcome {
    bool failed = false;
    ShapeEval row;
    std::vector<double> d_gen_to_gt, d_gt_to_gen;  // per-point squared distances
    std::exception_ptr error;
};

// one test shape: draw the test-mode partial, optionally thin it, complete,
// sample both surfaces, measure
inline ShapeOutcome eval_one(const diff::ParamStore& enc, const diff::ParamStore& gen,
                             const net::NetConfig& net_cfg, const data::ShapeRecord& rec,
                             std::size_t eval_points, int grid_res, std::uint64_t seed,
                             std::uint64_t index, std::size_t thin_to, double forced_ratio) {
    ShapeOutcome out;
    out.row.id = rec.id;
    try {
        Rng rng(derive_seed(seed, index, 0, kEvalSalt));
        geom::PointCloud v_part = forced_ratio > 0.0
                                      ? data::draw_partial_at(rec, forced_ratio, rng)
                                      : data::draw_partial(rec, data::PartialMode::Test, rng);
        if (thin_to > 0 && thin_to < v_part.size()) {
            std::vector<std::size_t> keep = rng.sample_without_replacement(v_part.size(), thin_to);
            std::sort(keep.begin(), keep.end());
            geom::PointCloud thin;
            for (std::size_t i : keep) {
                thin.points.push_back(v_part.points[i]);
                if (v_part.has_normals()) thin.normals.push_back(v_part.normals[i]);
            }
            v_part = std::move(thin);
        }
        geom::TriMesh mesh_rec = train::complete(enc, gen, net_cfg, v_part, grid_res);
        geom::PointCloud x_rec = geom::sample_surface(mesh_rec, eval_points, rng);
        geom::PointCloud x_full = geom::sample_surface(rec.mesh, eval_points, rng);
        out.d_gen_to_gt = geom::nearest_sq_distances(x_rec, x_full);
        out.d_gt_to_gen = geom::nearest_sq_distances(x_full, x_rec);
        out.row.gen_to_gt = geom::mean_in_order(out.d_gen_to_gt);
        out.row.gt_to_gen = geom::mean_in_order(out.d_gt_to_gen);
        out.row.cd = out.row.gen_to_gt + out.row.gt_to_gen;
    } catch (const EmptySurface&) {
        out.failed = true;
    } catch (...) {
        out.error = std::current_exception();
    }
    return out;
}

// parallel map over shapes; slot order fixed by input order so assembly is
// deterministic regardless of scheduling
inline std::vector<ShapeOutcome> eval_shapes(const diff::ParamStore& enc,
                                             const diff::ParamStore& gen,
                                             const net::NetConfig& net_cfg,
                                             std::span<const data::ShapeRecord* const> records,
                                             std::size_t eval_points, int grid_res,
                                             std::uint64_t seed, std::size_t thin_to,
                                             double forced_ratio) {
    std::vector<ShapeOutcome> slots(records.size());
    std::size_t workers = std::min<std::size_t>(
        records.size(), std::max<unsigned>(1, std::thread::hardware_concurrency()));
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next.fetch_add(1); i < records.size(); i = next.fetch_add(1))
            slots[i] = eval_one(enc, gen, net_cfg, *records[i], eval_points, grid_res, seed, i,
                                thin_to, forced_ratio);
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
        for (std::thread& t : pool) t.join();
    }
    for (ShapeOutcome& s : slots)
        if (s.error) std::rethrow_exception(s.error);
    return slots;
}

inline EvalReport assemble_report(std::vector<ShapeOutcome>& outcomes) {
    EvalReport rep;
    std::vector<double> pool_gen, pool_gt;
    for (ShapeOutcome& s : outcomes) {
        if (s.failed) {
            rep.failures.push_back(s.row.id);
            continue;
        }
        rep.shapes.push_back(s.row);
        pool_gen.insert(pool_gen.end(), s.d_gen_to_gt.begin(), s.d_gen_to_gt.end());
        pool_gt.insert(pool_gt.end(), s.d_gt_to_gen.begin(), s.d_gt_to_gen.end());
    }
    if (!rep.shapes.empty()) {
        double sc = 0.0, sa = 0.0, sb = 0.0;
        for (const ShapeEval& r : rep.shapes) {
            sc += r.cd;
            sa += r.gen_to_gt;
            sb += r.gt_to_gen;
        }
        double n = static_cast<double>(rep.shapes.size());
        rep.mean_cd = sc / n;
        rep.mean_gen_to_gt = sa / n;
        rep.mean_gt_to_gen = sb / n;
    }
    if (!pool_gen.empty()) {
        std::sort(pool_gen.begin(), pool_gen.end());
        std::sort(pool_gt.begin(), pool_gt.end());
        for (std::size_t i = 0; i < kCurveSamples; ++i) {
            double t = kCurveMaxThreshold * static_cast<double>(i) /
                       static_cast<double>(kCurveSamples - 1);
            rep.curve.push_back({t, cum_frac(pool_gen, t), cum_frac(pool_gt, t)});
        }
        double top = std::max({kCurveMaxThreshold, pool_gen.back(), pool_gt.back()});
        rep.curve.push_back({top, 1.0, 1.0});
    }
    rep.check();
    return rep;
}

}  // namespace eval_detail

inline std::vector<const data::ShapeRecord*> test_split_view(
    std::span<const data::ShapeRecord> corpus) {
    std::vector<const data::ShapeRecord*> out;
    for (const data::ShapeRecord& r : corpus)
        if (r.split == data::Split::Test) out.push_back(&r);
    return out;
}

inline EvalReport eval_completion(const diff::ParamStore& enc, const diff::ParamStore& gen,
                                  const net::NetConfig& net_cfg,
                                  std::span<const data::ShapeRecord* const> records,
                                  std::size_t eval_points, int grid_res, std::uint64_t seed) {
    if (records.empty()) throw InvalidInput("eval: no test shapes");
    if (eval_points < 1) throw InvalidInput("eval: eval_points must be >= 1");
    std::vector<eval_detail::ShapeOutcome> outcomes = eval_detail::eval_shapes(
        enc, gen, net_cfg, records, eval_points, grid_res, seed, 0, 0.0);
    return eval_detail::assemble_report(outcomes);
}

struct DensityRow {
    std::size_t requested = 0;
    std::size_t used = 0;  // after clamping to the cached surface size
    double mean_cd = 0.0;
    std::size_t failures = 0;
};

// sparser and sparser partial inputs; the test-mode draw itself is unchanged
inline std::vector<DensityRow> ablate_density(const diff::ParamStore& enc,
                                              const diff::ParamStore& gen,
                                              const net::NetConfig& net_cfg,
                                              std::span<const data::ShapeRecord* const> records,
                                              std::span<const std::size_t> counts,
                                              std::size_t eval_points, int grid_res,
                                              std::uint64_t seed, std::ostream* warn = nullptr) {
    if (records.empty()) throw InvalidInput("eval: no test shapes");
    std::vector<DensityRow> table;
    for (std::size_t count : counts) {
        std::size_t cap = count;
        for (const data::ShapeRecord* r : records) cap = std::min(cap, r->surface.size());
        if (cap != count && warn)
            *warn << "ablate_density: count " << count << " exceeds cached surface size, using "
                  << cap << "\n";
        std::vector<eval_detail::ShapeOutcome> outcomes = eval_detail::eval_shapes(
            enc, gen, net_cfg, records, eval_points, grid_res, seed, cap, 0.0);
        EvalReport rep = eval_detail::assemble_report(outcomes);
        table.push_back({count, cap, rep.mean_cd, rep.failures.size()});
    }
    return table;
}

struct PartialityRow {
    double ratio = 0.0;
    double cd = 0.0;
    double gen_to_gt = 0.0;
    double gt_to_gen = 0.0;
    std::size_t failures = 0;
};

inline std::vector<PartialityRow> ablate_partiality(
    const diff::ParamStore& enc, const diff::ParamStore& gen, const net::NetConfig& net_cfg,
    std::span<const data::ShapeRecord* const> records, std::span<const double> ratios,
    std::size_t eval_points, int grid_res, std::uint64_t seed) {
    if (records.empty()) throw InvalidInput("eval: no test shapes");
    std::vector<PartialityRow> table;
    for (double ratio : ratios) {
        if (!(ratio > 0.0) || ratio > 1.0)
            throw InvalidInput("ablate_partiality: ratios must lie in (0,1]");
        std::vector<eval_detail::ShapeOutcome> outcomes = eval_detail::eval_shapes(
            enc, gen, net_cfg, records, eval_points, grid_res, seed, 0, ratio);
        EvalReport rep = eval_detail::assemble_report(outcomes);
        PartialityRow row;
        row.ratio = ratio;
        row.gen_to_gt = rep.mean_gen_to_gt;
        row.gt_to_gen = rep.mean_gt_to_gen;
        row.cd = row.gen_to_gt + row.gt_to_gen;
        row.failures = rep.failures.size();
        table.push_back(row);
    }
    return table;
}

struct NetworkAblationRow {
    std::string tag;  // "(i)".."(iv)"
    net::CriticVariant critic = net::CriticVariant::PointNet;
    bool with_norm_loss = false;
    bool diverged = false;
    std::size_t abort_epoch = 0;  // valid when diverged
    double mean_cd = 0.0;
    std::size_t failures = 0;
};

// reference CD values (scaled 10^3) from the source experiment, for the
// report footer only; the toy corpus does not reproduce them
inline constexpr const char* kNetworkAblationFootnote =
    "reference full-scale CDs (x1000): (i) 12.30  (ii) 12.90  (iii) 10.82  (iv) 10.70";

// four training runs from one seed: {PointNet, PointNet++} x {without, with
// the surface-normal loss}
inline std::vector<NetworkAblationRow> ablate_network(const train::TrainConfig& base,
                                                      std::span<const data::ShapeRecord> corpus,
                                                      std::size_t eval_points, int grid_res) {
    struct Setting {
        const char* tag;
        net::CriticVariant critic;
        bool with_norm;
    };
    const Setting settings[4] = {
        {"(i)", net::CriticVariant::PointNet, false},
        {"(ii)", net::CriticVariant::PointNet, true},
        {"(iii)", net::CriticVariant::PointNetPP, false},
        {"(iv)", net::CriticVariant::PointNetPP, true},
    };
    std::vector<const data::ShapeRecord*> test = test_split_view(corpus);
    if (test.empty()) throw InvalidInput("ablate_network: corpus has no test shapes");

    std::vector<NetworkAblationRow> table;
    for (const Setting& s : settings) {
        train::TrainConfig cfg = base;
        cfg.net.critic = s.critic;
        if (!s.with_norm) cfg.weights.lambda_norm = 0.0;

        NetworkAblationRow row;
        row.tag = s.tag;
        row.critic = s.critic;
        row.with_norm_loss = s.with_norm;

        train::TrainState st = train::init_train_state(cfg);
        std::vector<const data::ShapeRecord*> train_shapes = train::train_split_view(corpus);
        const std::size_t total = cfg.schedule.total_epochs();
        try {
            while (st.epoch < total) train::train_epoch(st, cfg, train_shapes);
            EvalReport rep = eval_completion(st.enc, st.gen, cfg.net, test, eval_points, grid_res,
                                             cfg.seed);
            row.mean_cd = rep.mean_cd;
            row.failures = rep.failures.size();
        } catch (const DiagnosticError&) {
            row.diverged = true;
            row.abort_epoch = st.epoch;
        }
        table.push_back(row);
    }
    return table;
}

// CSV emitters; raw values, no display scaling
inline void write_eval_csv(std::ostream& out, const EvalReport& rep) {
    rep.check();
    out << "shape_id,cd,gen_to_gt,gt_to_gen\n";
    char buf[128];
    for (const ShapeEval& r : rep.shapes) {
        std::snprintf(buf, sizeof buf, ",%.17g,%.17g,%.17g\n", r.cd, r.gen_to_gt, r.gt_to_gen);
        out << r.id << buf;
    }
}

inline void write_curve_csv(std::ostream& out, const EvalReport& rep) {
    rep.check();
    out << "threshold,fraction_gen_to_gt,fraction_gt_to_gen\n";
    char buf[128];
    for (const CurveSample& c : rep.curve) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", c.threshold, c.frac_gen_to_gt,
                      c.frac_gt_to_gen);
        out << buf;
    }
}

inline void write_density_csv(std::ostream& out, const std::vector<DensityRow>& table) {
    out << "count,used,mean_cd,failures\n";
    char buf[128];
    for (const DensityRow& r : table) {
        std::snprintf(buf, sizeof buf, "%zu,%zu,%.17g,%zu\n", r.requested, r.used, r.mean_cd,
                      r.failures);
        out << buf;
    }
}

inline void write_partiality_csv(std::ostream& out, const std::vector<PartialityRow>& table) {
    out << "ratio,cd,gen_to_gt,gt_to_gen,failures\n";
    char buf[160];
    for (const PartialityRow& r : table) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%zu\n", r.ratio, r.cd, r.gen_to_gt,
                      r.gt_to_gen, r.failures);
        out << buf;
    }
}

inline void write_network_csv(std::ostream& out, const std::vector<NetworkAblationRow>& table) {
    out << "tag,critic,norm_loss,status,mean_cd,abort_epoch,failures\n";
    char buf[64];
    for (const NetworkAblationRow& r : table) {
        out << r.tag << ','
            << (r.critic == net::CriticVariant::PointNetPP ? "pointnet++" : "pointnet") << ','
            << (r.with_norm_loss ? "yes" : "no") << ',' << (r.diverged ? "diverged" : "ok") << ',';
        if (r.diverged) {
            out << "nan," << r.abort_epoch << ",0\n";
        } else {
            std::snprintf(buf, sizeof buf, "%.17g,,%zu\n", r.mean_cd, r.failures);
            out << buf;
        }
    }
}

// human-readable summary; CD values scaled by 1000 for readability, CSVs stay
// raw
inline void write_report_text(std::ostream& out, const EvalReport& rep) {
    rep.check();
    out << "completion evaluation (squared-distance chamfer; table values x1000)\n";
    out << "curve thresholds use squared distances, matching the chamfer definition\n\n";
    char buf[160];
    std::snprintf(buf, sizeof buf, "  %-24s %10s %10s %10s\n", "shape", "cd", "gen->gt",
                  "gt->gen");
    out << buf;
    for (const ShapeEval& r : rep.shapes) {
        std::snprintf(buf, sizeof buf, "  %-24s %10.4f %10.4f %10.4f\n", r.id.c_str(),
                      1e3 * r.cd, 1e3 * r.gen_to_gt, 1e3 * r.gt_to_gen);
        out << buf;
    }
    std::snprintf(buf, sizeof buf, "  %-24s %10.4f %10.4f %10.4f\n", "mean", 1e3 * rep.mean_cd,
                  1e3 * rep.mean_gen_to_gt, 1e3 * rep.mean_gt_to_gen);
    out << buf;
    if (!rep.failures.empty()) {
        out << "  failed completions (no zero crossing):";
        for (const std::string& id : rep.failures) out << ' ' << id;
        out << '\n';
    }
}

}  // namespace sdfc::eval
