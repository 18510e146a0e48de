#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "sdfc/data/toy_shapes.hpp"
#include "sdfc/error.hpp"
#include "sdfc/geom/marching_cubes.hpp"
#include "sdfc/geom/mesh_io.hpp"
#include "sdfc/geom/point_cloud.hpp"
#include "sdfc/geom/sampling.hpp"
#include "sdfc/geom/sdf_samples.hpp"
#include "sdfc/geom/signed_distance.hpp"
#include "sdfc/geom/trimesh.hpp"
#include "sdfc/rng.hpp"

namespace sdfc::data {

enum class Split { Train, Test };

inline const char* split_name(Split s) { return s == Split::Train ? "train" : "test"; }

// One preprocessed shape: normalized mesh, volumetric SDF supervision pool,
// and the cached surface cloud partial inputs are cut from. All stored
// coordinates are quantized to f32 so in-memory records match their on-disk
// bytes exactly; quantization can push boundary samples a few f32 ulps
// outside the unit ball, so SdfSampleSet::validate does not apply here.
struct ShapeRecord {
    std::string id;
    geom::TriMesh mesh;  // unit-ball frame
    geom::SdfSampleSet sdf;
    geom::PointCloud surface;  // with unit normals
    Split split = Split::Train;
    double inside_fraction = 0.0;
    geom::Vec3 norm_center{0, 0, 0};  // original-frame center removed by normalization
    double norm_scale = 1.0;
};

struct Discarded {
    std::string reason;
};

using PreprocessResult = std::variant<ShapeRecord, Discarded>;

namespace pp_detail {

inline double f32(double v) { return static_cast<double>(static_cast<float>(v)); }

inline geom::Vec3 f32(const geom::Vec3& v) { return {f32(v.x), f32(v.y), f32(v.z)}; }

}  // namespace pp_detail

inline constexpr std::size_t kDefaultSdfSamples = 100000;
inline constexpr std::size_t kDefaultSurfaceSamples = 32768;
inline constexpr std::size_t kLipschitzPairs = 10000;
inline constexpr double kLipschitzTol = 1e-6;
inline constexpr double kMinInsideFraction = 0.01;

// continuity check on random sample pairs: a true SDF is 1-Lipschitz, so
// broken sign computation shows up as |d(x) - d(y)| > |x - y|
inline bool lipschitz_ok(const geom::SdfSampleSet& s, Rng& rng,
                         std::size_t pairs = kLipschitzPairs, double tol = kLipschitzTol) {
    std::size_t n = s.size();
    if (n < 2) return true;
    for (std::size_t k = 0; k < pairs; ++k) {
        std::size_t i = rng.below(n), j = rng.below(n);
        double gap = std::fabs(s.distances[i] - s.distances[j]);
        if (gap > geom::norm(s.queries[i] - s.queries[j]) + tol) return false;
    }
    return true;
}

// normalize -> volumetric samples with signed distance -> discard checks ->
// surface cache. Deterministic in (mesh, counts, rng seed).
inline PreprocessResult preprocess(const geom::TriMesh& mesh_in,
                                   std::size_t sample_count, Rng& rng,
                                   std::size_t surface_count = kDefaultSurfaceSamples) {
    ShapeRecord rec;
    rec.mesh = mesh_in;
    rec.mesh.validate();
    if (!geom::is_watertight(rec.mesh)) return Discarded{"non-watertight mesh"};
    auto [center, scale] = geom::normalize_to_unit_sphere(rec.mesh);
    rec.norm_center = center;
    rec.norm_scale = scale;

    geom::SignedDistanceQuery dist(rec.mesh);
    geom::PointCloud ball = geom::sample_uniform_ball(sample_count, rng);
    rec.sdf.queries.reserve(sample_count);
    rec.sdf.distances.reserve(sample_count);
    for (const geom::Vec3& p : ball.points) {
        geom::Vec3 q = pp_detail::f32(p);
        double d;
        try {
            d = dist(q);
        } catch (const SignUndefined&) {
            return Discarded{"sign undefined at sample point"};
        }
        rec.sdf.queries.push_back(q);
        rec.sdf.distances.push_back(pp_detail::f32(d));
    }
    rec.inside_fraction = rec.sdf.inside_fraction();
    if (rec.inside_fraction < kMinInsideFraction) return Discarded{"inside fraction < 1%"};
    if (!lipschitz_ok(rec.sdf, rng)) return Discarded{"SDF continuity check failed"};

    geom::PointCloud surf = geom::sample_surface(rec.mesh, surface_count, rng);
    rec.surface.points.reserve(surface_count);
    rec.surface.normals.reserve(surface_count);
    for (std::size_t i = 0; i < surf.size(); ++i) {
        rec.surface.points.push_back(pp_detail::f32(surf.points[i]));
        rec.surface.normals.push_back(pp_detail::f32(surf.normals[i]));
    }
    return rec;
}

enum class PartialMode { Train, Test };

// ratio ~ U(0.5,1) for training, U(0.5,0.55) for evaluation, then a
// random-direction half-space cut of the cached surface cloud
inline geom::PointCloud draw_partial(const ShapeRecord& rec, PartialMode mode, Rng& rng) {
    if (rec.surface.empty()) throw InvalidInput("draw_partial: record has no cached surface");
    double ratio = mode == PartialMode::Train ? rng.uniform(0.5, 1.0) : rng.uniform(0.5, 0.55);
    return geom::half_space_cut(rec.surface, ratio, rng);
}

// forced retain ratio; used by the partiality and density sweeps
inline geom::PointCloud draw_partial_at(const ShapeRecord& rec, double ratio, Rng& rng) {
    if (rec.surface.empty()) throw InvalidInput("draw_partial: record has no cached surface");
    return geom::half_space_cut(rec.surface, ratio, rng);
}

struct SplitLists {
    std::vector<std::size_t> train, test;
};

// ceil(n * test_fraction) shapes become the test set; disjoint, exhaustive,
// deterministic in seed
inline SplitLists split_corpus(std::size_t corpus_size, double test_fraction,
                               std::uint64_t seed) {
    if (corpus_size == 0) throw InvalidInput("split: empty corpus");
    if (!(test_fraction > 0.0) || !(test_fraction < 1.0))
        throw InvalidInput("split: test fraction must be in (0,1)");
    std::size_t n_test = static_cast<std::size_t>(
        std::ceil(test_fraction * static_cast<double>(corpus_size)));
    if (n_test > corpus_size) n_test = corpus_size;
    Rng rng(seed);
    std::vector<std::size_t> perm = rng.sample_without_replacement(corpus_size, corpus_size);
    SplitLists out;
    out.test.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_test));
    out.train.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_test), perm.end());
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

inline SplitLists split_corpus(std::vector<ShapeRecord>& corpus, double test_fraction,
                               std::uint64_t seed) {
    SplitLists lists = split_corpus(corpus.size(), test_fraction, seed);
    for (std::size_t i : lists.train) corpus[i].split = Split::Train;
    for (std::size_t i : lists.test) corpus[i].split = Split::Test;
    return lists;
}

// index.tsv row; discarded shapes keep their reason and get no directory
struct IndexRow {
    std::string id;
    std::string split;  // "train", "test", or "-" for discards
    double inside_fraction = 0.0;
    std::string discard_reason;  // empty for retained shapes
};

namespace pp_detail {

inline std::string format_fraction(double f) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", f);
    return buf;
}

}  // namespace pp_detail

// layout: <dir>/<id>/{mesh.obj, sdf.bin, surface.bin} plus <dir>/index.tsv
inline void save_corpus(const std::filesystem::path& dir,
                        std::span<const ShapeRecord> records,
                        std::span<const IndexRow> discarded = {}) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    for (const ShapeRecord& rec : records) {
        fs::path sub = dir / rec.id;
        fs::create_directories(sub);
        geom::write_obj(sub / "mesh.obj", rec.mesh);
        geom::save_sdf_samples(sub / "sdf.bin", rec.sdf);
        geom::save_surface_cloud(sub / "surface.bin", rec.surface);
    }
    std::ofstream out(dir / "index.tsv");
    if (!out) throw IoError("cannot write corpus index: " + (dir / "index.tsv").string());
    out << "id\tsplit\tinside_fraction\tdiscard_reason\n";
    for (const ShapeRecord& rec : records)
        out << rec.id << '\t' << split_name(rec.split) << '\t'
            << pp_detail::format_fraction(rec.inside_fraction) << "\t\n";
    for (const IndexRow& row : discarded)
        out << row.id << "\t-\t" << pp_detail::format_fraction(row.inside_fraction) << '\t'
            << row.discard_reason << '\n';
    if (!out) throw IoError("corpus index write failed");
}

inline std::vector<ShapeRecord> load_corpus(const std::filesystem::path& dir) {
    std::ifstream in(dir / "index.tsv");
    if (!in) throw IoError("cannot open corpus index: " + (dir / "index.tsv").string());
    std::string line;
    if (!std::getline(in, line)) throw IoError("corpus index is empty");
    std::vector<ShapeRecord> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cols;
        std::size_t start = 0;
        while (true) {
            std::size_t tab = line.find('\t', start);
            cols.push_back(line.substr(start, tab == std::string::npos ? tab : tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        if (cols.size() < 3) throw IoError("malformed corpus index row: " + line);
        if (cols[1] == "-") continue;  // discarded shape, nothing stored
        ShapeRecord rec;
        rec.id = cols[0];
        if (cols[1] == "train")
            rec.split = Split::Train;
        else if (cols[1] == "test")
            rec.split = Split::Test;
        else
            throw IoError("unknown split tag in corpus index: " + cols[1]);
        rec.inside_fraction = std::stod(cols[2]);
        std::filesystem::path sub = dir / rec.id;
        rec.mesh = geom::read_mesh(sub / "mesh.obj");
        rec.sdf = geom::load_sdf_samples(sub / "sdf.bin");
        rec.surface = geom::load_surface_cloud(sub / "surface.bin");
        out.push_back(std::move(rec));
    }
    return out;
}

// Procedural corpus description. Families cycle over the shape index; all
// parameters are drawn uniformly from the ranges below.
struct CorpusSpec {
    std::size_t count = 50;
    std::uint64_t seed = 1;
    int mesh_res = 48;  // marching-cubes cells per axis for toy meshing
    std::size_t sdf_samples = kDefaultSdfSamples;
    std::size_t surface_samples = kDefaultSurfaceSamples;
    std::vector<Family> families{Family::Ellipsoid, Family::Capsule};

    double ellipsoid_axis_min = 0.35, ellipsoid_axis_max = 0.9;
    double capsule_half_len_min = 0.15, capsule_half_len_max = 0.45;
    double capsule_radius_min = 0.15, capsule_radius_max = 0.4;
    double box_half_min = 0.2, box_half_max = 0.5;
    double box_round_min = 0.05, box_round_max = 0.2;

    void validate() const {
        if (count < 1) throw ConfigError("corpus: count must be >= 1");
        if (mesh_res < 8) throw ConfigError("corpus: mesh_res must be >= 8");
        if (sdf_samples < 1 || surface_samples < 1)
            throw ConfigError("corpus: sample counts must be >= 1");
        if (families.empty()) throw ConfigError("corpus: no shape families");
        auto range_ok = [](double lo, double hi) { return lo > 0.0 && hi >= lo; };
        if (!range_ok(ellipsoid_axis_min, ellipsoid_axis_max) ||
            !range_ok(capsule_half_len_min, capsule_half_len_max) ||
            !range_ok(capsule_radius_min, capsule_radius_max) ||
            !range_ok(box_half_min, box_half_max) || !range_ok(box_round_min, box_round_max))
            throw ConfigError("corpus: parameter ranges must be positive with min <= max");
        if (capsule_half_len_max + capsule_radius_max > 1.0 ||
            box_half_max + box_round_max > 1.0 || ellipsoid_axis_max > 1.0)
            throw ConfigError("corpus: shapes must fit inside the unit ball");
    }
};

struct ToyCorpus {
    std::vector<ShapeRecord> records;
    std::vector<ToyShapeParams> params;  // analytic oracle, parallel to records
    std::vector<IndexRow> discarded;
};

inline ToyShapeParams draw_toy_params(const CorpusSpec& spec, Family family, Rng& rng) {
    ToyShapeParams p;
    p.family = family;
    switch (family) {
        case Family::Ellipsoid:
            p.axes = {rng.uniform(spec.ellipsoid_axis_min, spec.ellipsoid_axis_max),
                      rng.uniform(spec.ellipsoid_axis_min, spec.ellipsoid_axis_max),
                      rng.uniform(spec.ellipsoid_axis_min, spec.ellipsoid_axis_max)};
            break;
        case Family::Capsule:
            p.half_len = rng.uniform(spec.capsule_half_len_min, spec.capsule_half_len_max);
            p.radius = rng.uniform(spec.capsule_radius_min, spec.capsule_radius_max);
            break;
        case Family::RoundedBox:
            p.axes = {rng.uniform(spec.box_half_min, spec.box_half_max),
                      rng.uniform(spec.box_half_min, spec.box_half_max),
                      rng.uniform(spec.box_half_min, spec.box_half_max)};
            p.radius = rng.uniform(spec.box_round_min, spec.box_round_max);
            break;
    }
    return p;
}

// analytic implicit -> marching cubes -> standard preprocess path
inline ToyCorpus generate_toy_corpus(const CorpusSpec& spec) {
    spec.validate();
    ToyCorpus out;
    const geom::Vec3 lo{-1.05, -1.05, -1.05}, hi{1.05, 1.05, 1.05};
    for (std::size_t i = 0; i < spec.count; ++i) {
        Family family = spec.families[i % spec.families.size()];
        Rng prng(derive_seed(spec.seed, i, 11));
        ToyShapeParams params = draw_toy_params(spec, family, prng);
        geom::GridField field = geom::GridField::from_function(
            spec.mesh_res, lo, hi,
            [&](const geom::Vec3& p) { return toy_implicit(params, p); });
        geom::TriMesh mesh = geom::marching_cubes(field, 0.0);

        char idbuf[64];
        std::snprintf(idbuf, sizeof idbuf, "%03zu_%s", i, family_name(family));
        Rng rng(derive_seed(spec.seed, i, 13));
        PreprocessResult res = preprocess(mesh, spec.sdf_samples, rng, spec.surface_samples);
        if (auto* rec = std::get_if<ShapeRecord>(&res)) {
            rec->id = idbuf;
            out.records.push_back(std::move(*rec));
            out.params.push_back(params);
        } else {
            out.discarded.push_back({idbuf, "-", 0.0, std::get<Discarded>(res).reason});
        }
    }
    return out;
}

}  // namespace sdfc::data
