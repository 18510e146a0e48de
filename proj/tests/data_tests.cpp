#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "sdfc/data/corpus.hpp"
#include "sdfc/data/toy_shapes.hpp"
#include "sdfc/geom/mesh_io.hpp"
#include "sdfc/rng.hpp"

#include "support/mesh_fixtures.hpp"

using namespace sdfc;
using namespace sdfc::data;
using fixtures::icosphere;
namespace fs = std::filesystem;

namespace {

double mesh_volume(const geom::TriMesh& m) {
    double v = 0.0;
    for (const geom::Tri& t : m.triangles)
        v += geom::dot(m.vertices[t[0]],
                       geom::cross(m.vertices[t[1]], m.vertices[t[2]])) / 6.0;
    return std::fabs(v);
}

std::string record_bytes(const ShapeRecord& rec) {
    std::ostringstream out(std::ios::binary);
    geom::save_sdf_samples(out, rec.sdf);
    geom::save_surface_cloud(out, rec.surface);
    geom::write_obj(out, rec.mesh);
    return out.str();
}

std::string file_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::map<std::string, std::string> dir_bytes(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file())
            out[fs::relative(e.path(), root).generic_string()] = file_bytes(e.path());
    return out;
}

fs::path fresh_dir(const std::string& name) {
    fs::path p = fs::temp_directory_path() / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

geom::TriMesh doubled_triangle() {
    geom::TriMesh m;
    m.vertices = {{0.1, 0.03, 0.07}, {0.9, 0.11, 0.05}, {0.2, 0.83, 0.13}};
    m.triangles = {{{0, 1, 2}}, {{0, 2, 1}}};
    return m;
}

}  // namespace

TEST_CASE("preprocess keeps an icosphere and its inside fraction matches the volume ratio") {
    geom::TriMesh sphere = icosphere(0.62, 3);
    Rng rng(42);
    PreprocessResult res = preprocess(sphere, 20000, rng, 2048);
    REQUIRE(std::holds_alternative<ShapeRecord>(res));
    const ShapeRecord& rec = std::get<ShapeRecord>(res);

    REQUIRE(rec.sdf.size() == 20000);
    REQUIRE(rec.surface.size() == 2048);
    REQUIRE(rec.surface.has_normals());
    rec.surface.validate();
    CHECK(rec.norm_scale == Catch::Approx(0.62).margin(1e-3));
    CHECK(geom::norm(rec.norm_center) < 1e-9);

    double max_r = 0.0;
    for (const geom::Vec3& v : rec.mesh.vertices) max_r = std::max(max_r, geom::norm(v));
    CHECK(max_r == Catch::Approx(1.0).margin(1e-12));

    // volume-ratio oracle: fraction of ball samples inside equals the
    // polyhedron-to-ball volume ratio up to binomial noise
    double expected = mesh_volume(rec.mesh) / (4.0 / 3.0 * std::acos(-1.0));
    double sigma = std::sqrt(expected * (1.0 - expected) / 20000.0);
    CHECK(rec.inside_fraction ==
          Catch::Approx(expected).margin(3.5 * sigma + 1e-3));
}

TEST_CASE("preprocess discards open meshes and thin sheets") {
    geom::TriMesh open;
    open.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    open.triangles = {{{0, 1, 2}}};
    Rng rng(1);
    PreprocessResult res = preprocess(open, 500, rng, 64);
    REQUIRE(std::holds_alternative<Discarded>(res));
    CHECK(std::get<Discarded>(res).reason == "non-watertight mesh");

    Rng rng2(2);
    PreprocessResult thin = preprocess(doubled_triangle(), 500, rng2, 64);
    REQUIRE(std::holds_alternative<Discarded>(thin));
    CHECK(std::get<Discarded>(thin).reason == "inside fraction < 1%");
}

TEST_CASE("preprocess is deterministic per seed") {
    geom::TriMesh sphere = icosphere(0.5, 2);
    Rng a(7), b(7), c(8);
    auto ra = preprocess(sphere, 3000, a, 512);
    auto rb = preprocess(sphere, 3000, b, 512);
    auto rc = preprocess(sphere, 3000, c, 512);
    REQUIRE(std::holds_alternative<ShapeRecord>(ra));
    std::string sa = record_bytes(std::get<ShapeRecord>(ra));
    CHECK(sa == record_bytes(std::get<ShapeRecord>(rb)));
    CHECK(sa != record_bytes(std::get<ShapeRecord>(rc)));
}

TEST_CASE("lipschitz check accepts true SDFs and rejects sign corruption") {
    geom::TriMesh sphere = icosphere(0.5, 2);
    Rng rng(11);
    auto res = preprocess(sphere, 4000, rng, 256);
    REQUIRE(std::holds_alternative<ShapeRecord>(res));
    geom::SdfSampleSet good = std::get<ShapeRecord>(res).sdf;
    Rng check(3);
    CHECK(lipschitz_ok(good, check));

    geom::SdfSampleSet bad = good;
    for (std::size_t i = 0; i < bad.size(); ++i)
        if (bad.queries[i].x > 0.0) bad.distances[i] = -bad.distances[i];
    Rng check2(3);
    CHECK_FALSE(lipschitz_ok(bad, check2));

    geom::SdfSampleSet tiny;
    tiny.queries = {{0, 0, 0}, {0.1, 0, 0}};
    tiny.distances = {0.0, 0.5};
    Rng check3(4);
    CHECK_FALSE(lipschitz_ok(tiny, check3));
}

TEST_CASE("sphere family member stores distances matching the analytic SDF") {
    CorpusSpec spec;
    spec.count = 1;
    spec.seed = 21;
    spec.mesh_res = 48;
    spec.sdf_samples = 20000;
    spec.surface_samples = 2048;
    spec.families = {Family::Ellipsoid};
    spec.ellipsoid_axis_min = spec.ellipsoid_axis_max = 0.6;  // sphere

    ToyCorpus corpus = generate_toy_corpus(spec);
    REQUIRE(corpus.records.size() == 1);
    REQUIRE(corpus.discarded.empty());
    const ToyShapeParams& params = corpus.params[0];
    REQUIRE(params.axes.x == 0.6);
    REQUIRE(params.axes.y == 0.6);
    REQUIRE(params.axes.z == 0.6);

    // normalized-frame analytic distance: d(p) = (|c + s p| - r) / s
    const ShapeRecord& rec = corpus.records[0];
    double cell = 2.1 / 48.0;
    double grid_error = cell / rec.norm_scale;
    double max_err = 0.0;
    for (std::size_t i = 0; i < rec.sdf.size(); ++i) {
        geom::Vec3 orig = rec.norm_center + rec.norm_scale * rec.sdf.queries[i];
        double expected = (geom::norm(orig) - 0.6) / rec.norm_scale;
        max_err = std::max(max_err, std::fabs(rec.sdf.distances[i] - expected));
    }
    INFO("max |stored - analytic| = " << max_err << ", bound " << 2.0 * grid_error);
    CHECK(max_err < 2.0 * grid_error);
}

TEST_CASE("toy corpus regenerates byte-identically") {
    CorpusSpec spec;
    spec.count = 4;
    spec.seed = 33;
    spec.mesh_res = 24;
    spec.sdf_samples = 4000;
    spec.surface_samples = 1024;
    spec.families = {Family::Ellipsoid, Family::Capsule, Family::RoundedBox};

    ToyCorpus a = generate_toy_corpus(spec);
    ToyCorpus b = generate_toy_corpus(spec);
    REQUIRE(a.records.size() == 4);
    REQUIRE(b.records.size() == 4);

    fs::path da = fresh_dir("sdfc_corpus_a"), db = fresh_dir("sdfc_corpus_b");
    save_corpus(da, a.records, a.discarded);
    save_corpus(db, b.records, b.discarded);
    auto fa = dir_bytes(da), fb = dir_bytes(db);
    REQUIRE(fa.size() == fb.size());
    REQUIRE(fa.size() == 4 * 3 + 1);  // three files per shape plus the index
    for (const auto& [rel, bytes] : fa) {
        INFO(rel);
        bool same = fb.at(rel) == bytes;
        REQUIRE(same);
    }
    fs::remove_all(da);
    fs::remove_all(db);
}

TEST_CASE("corpus save/load round trip preserves records") {
    CorpusSpec spec;
    spec.count = 4;
    spec.seed = 14;
    spec.mesh_res = 20;
    spec.sdf_samples = 2500;
    spec.surface_samples = 512;

    ToyCorpus corpus = generate_toy_corpus(spec);
    REQUIRE(corpus.records.size() == 4);
    SplitLists lists = split_corpus(corpus.records, 0.3, 99);
    CHECK(lists.test.size() == 2);  // ceil(4 * 0.3)
    CHECK(lists.train.size() == 2);

    fs::path d1 = fresh_dir("sdfc_corpus_rt1");
    save_corpus(d1, corpus.records);
    std::vector<ShapeRecord> loaded = load_corpus(d1);
    REQUIRE(loaded.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(loaded[i].id == corpus.records[i].id);
        CHECK(loaded[i].split == corpus.records[i].split);
        CHECK(loaded[i].inside_fraction ==
              Catch::Approx(corpus.records[i].inside_fraction).margin(1e-6));
        bool same_payload = record_bytes(loaded[i]) == record_bytes(corpus.records[i]);
        CHECK(same_payload);
    }

    fs::path d2 = fresh_dir("sdfc_corpus_rt2");
    save_corpus(d2, loaded);
    auto f1 = dir_bytes(d1), f2 = dir_bytes(d2);
    REQUIRE(f1.size() == f2.size());
    for (const auto& [rel, bytes] : f1) {
        INFO(rel);
        bool same = f2.at(rel) == bytes;
        REQUIRE(same);
    }
    fs::remove_all(d1);
    fs::remove_all(d2);
}

TEST_CASE("draw_partial ratio distributions, invariants, determinism") {
    geom::TriMesh sphere = icosphere(0.55, 3);
    Rng prep(5);
    auto res = preprocess(sphere, 2000, prep, 1024);
    REQUIRE(std::holds_alternative<ShapeRecord>(res));
    const ShapeRecord& rec = std::get<ShapeRecord>(res);
    const double n = static_cast<double>(rec.surface.size());

    Rng rng(17);
    double mean_ratio = 0.0;
    for (int k = 0; k < 10000; ++k) {
        geom::PointCloud cut = draw_partial(rec, PartialMode::Test, rng);
        REQUIRE(cut.size() >= 512);  // never below ceil(0.5 n)
        REQUIRE(cut.size() <= 564);  // ceil(0.55 n)
        mean_ratio += static_cast<double>(cut.size()) / n;
    }
    mean_ratio /= 10000.0;
    CHECK(mean_ratio == Catch::Approx(0.525).margin(0.005));

    Rng rng2(18);
    for (int k = 0; k < 500; ++k) {
        geom::PointCloud cut = draw_partial(rec, PartialMode::Train, rng2);
        REQUIRE(cut.size() >= 512);
        REQUIRE(cut.size() <= 1024);
        REQUIRE(cut.has_normals());
    }

    Rng ra(99), rb(99);
    geom::PointCloud ca = draw_partial(rec, PartialMode::Train, ra);
    geom::PointCloud cb = draw_partial(rec, PartialMode::Train, rb);
    REQUIRE(ca.size() == cb.size());
    for (std::size_t i = 0; i < ca.size(); ++i) {
        REQUIRE(ca.points[i].x == cb.points[i].x);
        REQUIRE(ca.points[i].y == cb.points[i].y);
        REQUIRE(ca.points[i].z == cb.points[i].z);
    }
    ca.validate();

    Rng rf(3);
    geom::PointCloud forced = draw_partial_at(rec, 0.25, rf);
    CHECK(forced.size() == 256);  // ceil(0.25 * 1024)
}

TEST_CASE("split is pinned, exhaustive, disjoint, deterministic") {
    SplitLists s = split_corpus(50, 0.22, 7);
    CHECK(s.test.size() == 11);  // ceil(50 * 0.22)
    CHECK(s.train.size() == 39);

    std::vector<std::size_t> all = s.train;
    all.insert(all.end(), s.test.begin(), s.test.end());
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < 50; ++i) REQUIRE(all[i] == i);

    SplitLists again = split_corpus(50, 0.22, 7);
    CHECK(again.train == s.train);
    CHECK(again.test == s.test);
    SplitLists other = split_corpus(50, 0.22, 8);
    CHECK(other.test != s.test);

    CHECK_THROWS_AS(split_corpus(50, 0.0, 1), InvalidInput);
    CHECK_THROWS_AS(split_corpus(50, 1.0, 1), InvalidInput);
    CHECK_THROWS_AS(split_corpus(50, -0.2, 1), InvalidInput);
    CHECK_THROWS_AS(split_corpus(0, 0.5, 1), InvalidInput);
}

TEST_CASE("fifty-shape ellipsoid corpus generates within the time budget") {
    CorpusSpec spec;
    spec.count = 50;
    spec.seed = 5;
    spec.families = {Family::Ellipsoid};

    auto t0 = std::chrono::steady_clock::now();
    ToyCorpus corpus = generate_toy_corpus(spec);
    double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    REQUIRE(corpus.records.size() == 50);
    REQUIRE(corpus.discarded.empty());
    for (const ShapeRecord& rec : corpus.records) {
        REQUIRE(rec.sdf.size() == 100000);
        REQUIRE(rec.surface.size() == 32768);
        CHECK(rec.inside_fraction > 0.05);
    }
    INFO("corpus generation took " << elapsed << " s");
    CHECK(elapsed < 60.0);
}
