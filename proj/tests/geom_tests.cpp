#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <set>
#include <sstream>

#include "sdfc/geom/bvh.hpp"
#include "sdfc/geom/chamfer.hpp"
#include "sdfc/geom/marching_cubes.hpp"
#include "sdfc/geom/mesh_io.hpp"
#include "sdfc/geom/point_cloud.hpp"
#include "sdfc/geom/sampling.hpp"
#include "sdfc/geom/sdf_samples.hpp"
#include "sdfc/geom/signed_distance.hpp"
#include "sdfc/geom/trimesh.hpp"
#include "sdfc/rng.hpp"

#include "support/geom_oracles.hpp"
#include "support/mesh_fixtures.hpp"

using namespace sdfc;
using namespace sdfc::geom;

TEST_CASE("rng determinism and ranges") {
    Rng a(42), b(42), c(43);
    bool all_equal = true, any_diff = false;
    for (int i = 0; i < 100; ++i) {
        auto x = a.next_u64(), y = b.next_u64(), z = c.next_u64();
        all_equal = all_equal && x == y;
        any_diff = any_diff || x != z;
    }
    REQUIRE(all_equal);
    REQUIRE(any_diff);

    Rng r(7);
    for (int i = 0; i < 1000; ++i) {
        double u = r.uniform01();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
    }
    for (int i = 0; i < 1000; ++i) {
        auto k = r.below(17);
        REQUIRE(k < 17);
    }

    std::vector<int> v{1, 2, 3, 4, 5, 6, 7};
    auto w = v;
    r.shuffle(w);
    auto ws = w;
    std::sort(ws.begin(), ws.end());
    REQUIRE(ws == v);

    auto pick = r.sample_without_replacement(100, 10);
    REQUIRE(pick.size() == 10);
    std::set<std::size_t> uniq(pick.begin(), pick.end());
    REQUIRE(uniq.size() == 10);
    for (auto i : pick) REQUIRE(i < 100);

    REQUIRE(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
    REQUIRE(derive_seed(1, 2, 3) != derive_seed(1, 3, 2));
}

TEST_CASE("normalize_to_unit_sphere") {
    SECTION("bbox center and max-norm scale") {
        TriMesh m;
        m.vertices = {{2, 0, 0}, {-2, 0, 0}, {0, 2, 0}};
        m.triangles = {{{0, 1, 2}}};
        auto [center, scale] = normalize_to_unit_sphere(m);
        Box3 want_box;
        want_box.extend({2, 0, 0});
        want_box.extend({-2, 0, 0});
        want_box.extend({0, 2, 0});
        REQUIRE(norm(center - want_box.center()) < 1e-15);
        double max_norm = 0;
        for (auto& v : m.vertices) max_norm = std::max(max_norm, norm(v));
        REQUIRE(max_norm == Catch::Approx(1.0).epsilon(1e-12));
        REQUIRE(scale == Catch::Approx(std::sqrt(5.0)).epsilon(1e-12));
    }
    SECTION("idempotent") {
        TriMesh m = fixtures::icosphere(1.0, 1);
        normalize_to_unit_sphere(m);
        auto before = m.vertices;
        auto [center, scale] = normalize_to_unit_sphere(m);
        REQUIRE(norm(center) < 1e-12);
        REQUIRE(scale == Catch::Approx(1.0).epsilon(1e-12));
        for (std::size_t i = 0; i < before.size(); ++i)
            REQUIRE(norm(m.vertices[i] - before[i]) < 1e-12);
    }
    SECTION("single triangle") {
        TriMesh m;
        m.vertices = {{1, 1, 1}, {1, 1, 2}, {1, 2, 1}};
        m.triangles = {{{0, 1, 2}}};
        auto [center, scale] = normalize_to_unit_sphere(m);
        REQUIRE(norm(center - Vec3{1, 1.5, 1.5}) < 1e-15);
        double max_norm = 0;
        for (auto& v : m.vertices) max_norm = std::max(max_norm, norm(v));
        REQUIRE(max_norm == Catch::Approx(1.0).epsilon(1e-12));
    }
    SECTION("canonicalizes scale and translation") {
        Rng rng(11);
        TriMesh base = fixtures::icosphere(1.0, 1);
        for (int rep = 0; rep < 4; ++rep) {
            double s = rng.uniform(0.1, 10.0);
            Vec3 t{rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)};
            TriMesh a = base, b = base;
            for (auto& v : b.vertices) v = s * v + t;
            normalize_to_unit_sphere(a);
            normalize_to_unit_sphere(b);
            for (std::size_t i = 0; i < a.vertices.size(); ++i)
                REQUIRE(norm(a.vertices[i] - b.vertices[i]) < 1e-12);
        }
    }
    SECTION("empty mesh rejected") {
        TriMesh m;
        REQUIRE_THROWS_AS(normalize_to_unit_sphere(m), InvalidMesh);
    }
}

TEST_CASE("watertightness detection") {
    REQUIRE(is_watertight(fixtures::unit_cube()));
    REQUIRE(is_watertight(fixtures::icosphere(1.0, 2)));

    TriMesh open = fixtures::unit_cube();
    open.triangles.pop_back();
    REQUIRE_FALSE(is_watertight(open));

    TriMesh flipped = fixtures::unit_cube();
    std::swap(flipped.triangles[0].v[1], flipped.triangles[0].v[2]);
    REQUIRE_FALSE(is_watertight(flipped));
}

TEST_CASE("obj round trip and off reading") {
    TriMesh cube = fixtures::unit_cube();
    std::stringstream ss;
    write_obj(ss, cube);
    TriMesh back = read_obj(ss);
    REQUIRE(back.vertex_count() == cube.vertex_count());
    REQUIRE(back.triangle_count() == cube.triangle_count());
    for (std::size_t i = 0; i < cube.vertices.size(); ++i)
        REQUIRE(norm(back.vertices[i] - cube.vertices[i]) == 0.0);
    for (std::size_t i = 0; i < cube.triangles.size(); ++i)
        REQUIRE(back.triangles[i].v == cube.triangles[i].v);

    SECTION("quads fan-triangulate") {
        std::stringstream quad("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n");
        TriMesh q = read_obj(quad);
        REQUIRE(q.triangle_count() == 2);
    }
    SECTION("face index out of range") {
        std::stringstream bad("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n");
        REQUIRE_THROWS_AS(read_obj(bad), IoError);
    }
    SECTION("off format") {
        std::stringstream off(
            "OFF\n4 2 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n3 0 1 2\n3 0 2 3\n");
        TriMesh q = read_off(off);
        REQUIRE(q.vertex_count() == 4);
        REQUIRE(q.triangle_count() == 2);
        REQUIRE(q.vertices[2].x == 1.0);
    }
}

TEST_CASE("uniform ball sampling statistics") {
    Rng rng(123);
    auto cloud = sample_uniform_ball(100000, rng);
    REQUIRE(cloud.size() == 100000);
    double mean_r = 0.0;
    std::size_t within_half = 0;
    for (const auto& p : cloud.points) {
        double r = norm(p);
        REQUIRE(r <= 1.0);
        mean_r += r;
        within_half += r <= 0.5;
    }
    mean_r /= 100000.0;
    // E[r] = 3/4 for the uniform ball
    REQUIRE(std::fabs(mean_r - 0.75) < 0.01);
    // P(r <= 1/2) = (1/2)^3
    REQUIRE(std::fabs(within_half / 100000.0 - 0.125) < 0.01);

    Rng bad(1);
    REQUIRE_THROWS_AS(sample_uniform_ball(0, bad), InvalidInput);
}

TEST_CASE("surface sampling") {
    TriMesh cube = fixtures::unit_cube();
    Rng rng(8);
    auto cloud = sample_surface(cube, 60000, rng);
    REQUIRE(cloud.size() == 60000);
    REQUIRE(cloud.has_normals());
    cloud.validate();

    SECTION("per-face counts near equal shares") {
        // classify by dominant normal axis; cube faces have equal area
        std::size_t face_counts[6] = {};
        for (const auto& n : cloud.normals) {
            int axis = 0;
            if (std::fabs(n.y) > std::fabs(n[axis])) axis = 1;
            if (std::fabs(n.z) > std::fabs(n[axis])) axis = 2;
            face_counts[static_cast<std::size_t>(2 * axis + (n[axis] > 0))]++;
        }
        double expect = 10000.0, sigma = std::sqrt(60000.0 * (1.0 / 6) * (5.0 / 6));
        for (auto c : face_counts)
            REQUIRE(std::fabs(static_cast<double>(c) - expect) < 3 * sigma);
    }
    SECTION("points lie on the surface") {
        SignedDistanceQuery q(cube);
        for (std::size_t i = 0; i < 200; ++i)
            REQUIRE(q.unsigned_distance(cloud.points[i * 300]) < 1e-9);
    }
    SECTION("zero-area mesh rejected") {
        TriMesh flat;
        flat.vertices = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
        flat.triangles = {{{0, 1, 2}}};
        Rng r2(1);
        REQUIRE_THROWS_AS(sample_surface(flat, 10, r2), InvalidMesh);
    }
}

TEST_CASE("half space cut") {
    SECTION("ratio 1 is identity") {
        Rng rng(3);
        auto cloud = sample_uniform_ball(100, rng);
        auto cut = half_space_cut(cloud, 1.0, rng);
        REQUIRE(cut.size() == cloud.size());
        for (std::size_t i = 0; i < cloud.size(); ++i)
            REQUIRE(norm(cut.points[i] - cloud.points[i]) == 0.0);
    }
    SECTION("collinear points, forced +x direction") {
        PointCloud c;
        for (int i = 0; i < 10; ++i) c.points.push_back({0.1 * i, 0, 0});
        auto cut = half_space_cut_along(c, 0.5, {1, 0, 0});
        REQUIRE(cut.size() == 5);
        for (std::size_t i = 0; i < 5; ++i)
            REQUIRE(cut.points[i].x == Catch::Approx(0.1 * static_cast<double>(i)));
    }
    SECTION("cardinality is ceil(ratio*n)") {
        Rng rng(5);
        auto cloud = sample_uniform_ball(1000, rng);
        for (double ratio : {0.001, 0.25, 0.333, 0.5, 0.737, 0.999, 1.0}) {
            auto cut = half_space_cut(cloud, ratio, rng);
            REQUIRE(cut.size() == static_cast<std::size_t>(std::ceil(ratio * 1000.0)));
        }
    }
    SECTION("subset, order preserved, normals carried") {
        TriMesh sphere = fixtures::icosphere(1.0, 2);
        Rng rng(9);
        auto cloud = sample_surface(sphere, 500, rng);
        auto cut = half_space_cut(cloud, 0.6, rng);
        REQUIRE(cut.normals.size() == cut.points.size());
        std::size_t j = 0;
        for (std::size_t i = 0; i < cloud.size() && j < cut.size(); ++i) {
            if (norm(cloud.points[i] - cut.points[j]) == 0.0) {
                REQUIRE(norm(cloud.normals[i] - cut.normals[j]) == 0.0);
                ++j;
            }
        }
        REQUIRE(j == cut.size());  // cut is an ordered subsequence of the input
    }
    SECTION("invalid ratios") {
        PointCloud c;
        c.points.push_back({0, 0, 0});
        Rng rng(1);
        REQUIRE_THROWS_AS(half_space_cut(c, 0.0, rng), InvalidRatio);
        REQUIRE_THROWS_AS(half_space_cut(c, -0.5, rng), InvalidRatio);
        REQUIRE_THROWS_AS(half_space_cut(c, 1.5, rng), InvalidRatio);
    }
}

TEST_CASE("signed distance against analytic sphere") {
    TriMesh sphere = fixtures::icosphere(1.0, 4);
    SignedDistanceQuery q(sphere);
    double chord = fixtures::icosphere_chordal_error(sphere, 1.0);
    REQUIRE(chord < 1.5e-3);
    // |sdf| at the origin is the distance to the deepest face plane
    REQUIRE(std::fabs(q({0, 0, 0}) - (-1.0)) <= chord + 1e-12);
    REQUIRE(std::fabs(q({2, 0, 0}) - 1.0) < 1e-3);
    REQUIRE(std::fabs(q(sphere.vertices[17])) < 1e-9);
    Rng rng(2024);
    for (int i = 0; i < 300; ++i) {
        Vec3 p{rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2)};
        double analytic = norm(p) - 1.0;
        if (std::fabs(analytic) < 2 * chord + 1e-6) continue;
        REQUIRE(std::fabs(q(p) - analytic) < 2 * chord);
    }
}

TEST_CASE("signed distance magnitude matches brute force") {
    Rng rng(77);
    for (const TriMesh& mesh : {fixtures::icosphere(1.0, 2), fixtures::unit_cube()}) {
        SignedDistanceQuery q(mesh);
        for (int i = 0; i < 1000; ++i) {
            Vec3 p{rng.uniform(-1.3, 1.3), rng.uniform(-1.3, 1.3), rng.uniform(-1.3, 1.3)};
            double mine = std::fabs(q(p));
            double ref = oracles::min_distance(mesh, p);
            REQUIRE(std::fabs(mine - ref) < 1e-9);
        }
    }
}

TEST_CASE("signed distance sign on a box") {
    TriMesh cube = fixtures::unit_cube();  // [-0.5, 0.5]^3
    SignedDistanceQuery q(cube);
    Rng rng(31);
    for (int i = 0; i < 500; ++i) {
        Vec3 p{rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8)};
        bool inside = std::fabs(p.x) < 0.5 && std::fabs(p.y) < 0.5 && std::fabs(p.z) < 0.5;
        double margin = 0.0;
        for (int a = 0; a < 3; ++a) margin = std::max(margin, std::fabs(std::fabs(p[a]) - 0.5));
        if (margin < 1e-6) continue;
        REQUIRE(q.inside(p) == inside);
    }
}

TEST_CASE("signed distance requires watertight mesh") {
    TriMesh open = fixtures::unit_cube();
    open.triangles.pop_back();
    SignedDistanceQuery q(open);
    REQUIRE_FALSE(q.watertight());
    REQUIRE(q.unsigned_distance({0, 0, 0}) > 0.0);
    REQUIRE_THROWS_AS(q({0, 0, 0}), SignUndefined);
}

TEST_CASE("chamfer distance pinned examples") {
    PointCloud v1, v2;
    v1.points = {{0, 0, 0}};
    v2.points = {{0, 0, 0}, {1, 0, 0}};
    auto r = chamfer_distance(v1, v2);
    REQUIRE(r.a_to_b == 0.0);
    REQUIRE(r.b_to_a == 0.5);
    REQUIRE(r.total == 0.5);

    Rng rng(15);
    auto v = sample_uniform_ball(100, rng);
    auto self = chamfer_distance(v, v);
    REQUIRE(self.total == 0.0);

    auto w = sample_uniform_ball(100, rng);
    auto ab = chamfer_distance(v, w);
    auto ba = chamfer_distance(w, v);
    REQUIRE(ab.total == ba.total);
    REQUIRE(ab.a_to_b == ba.b_to_a);

    PointCloud empty;
    REQUIRE_THROWS_AS(chamfer_distance(empty, v), InvalidInput);
}

TEST_CASE("chamfer matches brute force on random pairs") {
    Rng rng(99);
    for (int pair = 0; pair < 200; ++pair) {
        std::size_t na = 1 + rng.below(500), nb = 1 + rng.below(500);
        Vec3 offset_a{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
        Vec3 offset_b{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
        double sa = rng.uniform(0.1, 2.0), sb = rng.uniform(0.1, 2.0);
        PointCloud a, b;
        for (std::size_t i = 0; i < na; ++i) {
            auto [x, y, z] = rng.in_unit_ball();
            a.points.push_back(Vec3{x, y, z} * sa + offset_a);
        }
        for (std::size_t i = 0; i < nb; ++i) {
            auto [x, y, z] = rng.in_unit_ball();
            b.points.push_back(Vec3{x, y, z} * sb + offset_b);
        }
        auto mine = chamfer_distance(a, b);
        double ref_ab = oracles::one_sided_chamfer(a, b);
        double ref_ba = oracles::one_sided_chamfer(b, a);
        REQUIRE(mine.a_to_b == ref_ab);  // grid index must be bit-equivalent
        REQUIRE(mine.b_to_a == ref_ba);
        REQUIRE(std::fabs(mine.total - (ref_ab + ref_ba)) < 1e-12);
    }
}

TEST_CASE("marching cubes on an analytic sphere") {
    auto sphere_field = [](const Vec3& p) { return norm(p) - 0.5; };
    SECTION("vertices near the isosurface at R=32") {
        auto field = GridField::from_function(32, {-1, -1, -1}, {1, 1, 1}, sphere_field);
        TriMesh m = marching_cubes(field);
        double cell = 2.0 / 32.0;
        for (const auto& v : m.vertices) REQUIRE(std::fabs(norm(v) - 0.5) < 2 * cell);
    }
    SECTION("watertight and outward-oriented at R=64") {
        auto field = GridField::from_function(64, {-1, -1, -1}, {1, 1, 1}, sphere_field);
        TriMesh m = marching_cubes(field);
        REQUIRE(is_watertight(m));
        for (std::size_t t = 0; t < m.triangle_count(); ++t) {
            Vec3 n = m.triangle_normal(t);
            Vec3 c = (m.vertices[m.triangles[t][0]] + m.vertices[m.triangles[t][1]] +
                      m.vertices[m.triangles[t][2]]) / 3.0;
            // field increases radially; outward normal points away from origin
            REQUIRE(dot(n, c) > 0.0);
        }
    }
    SECTION("vertices sit on grid edges") {
        auto field = GridField::from_function(16, {-1, -1, -1}, {1, 1, 1}, sphere_field);
        TriMesh m = marching_cubes(field);
        double cell = 2.0 / 16.0;
        for (const auto& v : m.vertices) {
            int on_grid = 0;
            for (int a = 0; a < 3; ++a) {
                double k = std::round((v[a] + 1.0) / cell);
                if (v[a] == -1.0 + k * cell) ++on_grid;
            }
            REQUIRE(on_grid >= 2);
        }
    }
}

TEST_CASE("marching cubes error cases") {
    auto pos = GridField::from_function(8, {-1, -1, -1}, {1, 1, 1},
                                        [](const Vec3&) { return 1.0; });
    REQUIRE_THROWS_AS(marching_cubes(pos), EmptySurface);

    GridField tiny;
    tiny.res = 1;
    tiny.values.assign(8, 1.0);
    REQUIRE_THROWS_AS(marching_cubes(tiny), InvalidInput);

    auto nan_field = GridField::from_function(4, {-1, -1, -1}, {1, 1, 1},
                                              [](const Vec3&) { return 1.0; });
    nan_field.values[3] = std::nan("");
    REQUIRE_THROWS_AS(marching_cubes(nan_field), InvalidInput);
}

TEST_CASE("marching cubes on perturbed ellipsoids stays watertight") {
    Rng rng(1234);
    for (int rep = 0; rep < 5; ++rep) {
        Vec3 ax{rng.uniform(0.8, 1.6), rng.uniform(0.8, 1.6), rng.uniform(0.8, 1.6)};
        double amp = rng.uniform(0.0, 0.05);
        double fx = rng.uniform(2.0, 5.0), fy = rng.uniform(2.0, 5.0);
        auto field_fn = [&](const Vec3& p) {
            Vec3 s{p.x * ax.x, p.y * ax.y, p.z * ax.z};
            return norm(s) - 0.5 + amp * std::sin(fx * p.x) * std::sin(fy * p.y);
        };
        auto field = GridField::from_function(24, {-1, -1, -1}, {1, 1, 1}, field_fn);
        TriMesh m = marching_cubes(field);
        REQUIRE(is_watertight(m));
        // orientation follows the field gradient
        auto grad = [&](const Vec3& p) {
            double h = 1e-5;
            Vec3 g;
            for (int a = 0; a < 3; ++a) {
                Vec3 lo = p, hi = p;
                lo[a] -= h;
                hi[a] += h;
                g[a] = (field_fn(hi) - field_fn(lo)) / (2 * h);
            }
            return g;
        };
        std::size_t aligned = 0;
        for (std::size_t t = 0; t < m.triangle_count(); ++t) {
            Vec3 c = (m.vertices[m.triangles[t][0]] + m.vertices[m.triangles[t][1]] +
                      m.vertices[m.triangles[t][2]]) / 3.0;
            aligned += dot(m.triangle_normal(t), grad(c)) > 0.0;
        }
        REQUIRE(aligned == m.triangle_count());
    }
}

TEST_CASE("sdf sample records") {
    SdfSampleSet s;
    Rng rng(5);
    for (int i = 0; i < 257; ++i) {
        auto [x, y, z] = rng.in_unit_ball();
        s.queries.push_back({x, y, z});
        s.distances.push_back(rng.uniform(-1, 1));
    }
    s.validate();

    std::stringstream ss;
    save_sdf_samples(ss, s);
    std::string bytes = ss.str();
    // header: magic 4 + version 4 + count 4, then 16 bytes per sample
    REQUIRE(bytes.size() == 12 + 16 * s.size());
    auto back = load_sdf_samples(ss);
    REQUIRE(back.size() == s.size());
    // loaded values are the f32 roundings of the originals
    for (std::size_t i = 0; i < s.size(); ++i) {
        REQUIRE(std::fabs(back.queries[i].x - s.queries[i].x) < 1e-7);
        REQUIRE(std::fabs(back.queries[i].y - s.queries[i].y) < 1e-7);
        REQUIRE(std::fabs(back.queries[i].z - s.queries[i].z) < 1e-7);
        REQUIRE(std::fabs(back.distances[i] - s.distances[i]) < 1e-7);
    }
    // a reload-save cycle is byte-identical
    std::stringstream ss2;
    save_sdf_samples(ss2, back);
    REQUIRE(ss2.str() == bytes);

    SECTION("bad magic") {
        std::stringstream bad("XXXXrest");
        REQUIRE_THROWS_AS(load_sdf_samples(bad), IoError);
    }
    SECTION("bad version") {
        std::stringstream buf;
        save_sdf_samples(buf, s);
        std::string bytes = buf.str();
        bytes[4] = 99;
        std::stringstream patched(bytes);
        REQUIRE_THROWS_AS(load_sdf_samples(patched), IoError);
    }
    SECTION("truncated") {
        std::stringstream buf;
        save_sdf_samples(buf, s);
        std::string bytes = buf.str().substr(0, 40);
        std::stringstream cut(bytes);
        REQUIRE_THROWS_AS(load_sdf_samples(cut), IoError);
    }
}

TEST_CASE("surface cloud records") {
    TriMesh sphere = fixtures::icosphere(1.0, 2);
    Rng rng(6);
    auto cloud = sample_surface(sphere, 100, rng);
    std::stringstream ss;
    save_surface_cloud(ss, cloud);
    auto back = load_surface_cloud(ss);
    REQUIRE(back.size() == cloud.size());
    back.validate();  // f32 rounding keeps normals unit within the 1e-6 tolerance
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        REQUIRE(norm(back.points[i] - cloud.points[i]) < 1e-6);
        REQUIRE(std::fabs(norm(back.normals[i]) - 1.0) < 1e-6);
    }

    // reload is a byte fixed point
    std::stringstream ss2;
    save_surface_cloud(ss2, back);
    std::stringstream ss3;
    save_surface_cloud(ss3, cloud);
    REQUIRE(ss2.str() == ss3.str());

    PointCloud no_normals;
    no_normals.points.push_back({0, 0, 0});
    std::stringstream out;
    REQUIRE_THROWS_AS(save_surface_cloud(out, no_normals), InvalidInput);
}
