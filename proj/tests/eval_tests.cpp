#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "sdfc/data/corpus.hpp"
#include "sdfc/error.hpp"
#include "sdfc/eval.hpp"
#include "sdfc/geom/chamfer.hpp"
#include "sdfc/geom/sampling.hpp"
#include "sdfc/net/encoder.hpp"
#include "sdfc/net/generator.hpp"
#include "sdfc/rng.hpp"
#include "sdfc/train/complete.hpp"

using sdfc::DiagnosticError;
using sdfc::InvalidInput;
using sdfc::Rng;

namespace {

sdfc::net::NetConfig tiny_net() {
    sdfc::net::NetConfig c;
    c.latent_dim = 6;
    c.encoder_widths = {4, 6};
    c.gen_depth = 3;
    c.gen_width = 8;
    c.skip_layer = 2;
    c.set_abstraction = {{2, 0.5, 4, {4, 6}}, {2, 0.9, 4, {6, 8}}};
    c.critic_global_mlp = {8, 12};
    c.critic_head = {8, 4};
    return c;
}

struct Fixture {
    sdfc::data::ToyCorpus corpus;
    std::vector<const sdfc::data::ShapeRecord*> test;
    sdfc::net::NetConfig net = tiny_net();
    sdfc::diff::ParamStore enc, gen;
};

// corpus plus a generator whose field crosses zero for the first test shape's
// test draw; the offset centers the output bias on the median field value
Fixture make_fixture() {
    Fixture fx;
    sdfc::data::CorpusSpec spec;
    spec.count = 5;
    spec.seed = 21;
    spec.mesh_res = 16;
    spec.sdf_samples = 1500;
    spec.surface_samples = 512;
    fx.corpus = sdfc::data::generate_toy_corpus(spec);
    sdfc::data::split_corpus(fx.corpus.records, 0.4, 7);
    fx.test = sdfc::eval::test_split_view(fx.corpus.records);
    REQUIRE(fx.test.size() == 2);

    Rng enc_rng(31), gen_rng(32);
    sdfc::net::init_encoder(fx.enc, fx.net, enc_rng);
    sdfc::net::init_generator(fx.gen, fx.net, gen_rng);

    Rng rng(sdfc::derive_seed(77, 0, 0, sdfc::eval::eval_detail::kEvalSalt));
    sdfc::geom::PointCloud part =
        sdfc::data::draw_partial(*fx.test[0], sdfc::data::PartialMode::Test, rng);
    std::vector<double> z = sdfc::net::encode_values(fx.enc, fx.net, part.points);
    std::vector<sdfc::geom::Vec3> probe;
    for (int i = 0; i < 201; ++i) {
        double t = -1.1 + 2.2 * static_cast<double>(i) / 200.0;
        probe.push_back({t, 0.37 * t, -0.53 * t});
    }
    std::vector<double> vals = sdfc::net::generate_values(fx.gen, fx.net, probe, z);
    std::nth_element(vals.begin(), vals.begin() + 100, vals.end());
    for (auto& p : fx.gen)
        if (p.name == "g.out.b") p.value[0] -= vals[100];
    return fx;
}

const Fixture& fixture() {
    static Fixture fx = make_fixture();
    return fx;
}

std::string report_bytes(const sdfc::eval::EvalReport& rep) {
    std::ostringstream os;
    sdfc::eval::write_eval_csv(os, rep);
    sdfc::eval::write_curve_csv(os, rep);
    return os.str();
}

}  // namespace

TEST_CASE("ground-truth meshes evaluated against themselves sit inside sampling noise") {
    const Fixture& fx = fixture();
    for (const sdfc::data::ShapeRecord* rec : fx.test) {
        Rng rng(901);
        sdfc::geom::PointCloud a = sdfc::geom::sample_surface(rec->mesh, 30000, rng);
        sdfc::geom::PointCloud b = sdfc::geom::sample_surface(rec->mesh, 30000, rng);
        sdfc::geom::PointCloud c = sdfc::geom::sample_surface(rec->mesh, 30000, rng);
        sdfc::geom::PointCloud d = sdfc::geom::sample_surface(rec->mesh, 30000, rng);
        double noise = sdfc::geom::chamfer_distance(a, b).total;
        double self_cd = sdfc::geom::chamfer_distance(c, d).total;
        INFO("shape " << rec->id);
        REQUIRE(noise > 0.0);
        REQUIRE(self_cd < 2.0 * noise);
        REQUIRE(noise < 2.0 * self_cd);
    }
}

TEST_CASE("evaluation is reproducible bit for bit and internally consistent") {
    const Fixture& fx = fixture();
    sdfc::eval::EvalReport rep =
        sdfc::eval::eval_completion(fx.enc, fx.gen, fx.net, fx.test, 2000, 20, 77);
    REQUIRE(rep.shapes.size() + rep.failures.size() == fx.test.size());
    REQUIRE(!rep.shapes.empty());

    sdfc::eval::EvalReport again =
        sdfc::eval::eval_completion(fx.enc, fx.gen, fx.net, fx.test, 2000, 20, 77);
    REQUIRE(report_bytes(rep) == report_bytes(again));

    double sum = 0.0;
    for (const auto& r : rep.shapes) {
        REQUIRE(r.cd == r.gen_to_gt + r.gt_to_gen);
        sum += r.cd;
    }
    REQUIRE(rep.mean_cd == Catch::Approx(sum / static_cast<double>(rep.shapes.size())).margin(1e-15));

    sdfc::eval::EvalReport tampered = rep;
    tampered.mean_cd += 0.5;
    REQUIRE_THROWS_AS(tampered.check(), DiagnosticError);
}

TEST_CASE("a different seed changes the drawn partials") {
    const Fixture& fx = fixture();
    sdfc::eval::EvalReport a =
        sdfc::eval::eval_completion(fx.enc, fx.gen, fx.net, fx.test, 1000, 16, 77);
    sdfc::eval::EvalReport b =
        sdfc::eval::eval_completion(fx.enc, fx.gen, fx.net, fx.test, 1000, 16, 78);
    REQUIRE(report_bytes(a) != report_bytes(b));
}

TEST_CASE("cumulative curve matches a brute-force recount and is a valid cdf") {
    const Fixture& fx = fixture();
    sdfc::eval::EvalReport rep =
        sdfc::eval::eval_completion(fx.enc, fx.gen, fx.net, fx.test, 2000, 20, 77);
    REQUIRE(rep.curve.size() == sdfc::eval::kCurveSamples + 1);

    // replay the deterministic pipeline to pool per-point distances
    std::vector<double> pool_gen, pool_gt;
    for (std::size_t i = 0; i < fx.test.size(); ++i) {
        Rng rng(sdfc::derive_seed(77, i, 0, sdfc::eval::eval_detail::kEvalSalt));
        sdfc::geom::PointCloud part =
            sdfc::data::draw_partial(*fx.test[i], sdfc::data::PartialMode::Test, rng);
        sdfc::geom::TriMesh mesh;
        try {
            mesh = sdfc::train::complete(fx.enc, fx.gen, fx.net, part, 20);
        } catch (const sdfc::EmptySurface&) {
            continue;
        }
        sdfc::geom::PointCloud xr = sdfc::geom::sample_surface(mesh, 2000, rng);
        sdfc::geom::PointCloud xf = sdfc::geom::sample_surface(fx.test[i]->mesh, 2000, rng);
        auto dg = sdfc::geom::nearest_sq_distances(xr, xf);
        auto dt = sdfc::geom::nearest_sq_distances(xf, xr);
        pool_gen.insert(pool_gen.end(), dg.begin(), dg.end());
        pool_gt.insert(pool_gt.end(), dt.begin(), dt.end());
    }
    REQUIRE(!pool_gen.empty());

    const sdfc::eval::CurveSample& at_max = rep.curve[sdfc::eval::kCurveSamples - 1];
    REQUIRE(at_max.threshold == sdfc::eval::kCurveMaxThreshold);
    auto frac_le = [](const std::vector<double>& v, double t) {
        std::size_t n = 0;
        for (double x : v)
            if (x <= t) ++n;
        return static_cast<double>(n) / static_cast<double>(v.size());
    };
    REQUIRE(at_max.frac_gen_to_gt == frac_le(pool_gen, sdfc::eval::kCurveMaxThreshold));
    REQUIRE(at_max.frac_gt_to_gen == frac_le(pool_gt, sdfc::eval::kCurveMaxThreshold));

    for (std::size_t i = 1; i < rep.curve.size(); ++i) {
        REQUIRE(rep.curve[i].threshold >= rep.curve[i - 1].threshold);
        REQUIRE(rep.curve[i].frac_gen_to_gt >= rep.curve[i - 1].frac_gen_to_gt);
        REQUIRE(rep.curve[i].frac_gt_to_gen >= rep.curve[i - 1].frac_gt_to_gen);
    }
    REQUIRE(rep.curve.back().frac_gen_to_gt == 1.0);
    REQUIRE(rep.curve.back().frac_gt_to_gen == 1.0);
}

TEST_CASE("completions without a zero crossing are counted, not averaged") {
    const Fixture& fx = fixture();
    sdfc::diff::ParamStore flat = fx.gen;
    for (auto& p : flat) {
        std::fill(p.value.begin(), p.value.end(), 0.0);
        if (p.name == "g.out.b") p.value[0] = 1.0;  // field stuck at +1
    }
    sdfc::eval::EvalReport rep =
        sdfc::eval::eval_completion(fx.enc, flat, fx.net, fx.test, 500, 12, 77);
    REQUIRE(rep.shapes.empty());
    REQUIRE(rep.failures.size() == fx.test.size());
    REQUIRE(rep.mean_cd == 0.0);
    REQUIRE(rep.curve.empty());
    REQUIRE_NOTHROW(rep.check());
}

TEST_CASE("density ablation emits every requested count and clamps oversized ones") {
    const Fixture& fx = fixture();
    std::vector<std::size_t> counts{50, 100, 100000};
    std::ostringstream warn;
    auto table = sdfc::eval::ablate_density(fx.enc, fx.gen, fx.net, fx.test, counts, 800, 16, 77,
                                            &warn);
    REQUIRE(table.size() == counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) REQUIRE(table[i].requested == counts[i]);
    REQUIRE(table[2].used == 512);  // cached surface size
    REQUIRE_THAT(warn.str(), Catch::Matchers::ContainsSubstring("using 512"));
    REQUIRE(table[0].used == 50);
}

TEST_CASE("density ablation at the full cache matches plain evaluation exactly") {
    const Fixture& fx = fixture();
    sdfc::eval::EvalReport rep =
        sdfc::eval::eval_completion(fx.enc, fx.gen, fx.net, fx.test, 800, 16, 77);
    std::vector<std::size_t> counts{512};
    auto table =
        sdfc::eval::ablate_density(fx.enc, fx.gen, fx.net, fx.test, counts, 800, 16, 77, nullptr);
    REQUIRE(table.size() == 1);
    REQUIRE(table[0].mean_cd == rep.mean_cd);
    REQUIRE(table[0].failures == rep.failures.size());
}

TEST_CASE("partiality ablation rows decompose exactly and validate ratios") {
    const Fixture& fx = fixture();
    std::vector<double> ratios{0.5, 1.0};
    auto table = sdfc::eval::ablate_partiality(fx.enc, fx.gen, fx.net, fx.test, ratios, 800, 16, 77);
    REQUIRE(table.size() == 2);
    for (const auto& row : table) {
        REQUIRE(row.cd == row.gen_to_gt + row.gt_to_gen);
        REQUIRE(std::isfinite(row.cd));
    }
    REQUIRE(table[0].ratio == 0.5);
    REQUIRE(table[1].ratio == 1.0);

    std::vector<double> bad{0.0};
    REQUIRE_THROWS_AS(
        sdfc::eval::ablate_partiality(fx.enc, fx.gen, fx.net, fx.test, bad, 800, 16, 77),
        InvalidInput);
}

TEST_CASE("network ablation covers the four-setting grid") {
    sdfc::data::CorpusSpec spec;
    spec.count = 4;
    spec.seed = 5;
    spec.mesh_res = 16;
    spec.sdf_samples = 2000;
    spec.surface_samples = 256;
    sdfc::data::ToyCorpus tc = sdfc::data::generate_toy_corpus(spec);
    sdfc::data::split_corpus(tc.records, 0.3, 3);

    sdfc::train::TrainConfig cfg;
    cfg.net = tiny_net();
    cfg.seed = 42;
    cfg.schedule.stage_points = {16, 32};
    cfg.schedule.epochs_per_stage = 2;
    cfg.schedule.refine_epochs = 1;
    cfg.batch_size = 3;

    auto table = sdfc::eval::ablate_network(cfg, tc.records, 400, 12);
    REQUIRE(table.size() == 4);
    REQUIRE(table[0].tag == "(i)");
    REQUIRE(table[1].tag == "(ii)");
    REQUIRE(table[2].tag == "(iii)");
    REQUIRE(table[3].tag == "(iv)");
    REQUIRE(table[0].critic == sdfc::net::CriticVariant::PointNet);
    REQUIRE(table[1].critic == sdfc::net::CriticVariant::PointNet);
    REQUIRE(table[2].critic == sdfc::net::CriticVariant::PointNetPP);
    REQUIRE(table[3].critic == sdfc::net::CriticVariant::PointNetPP);
    REQUIRE_FALSE(table[0].with_norm_loss);
    REQUIRE(table[1].with_norm_loss);
    REQUIRE_FALSE(table[2].with_norm_loss);
    REQUIRE(table[3].with_norm_loss);
    for (const auto& row : table) {
        REQUIRE_FALSE(row.diverged);  // five tiny epochs stay finite
        if (row.failures == 0) REQUIRE(row.mean_cd > 0.0);
    }

    std::ostringstream os;
    sdfc::eval::write_network_csv(os, table);
    std::string csv = os.str();
    REQUIRE_THAT(csv, Catch::Matchers::ContainsSubstring("tag,critic,norm_loss,status"));
    REQUIRE_THAT(csv, Catch::Matchers::ContainsSubstring("(iv),pointnet++,yes,ok"));
    REQUIRE_THAT(std::string(sdfc::eval::kNetworkAblationFootnote),
                 Catch::Matchers::ContainsSubstring("12.30"));
    REQUIRE_THAT(std::string(sdfc::eval::kNetworkAblationFootnote),
                 Catch::Matchers::ContainsSubstring("10.70"));
}

TEST_CASE("csv emitters use the pinned schemas") {
    const Fixture& fx = fixture();
    sdfc::eval::EvalReport rep =
        sdfc::eval::eval_completion(fx.enc, fx.gen, fx.net, fx.test, 500, 12, 77);
    std::ostringstream e, c, d, p, t;
    sdfc::eval::write_eval_csv(e, rep);
    sdfc::eval::write_curve_csv(c, rep);
    REQUIRE_THAT(e.str(), Catch::Matchers::StartsWith("shape_id,cd,gen_to_gt,gt_to_gen\n"));
    REQUIRE_THAT(c.str(),
                 Catch::Matchers::StartsWith("threshold,fraction_gen_to_gt,fraction_gt_to_gen\n"));
    sdfc::eval::write_density_csv(d, {});
    REQUIRE(d.str() == "count,used,mean_cd,failures\n");
    sdfc::eval::write_partiality_csv(p, {});
    REQUIRE(p.str() == "ratio,cd,gen_to_gt,gt_to_gen,failures\n");
    sdfc::eval::write_report_text(t, rep);
    REQUIRE_THAT(t.str(), Catch::Matchers::ContainsSubstring("x1000"));
}

TEST_CASE("eval input validation") {
    const Fixture& fx = fixture();
    std::vector<const sdfc::data::ShapeRecord*> none;
    REQUIRE_THROWS_AS(sdfc::eval::eval_completion(fx.enc, fx.gen, fx.net, none, 100, 8, 1),
                      InvalidInput);
    REQUIRE_THROWS_AS(sdfc::eval::eval_completion(fx.enc, fx.gen, fx.net, fx.test, 0, 8, 1),
                      InvalidInput);
}
