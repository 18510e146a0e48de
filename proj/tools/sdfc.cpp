// shape completion pipeline driver
#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "sdfc/config.hpp"
#include "sdfc/data/corpus.hpp"
#include "sdfc/error.hpp"
#include "sdfc/eval.hpp"
#include "sdfc/geom/mesh_io.hpp"
#include "sdfc/geom/sampling.hpp"
#include "sdfc/rng.hpp"
#include "sdfc/train/checkpoint.hpp"
#include "sdfc/train/complete.hpp"
#include "sdfc/train/trainer.hpp"

namespace fs = std::filesystem;
using namespace sdfc;

namespace {

struct UsageError {
    std::string message;
};

constexpr const char* kUsage = R"(usage: sdfc <command> ...

commands:
  gen-corpus <config>                      build the procedural corpus into corpus_dir
  preprocess <config>                      turn raw_dir/*.obj meshes into corpus records
  train <config> [--resume <checkpoint>]   train into run_dir (losses.csv, checkpoints)
  complete <checkpoint> <input.{obj,xyz}> [--ratio r] [--res R] [--points N] [--seed S] -o <out.obj>
                                           complete a partial input to a mesh
  eval <checkpoint> <config>               evaluate on the test split (eval.csv, curve.csv)
  ablate <which> <checkpoint> <config>     which: density | partiality | network

a config file is flat INI text; unknown keys are errors. SDFC_SEED overrides
the [run] seed. complete's .xyz input is 'x y z [nx ny nz]' per line in the
unit-ball frame; .obj input is normalized and surface-sampled first.
)";

RunConfig load_config_with_env(const std::string& path) {
    RunConfig c = load_run_config(path);
    if (const char* env = std::getenv("SDFC_SEED")) {
        c.seed = cfg_detail::to_u64("env.SDFC_SEED", env);
        c.validate();
    }
    return c;
}

int cmd_gen_corpus(const std::string& config_path) {
    RunConfig c = load_config_with_env(config_path);
    data::ToyCorpus tc = data::generate_toy_corpus(c.corpus);
    data::split_corpus(tc.records, c.test_fraction, c.seed);
    data::save_corpus(c.corpus_dir, tc.records, tc.discarded);
    std::size_t n_test = 0;
    for (const auto& r : tc.records)
        if (r.split == data::Split::Test) ++n_test;
    std::printf("corpus: %zu shapes (%zu train, %zu test), %zu discarded -> %s\n",
                tc.records.size(), tc.records.size() - n_test, n_test, tc.discarded.size(),
                c.corpus_dir.c_str());
    return 0;
}

int cmd_preprocess(const std::string& config_path) {
    RunConfig c = load_config_with_env(config_path);
    std::vector<fs::path> inputs;
    if (!fs::is_directory(c.raw_dir)) throw IoError("preprocess: raw_dir not found: " + c.raw_dir);
    for (const auto& entry : fs::directory_iterator(c.raw_dir))
        if (entry.path().extension() == ".obj") inputs.push_back(entry.path());
    std::sort(inputs.begin(), inputs.end());
    if (inputs.empty()) throw InvalidInput("preprocess: no .obj meshes in " + c.raw_dir);

    std::vector<data::ShapeRecord> records;
    std::vector<data::IndexRow> discarded;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        geom::TriMesh mesh = geom::read_mesh(inputs[i]);
        Rng rng(derive_seed(c.seed, i, 0, 0x9E9));
        data::PreprocessResult res =
            data::preprocess(mesh, c.corpus.sdf_samples, rng, c.corpus.surface_samples);
        std::string id = inputs[i].stem().string();
        if (std::holds_alternative<data::Discarded>(res)) {
            discarded.push_back({id, "-", 0.0, std::get<data::Discarded>(res).reason});
            std::printf("discard %-24s %s\n", id.c_str(),
                        std::get<data::Discarded>(res).reason.c_str());
            continue;
        }
        data::ShapeRecord rec = std::move(std::get<data::ShapeRecord>(res));
        rec.id = id;
        records.push_back(std::move(rec));
    }
    if (records.empty()) throw InvalidInput("preprocess: every input mesh was discarded");
    data::split_corpus(records, c.test_fraction, c.seed);
    data::save_corpus(c.corpus_dir, records, discarded);
    std::printf("preprocess: %zu records, %zu discarded -> %s\n", records.size(),
                discarded.size(), c.corpus_dir.c_str());
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& resume_path) {
    RunConfig c = load_config_with_env(config_path);
    std::vector<data::ShapeRecord> corpus = data::load_corpus(c.corpus_dir);
    train::TrainConfig tc = c.trainer();
    train::TrainState st;
    if (!resume_path.empty()) {
        train::Checkpoint ck = train::load_checkpoint(resume_path);
        st = std::move(ck.state);
        std::printf("resuming from %s at epoch %zu\n", resume_path.c_str(), st.epoch);
    } else {
        st = train::init_train_state(tc);
    }
    st = train::run_training(tc, corpus, c.run_dir, std::move(st));
    const train::EpochRow& last = st.history.back();
    std::printf("trained %zu epochs; final total %.6f (rec %.6f norm %.6f) -> %s\n", st.epoch,
                last.total, last.rec, last.norm, c.run_dir.c_str());
    return 0;
}

geom::PointCloud read_xyz_cloud(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open cloud: " + path.string());
    geom::PointCloud cloud;
    std::string line;
    std::size_t lineno = 0;
    bool normals = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream is(line);
        double x, y, z;
        if (!(is >> x >> y >> z))
            throw IoError("cloud " + path.string() + ": bad row at line " +
                          std::to_string(lineno));
        double nx, ny, nz;
        bool has_n = static_cast<bool>(is >> nx >> ny >> nz);
        if (cloud.points.empty())
            normals = has_n;
        else if (has_n != normals)
            throw IoError("cloud " + path.string() + ": mixed rows with and without normals");
        cloud.points.push_back({x, y, z});
        if (has_n) cloud.normals.push_back({nx, ny, nz});
    }
    if (cloud.points.empty()) throw InvalidInput("cloud " + path.string() + " is empty");
    return cloud;
}

int cmd_complete(const std::vector<std::string>& args) {
    std::string checkpoint_path, input_path, out_path;
    double ratio = 1.0;
    int res = 64;
    std::size_t points = 2048;
    std::uint64_t seed = 1;
    std::vector<std::string> positional;
    for (std::size_t i = 0; i < args.size(); ++i) {
        const std::string& a = args[i];
        auto next = [&](const char* flag) -> const std::string& {
            if (i + 1 >= args.size()) throw UsageError{std::string(flag) + " needs a value"};
            return args[++i];
        };
        if (a == "--ratio") ratio = cfg_detail::to_f64("complete.ratio", next("--ratio"));
        else if (a == "--res") res = cfg_detail::to_int("complete.res", next("--res"));
        else if (a == "--points") points = cfg_detail::to_usize("complete.points", next("--points"));
        else if (a == "--seed") seed = cfg_detail::to_u64("complete.seed", next("--seed"));
        else if (a == "-o") out_path = next("-o");
        else if (!a.empty() && a[0] == '-') throw UsageError{"unknown flag: " + a};
        else positional.push_back(a);
    }
    if (positional.size() != 2) throw UsageError{"complete needs <checkpoint> and <input>"};
    if (out_path.empty()) throw UsageError{"complete needs -o <out.obj>"};
    checkpoint_path = positional[0];
    input_path = positional[1];
    if (const char* env = std::getenv("SDFC_SEED")) seed = cfg_detail::to_u64("env.SDFC_SEED", env);

    train::Checkpoint ck = train::load_checkpoint(checkpoint_path);
    Rng rng(seed);
    geom::PointCloud v_part;
    fs::path in(input_path);
    if (in.extension() == ".obj") {
        geom::TriMesh mesh = geom::read_mesh(in);
        geom::normalize_to_unit_sphere(mesh);
        v_part = geom::sample_surface(mesh, points, rng);
        if (ratio < 1.0) v_part = geom::half_space_cut(v_part, ratio, rng);
    } else {
        v_part = read_xyz_cloud(in);
        if (ratio < 1.0) v_part = geom::half_space_cut(v_part, ratio, rng);
    }

    try {
        geom::TriMesh mesh_rec =
            train::complete(ck.state.enc, ck.state.gen, ck.config.net, v_part, res);
        geom::write_obj(out_path, mesh_rec);
        std::printf("completed %s (%zu input points, ratio %.2f) -> %s: %zu vertices, %zu faces\n",
                    input_path.c_str(), v_part.size(), ratio, out_path.c_str(),
                    mesh_rec.vertices.size(), mesh_rec.triangles.size());
    } catch (const EmptySurface& e) {
        std::fprintf(stderr, "no surface: %s\n", e.what());
        return 2;
    }
    return 0;
}

int cmd_eval(const std::string& checkpoint_path, const std::string& config_path) {
    RunConfig c = load_config_with_env(config_path);
    train::Checkpoint ck = train::load_checkpoint(checkpoint_path);
    std::vector<data::ShapeRecord> corpus = data::load_corpus(c.corpus_dir);
    std::vector<const data::ShapeRecord*> test = eval::test_split_view(corpus);
    eval::EvalReport rep = eval::eval_completion(ck.state.enc, ck.state.gen, ck.config.net, test,
                                                 c.eval_points, c.grid_res, c.seed);
    fs::create_directories(c.run_dir);
    {
        std::ofstream out(fs::path(c.run_dir) / "eval.csv");
        eval::write_eval_csv(out, rep);
    }
    {
        std::ofstream out(fs::path(c.run_dir) / "curve.csv");
        eval::write_curve_csv(out, rep);
    }
    {
        std::ofstream out(fs::path(c.run_dir) / "report.txt");
        eval::write_report_text(out, rep);
    }
    eval::write_report_text(std::cout, rep);
    return 0;
}

int cmd_ablate(const std::string& which, const std::string& checkpoint_path,
               const std::string& config_path) {
    RunConfig c = load_config_with_env(config_path);
    std::vector<data::ShapeRecord> corpus = data::load_corpus(c.corpus_dir);
    std::vector<const data::ShapeRecord*> test = eval::test_split_view(corpus);
    fs::create_directories(c.run_dir);

    if (which == "density") {
        train::Checkpoint ck = train::load_checkpoint(checkpoint_path);
        std::vector<std::size_t> counts{50, 100, 250, 500, 1000, 2000, 4000, 8000};
        auto table = eval::ablate_density(ck.state.enc, ck.state.gen, ck.config.net, test, counts,
                                          c.eval_points, c.grid_res, c.seed, &std::cerr);
        std::ofstream out(fs::path(c.run_dir) / "ablate_density.csv");
        eval::write_density_csv(out, table);
        std::printf("input density sweep (cd x1000)\n  %8s %8s %12s %9s\n", "count", "used",
                    "mean_cd", "failures");
        for (const auto& r : table)
            std::printf("  %8zu %8zu %12.4f %9zu\n", r.requested, r.used, 1e3 * r.mean_cd,
                        r.failures);
        return 0;
    }
    if (which == "partiality") {
        train::Checkpoint ck = train::load_checkpoint(checkpoint_path);
        std::vector<double> ratios;
        for (int i = 1; i <= 20; ++i) ratios.push_back(0.05 * i);
        auto table = eval::ablate_partiality(ck.state.enc, ck.state.gen, ck.config.net, test,
                                             ratios, c.eval_points, c.grid_res, c.seed);
        std::ofstream out(fs::path(c.run_dir) / "ablate_partiality.csv");
        eval::write_partiality_csv(out, table);
        std::printf("partiality sweep (cd x1000)\n  %6s %12s %12s %12s %9s\n", "ratio", "cd",
                    "gen->gt", "gt->gen", "failures");
        for (const auto& r : table)
            std::printf("  %6.2f %12.4f %12.4f %12.4f %9zu\n", r.ratio, 1e3 * r.cd,
                        1e3 * r.gen_to_gt, 1e3 * r.gt_to_gen, r.failures);
        return 0;
    }
    if (which == "network") {
        auto table = eval::ablate_network(c.trainer(), corpus, c.eval_points, c.grid_res);
        std::ofstream out(fs::path(c.run_dir) / "ablate_network.csv");
        eval::write_network_csv(out, table);
        std::printf("critic / normal-loss grid (cd x1000)\n  %-6s %-11s %-5s %-9s %12s\n", "tag",
                    "critic", "norm", "status", "mean_cd");
        for (const auto& r : table) {
            if (r.diverged)
                std::printf("  %-6s %-11s %-5s %-9s %12s (abort at epoch %zu)\n", r.tag.c_str(),
                            r.critic == net::CriticVariant::PointNetPP ? "pointnet++" : "pointnet",
                            r.with_norm_loss ? "yes" : "no", "diverged", "nan", r.abort_epoch);
            else
                std::printf("  %-6s %-11s %-5s %-9s %12.4f\n", r.tag.c_str(),
                            r.critic == net::CriticVariant::PointNetPP ? "pointnet++" : "pointnet",
                            r.with_norm_loss ? "yes" : "no", "ok", 1e3 * r.mean_cd);
        }
        std::printf("  %s\n", eval::kNetworkAblationFootnote);
        return 0;
    }
    throw UsageError{"unknown ablation: " + which + " (density | partiality | network)"};
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        if (args.empty()) throw UsageError{"missing command"};
        const std::string& cmd = args[0];
        if (cmd == "gen-corpus") {
            if (args.size() != 2) throw UsageError{"gen-corpus needs <config>"};
            return cmd_gen_corpus(args[1]);
        }
        if (cmd == "preprocess") {
            if (args.size() != 2) throw UsageError{"preprocess needs <config>"};
            return cmd_preprocess(args[1]);
        }
        if (cmd == "train") {
            std::string config_path, resume;
            for (std::size_t i = 1; i < args.size(); ++i) {
                if (args[i] == "--resume") {
                    if (i + 1 >= args.size()) throw UsageError{"--resume needs a value"};
                    resume = args[++i];
                } else if (!args[i].empty() && args[i][0] == '-') {
                    throw UsageError{"unknown flag: " + args[i]};
                } else if (config_path.empty()) {
                    config_path = args[i];
                } else {
                    throw UsageError{"train takes one <config>"};
                }
            }
            if (config_path.empty()) throw UsageError{"train needs <config>"};
            return cmd_train(config_path, resume);
        }
        if (cmd == "complete") return cmd_complete({args.begin() + 1, args.end()});
        if (cmd == "eval") {
            if (args.size() != 3) throw UsageError{"eval needs <checkpoint> <config>"};
            return cmd_eval(args[1], args[2]);
        }
        if (cmd == "ablate") {
            if (args.size() != 4) throw UsageError{"ablate needs <which> <checkpoint> <config>"};
            return cmd_ablate(args[1], args[2], args[3]);
        }
        throw UsageError{"unknown command: " + cmd};
    } catch (const UsageError& e) {
        std::fprintf(stderr, "error: %s\n%s", e.message.c_str(), kUsage);
        return 1;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const InvalidInput& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
