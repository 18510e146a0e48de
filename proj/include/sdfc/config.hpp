#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "sdfc/data/corpus.hpp"
#include "sdfc/error.hpp"
#include "sdfc/net/config.hpp"
#include "sdfc/train/state.hpp"

namespace sdfc {

// Every knob in one place. A config file overrides defaults; absent keys keep
// them. Unknown keys or sections are errors.
struct RunConfig {
    net::NetConfig net;
    train::LossWeights weights;
    train::Schedule schedule;
    data::CorpusSpec corpus;

    double lr_d = 1e-5;
    double lr_eg = 1e-3;
    std::size_t batch_size = 10;
    std::size_t checkpoint_every = 50;
    std::uint64_t seed = 1;
    double test_fraction = 0.2;

    std::size_t eval_points = 30000;
    int grid_res = 64;

    std::string raw_dir = "raw";  // preprocess input meshes
    std::string corpus_dir = "corpus";
    std::string run_dir = "run";

    void validate() const {
        trainer().validate();
        corpus.validate();
        if (!(test_fraction > 0.0) || !(test_fraction < 1.0))
            throw ConfigError("config: run.test_fraction must be in (0,1)");
        if (eval_points < 1) throw ConfigError("config: eval.points must be >= 1");
        if (grid_res < 2) throw ConfigError("config: eval.grid_res must be >= 2");
        if (raw_dir.empty() || corpus_dir.empty() || run_dir.empty())
            throw ConfigError("config: paths must be non-empty");
    }

    train::TrainConfig trainer() const {
        train::TrainConfig t;
        t.net = net;
        t.weights = weights;
        t.schedule = schedule;
        t.lr_d = lr_d;
        t.lr_eg = lr_eg;
        t.batch_size = batch_size;
        t.seed = seed;
        t.checkpoint_every = checkpoint_every;
        return t;
    }
};

namespace cfg_detail {

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}

[[noreturn]] inline void bad_value(const std::string& where, const std::string& what) {
    throw ConfigError("config: " + where + ": " + what);
}

inline double to_f64(const std::string& where, const std::string& v) {
    try {
        std::size_t used = 0;
        double x = std::stod(v, &used);
        if (used != v.size()) bad_value(where, "trailing characters in number '" + v + "'");
        return x;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        bad_value(where, "not a number: '" + v + "'");
    }
}

inline std::uint64_t to_u64(const std::string& where, const std::string& v) {
    std::uint64_t x = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size())
        bad_value(where, "not a non-negative integer: '" + v + "'");
    return x;
}

inline std::size_t to_usize(const std::string& where, const std::string& v) {
    return static_cast<std::size_t>(to_u64(where, v));
}

inline int to_int(const std::string& where, const std::string& v) {
    std::uint64_t x = to_u64(where, v);
    if (x > 1u << 20) bad_value(where, "value out of range: '" + v + "'");
    return static_cast<int>(x);
}

inline std::vector<std::size_t> to_usize_list(const std::string& where, const std::string& v) {
    std::vector<std::size_t> out;
    for (const std::string& tok : split(v, ','))
        if (!tok.empty()) out.push_back(to_usize(where, tok));
    if (out.empty()) bad_value(where, "empty list");
    return out;
}

inline net::SetAbstractionSpec to_sa(const std::string& where, const std::string& v) {
    std::istringstream is(v);
    std::vector<std::string> tok;
    std::string t;
    while (is >> t) tok.push_back(t);
    if (tok.size() < 4)
        bad_value(where, "expected 'centroid_div radius max_neighbors mlp...'");
    net::SetAbstractionSpec sa;
    sa.centroid_div = to_usize(where, tok[0]);
    sa.radius = to_f64(where, tok[1]);
    sa.max_neighbors = to_usize(where, tok[2]);
    sa.mlp.clear();
    for (std::size_t i = 3; i < tok.size(); ++i) sa.mlp.push_back(to_usize(where, tok[i]));
    return sa;
}

inline std::string f64_str(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::string join(const std::vector<std::size_t>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(v[i]);
    }
    return out;
}

}  // namespace cfg_detail

inline RunConfig parse_run_config(std::istream& in) {
    using namespace cfg_detail;
    RunConfig c;
    c.net.set_abstraction.clear();  // sa keys replace, not append
    bool sa_seen = false;
    std::string line, section;
    std::size_t lineno = 0;
    std::vector<std::string> seen;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config: line " + std::to_string(lineno) + ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        std::string where = section + "." + key;
        for (const std::string& s : seen)
            if (s == where) throw ConfigError("config: duplicate key: " + where);
        seen.push_back(where);

        if (section == "net") {
            if (key == "latent_dim") c.net.latent_dim = to_usize(where, val);
            else if (key == "encoder_widths") c.net.encoder_widths = to_usize_list(where, val);
            else if (key == "gen_depth") c.net.gen_depth = to_usize(where, val);
            else if (key == "gen_width") c.net.gen_width = to_usize(where, val);
            else if (key == "skip_layer") c.net.skip_layer = to_usize(where, val);
            else if (key == "leaky_slope") c.net.leaky_slope = to_f64(where, val);
            else if (key == "layer_norm_eps") c.net.layer_norm_eps = to_f64(where, val);
            else if (key == "critic") {
                if (val == "pointnet++") c.net.critic = net::CriticVariant::PointNetPP;
                else if (val == "pointnet") c.net.critic = net::CriticVariant::PointNet;
                else bad_value(where, "expected 'pointnet++' or 'pointnet'");
            } else if (key.size() > 2 && key.compare(0, 2, "sa") == 0 &&
                       key.find_first_not_of("0123456789", 2) == std::string::npos) {
                std::size_t idx = to_usize(where, key.substr(2));
                if (idx != c.net.set_abstraction.size() + 1)
                    bad_value(where, "set-abstraction levels must be numbered sa1, sa2, ... in order");
                c.net.set_abstraction.push_back(to_sa(where, val));
                sa_seen = true;
            } else if (key == "critic_global_mlp") c.net.critic_global_mlp = to_usize_list(where, val);
            else if (key == "critic_head") c.net.critic_head = to_usize_list(where, val);
            else throw ConfigError("config: unknown key: " + where);
        } else if (section == "loss") {
            if (key == "lambda_rec") c.weights.lambda_rec = to_f64(where, val);
            else if (key == "lambda_norm") c.weights.lambda_norm = to_f64(where, val);
            else if (key == "lambda_gp") c.weights.lambda_gp = to_f64(where, val);
            else throw ConfigError("config: unknown key: " + where);
        } else if (section == "schedule") {
            if (key == "stage_points") c.schedule.stage_points = to_usize_list(where, val);
            else if (key == "epochs_per_stage") c.schedule.epochs_per_stage = to_usize(where, val);
            else if (key == "refine_epochs") c.schedule.refine_epochs = to_usize(where, val);
            else throw ConfigError("config: unknown key: " + where);
        } else if (section == "train") {
            if (key == "lr_d") c.lr_d = to_f64(where, val);
            else if (key == "lr_eg") c.lr_eg = to_f64(where, val);
            else if (key == "batch_size") c.batch_size = to_usize(where, val);
            else if (key == "checkpoint_every") c.checkpoint_every = to_usize(where, val);
            else throw ConfigError("config: unknown key: " + where);
        } else if (section == "corpus") {
            if (key == "count") c.corpus.count = to_usize(where, val);
            else if (key == "seed") c.corpus.seed = to_u64(where, val);
            else if (key == "mesh_res") c.corpus.mesh_res = to_int(where, val);
            else if (key == "sdf_samples") c.corpus.sdf_samples = to_usize(where, val);
            else if (key == "surface_samples") c.corpus.surface_samples = to_usize(where, val);
            else if (key == "families") {
                c.corpus.families.clear();
                for (const std::string& tok : split(val, ','))
                    if (!tok.empty()) c.corpus.families.push_back(data::family_from_string(tok));
            } else if (key == "ellipsoid_axis_min") c.corpus.ellipsoid_axis_min = to_f64(where, val);
            else if (key == "ellipsoid_axis_max") c.corpus.ellipsoid_axis_max = to_f64(where, val);
            else if (key == "capsule_half_len_min") c.corpus.capsule_half_len_min = to_f64(where, val);
            else if (key == "capsule_half_len_max") c.corpus.capsule_half_len_max = to_f64(where, val);
            else if (key == "capsule_radius_min") c.corpus.capsule_radius_min = to_f64(where, val);
            else if (key == "capsule_radius_max") c.corpus.capsule_radius_max = to_f64(where, val);
            else if (key == "box_half_min") c.corpus.box_half_min = to_f64(where, val);
            else if (key == "box_half_max") c.corpus.box_half_max = to_f64(where, val);
            else if (key == "box_round_min") c.corpus.box_round_min = to_f64(where, val);
            else if (key == "box_round_max") c.corpus.box_round_max = to_f64(where, val);
            else throw ConfigError("config: unknown key: " + where);
        } else if (section == "eval") {
            if (key == "points") c.eval_points = to_usize(where, val);
            else if (key == "grid_res") c.grid_res = to_int(where, val);
            else throw ConfigError("config: unknown key: " + where);
        } else if (section == "run") {
            if (key == "seed") c.seed = to_u64(where, val);
            else if (key == "test_fraction") c.test_fraction = to_f64(where, val);
            else if (key == "raw_dir") c.raw_dir = val;
            else if (key == "corpus_dir") c.corpus_dir = val;
            else if (key == "run_dir") c.run_dir = val;
            else throw ConfigError("config: unknown key: " + where);
        } else {
            throw ConfigError("config: unknown section: [" + section + "] (key " + where + ")");
        }
    }
    if (!sa_seen) c.net.set_abstraction = net::NetConfig{}.set_abstraction;
    c.validate();
    return c;
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("config: cannot open " + path);
    return parse_run_config(in);
}

inline std::string serialize_run_config(const RunConfig& c) {
    using namespace cfg_detail;
    std::ostringstream o;
    o << "[net]\n";
    o << "latent_dim = " << c.net.latent_dim << "\n";
    o << "encoder_widths = " << join(c.net.encoder_widths) << "\n";
    o << "gen_depth = " << c.net.gen_depth << "\n";
    o << "gen_width = " << c.net.gen_width << "\n";
    o << "skip_layer = " << c.net.skip_layer << "\n";
    o << "leaky_slope = " << f64_str(c.net.leaky_slope) << "\n";
    o << "layer_norm_eps = " << f64_str(c.net.layer_norm_eps) << "\n";
    o << "critic = " << (c.net.critic == net::CriticVariant::PointNetPP ? "pointnet++" : "pointnet")
      << "\n";
    for (std::size_t i = 0; i < c.net.set_abstraction.size(); ++i) {
        const net::SetAbstractionSpec& sa = c.net.set_abstraction[i];
        o << "sa" << i + 1 << " = " << sa.centroid_div << " " << f64_str(sa.radius) << " "
          << sa.max_neighbors;
        for (std::size_t w : sa.mlp) o << " " << w;
        o << "\n";
    }
    o << "critic_global_mlp = " << join(c.net.critic_global_mlp) << "\n";
    o << "critic_head = " << join(c.net.critic_head) << "\n";
    o << "\n[loss]\n";
    o << "lambda_rec = " << f64_str(c.weights.lambda_rec) << "\n";
    o << "lambda_norm = " << f64_str(c.weights.lambda_norm) << "\n";
    o << "lambda_gp = " << f64_str(c.weights.lambda_gp) << "\n";
    o << "\n[schedule]\n";
    o << "stage_points = " << join(c.schedule.stage_points) << "\n";
    o << "epochs_per_stage = " << c.schedule.epochs_per_stage << "\n";
    o << "refine_epochs = " << c.schedule.refine_epochs << "\n";
    o << "\n[train]\n";
    o << "lr_d = " << f64_str(c.lr_d) << "\n";
    o << "lr_eg = " << f64_str(c.lr_eg) << "\n";
    o << "batch_size = " << c.batch_size << "\n";
    o << "checkpoint_every = " << c.checkpoint_every << "\n";
    o << "\n[corpus]\n";
    o << "count = " << c.corpus.count << "\n";
    o << "seed = " << c.corpus.seed << "\n";
    o << "mesh_res = " << c.corpus.mesh_res << "\n";
    o << "sdf_samples = " << c.corpus.sdf_samples << "\n";
    o << "surface_samples = " << c.corpus.surface_samples << "\n";
    o << "families = ";
    for (std::size_t i = 0; i < c.corpus.families.size(); ++i) {
        if (i) o << ",";
        o << data::family_name(c.corpus.families[i]);
    }
    o << "\n";
    o << "ellipsoid_axis_min = " << f64_str(c.corpus.ellipsoid_axis_min) << "\n";
    o << "ellipsoid_axis_max = " << f64_str(c.corpus.ellipsoid_axis_max) << "\n";
    o << "capsule_half_len_min = " << f64_str(c.corpus.capsule_half_len_min) << "\n";
    o << "capsule_half_len_max = " << f64_str(c.corpus.capsule_half_len_max) << "\n";
    o << "capsule_radius_min = " << f64_str(c.corpus.capsule_radius_min) << "\n";
    o << "capsule_radius_max = " << f64_str(c.corpus.capsule_radius_max) << "\n";
    o << "box_half_min = " << f64_str(c.corpus.box_half_min) << "\n";
    o << "box_half_max = " << f64_str(c.corpus.box_half_max) << "\n";
    o << "box_round_min = " << f64_str(c.corpus.box_round_min) << "\n";
    o << "box_round_max = " << f64_str(c.corpus.box_round_max) << "\n";
    o << "\n[eval]\n";
    o << "points = " << c.eval_points << "\n";
    o << "grid_res = " << c.grid_res << "\n";
    o << "\n[run]\n";
    o << "seed = " << c.seed << "\n";
    o << "test_fraction = " << f64_str(c.test_fraction) << "\n";
    o << "raw_dir = " << c.raw_dir << "\n";
    o << "corpus_dir = " << c.corpus_dir << "\n";
    o << "run_dir = " << c.run_dir << "\n";
    return o.str();
}

}  // namespace sdfc
