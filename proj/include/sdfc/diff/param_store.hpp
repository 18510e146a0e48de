#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sdfc/binio.hpp"
#include "sdfc/diff/tape.hpp"
#include "sdfc/error.hpp"
#include "sdfc/rng.hpp"

namespace sdfc::diff {

struct Param {
    std::string name;
    Shape shape;
    std::vector<double> value;
    std::vector<double> accum;  // RMSProp second-moment state
};

// Named parameter tensors in a stable insertion order; the order defines the
// gradient vector layout and the checkpoint record layout.
class ParamStore {
public:
    Param& add(std::string name, Shape s, std::vector<double> values) {
        if (find(name) != nullptr) throw InvalidInput("parameter already exists: " + name);
        if (values.size() != s.count()) throw ShapeError("parameter data does not match shape: " + name);
        params_.push_back(Param{std::move(name), s, std::move(values),
                                std::vector<double>(s.count(), 0.0)});
        return params_.back();
    }

    Param& add_uniform(std::string name, Shape s, Rng& rng, double bound) {
        std::vector<double> v(s.count());
        for (double& x : v) x = rng.uniform(-bound, bound);
        return add(std::move(name), s, std::move(v));
    }

    const Param* find(std::string_view name) const {
        for (const Param& p : params_)
            if (p.name == name) return &p;
        return nullptr;
    }

    const Param& at(std::string_view name) const {
        const Param* p = find(name);
        if (p == nullptr) throw InvalidInput("no such parameter: " + std::string(name));
        return *p;
    }

    std::size_t size() const { return params_.size(); }
    bool empty() const { return params_.empty(); }
    std::size_t value_count() const {
        std::size_t n = 0;
        for (const Param& p : params_) n += p.value.size();
        return n;
    }
    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }
    Param& operator[](std::size_t i) { return params_[i]; }
    const Param& operator[](std::size_t i) const { return params_[i]; }

private:
    std::vector<Param> params_;
};

// Adds a linear layer's weight [fan_in x fan_out] and bias [1 x fan_out],
// both uniform in ±scale/sqrt(fan_in). Draw order: weight row-major, then bias.
inline void add_linear_params(ParamStore& store, const std::string& prefix, std::size_t fan_in,
                              std::size_t fan_out, Rng& rng, double scale = 1.0) {
    double bound = scale / std::sqrt(static_cast<double>(fan_in));
    store.add_uniform(prefix + ".w", {fan_in, fan_out}, rng, bound);
    store.add_uniform(prefix + ".b", {1, fan_out}, rng, bound);
}

// Per-tape view of a store: every parameter pushed as a differentiable leaf,
// aligned index-wise with the store.
struct BoundParams {
    const ParamStore* store = nullptr;
    std::vector<Tensor> tensors;

    Tensor operator[](std::string_view name) const {
        for (std::size_t i = 0; i < store->size(); ++i)
            if ((*store)[i].name == name) return tensors[i];
        throw InvalidInput("no such parameter: " + std::string(name));
    }
};

inline BoundParams bind(Tape& tape, const ParamStore& store) {
    BoundParams b;
    b.store = &store;
    b.tensors.reserve(store.size());
    for (const Param& p : store) b.tensors.push_back(tape.leaf(p.shape, p.value, true));
    return b;
}

// v <- alpha*v + (1-alpha)*g^2 ; p <- p - lr*g/(sqrt(v)+eps)
inline void rmsprop_step(ParamStore& store, std::span<const std::vector<double>> grads,
                         double lr, double alpha = 0.99, double eps = 1e-8) {
    if (grads.size() != store.size()) throw ShapeError("rmsprop_step: gradient count mismatch");
    for (std::size_t i = 0; i < store.size(); ++i) {
        Param& p = store[i];
        const std::vector<double>& g = grads[i];
        if (g.size() != p.value.size())
            throw ShapeError("rmsprop_step: gradient size mismatch for " + p.name);
        for (double gv : g)
            if (!std::isfinite(gv))
                throw DiagnosticError("rmsprop_step: non-finite gradient for " + p.name);
        for (std::size_t k = 0; k < g.size(); ++k) {
            p.accum[k] = alpha * p.accum[k] + (1.0 - alpha) * g[k] * g[k];
            p.value[k] -= lr * g[k] / (std::sqrt(p.accum[k]) + eps);
        }
    }
}

inline void rmsprop_step(ParamStore& store, std::span<const Tensor> grads, double lr,
                         double alpha = 0.99, double eps = 1e-8) {
    if (grads.size() != store.size()) throw ShapeError("rmsprop_step: gradient count mismatch");
    std::vector<std::vector<double>> vals;
    vals.reserve(grads.size());
    for (std::size_t i = 0; i < grads.size(); ++i) {
        if (!(grads[i].shape() == store[i].shape))
            throw ShapeError("rmsprop_step: gradient shape mismatch for " + store[i].name);
        vals.push_back(grads[i].value());
    }
    rmsprop_step(store, vals, lr, alpha, eps);
}

inline constexpr char kParamMagic[4] = {'P', 'R', 'M', 'S'};
inline constexpr std::uint32_t kParamVersion = 1;

// header (magic, version, network name), per parameter (name length, name,
// rank, dims, f64 payload), then the optimizer accumulators in the same order
inline void save_params(std::ostream& out, std::string_view network, const ParamStore& store) {
    namespace io = sdfc::binio;
    io::write_magic(out, kParamMagic);
    io::write_pod(out, kParamVersion);
    io::write_pod(out, static_cast<std::uint32_t>(network.size()));
    out.write(network.data(), static_cast<std::streamsize>(network.size()));
    io::write_pod(out, static_cast<std::uint32_t>(store.size()));
    for (const Param& p : store) {
        io::write_pod(out, static_cast<std::uint32_t>(p.name.size()));
        out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
        io::write_pod(out, static_cast<std::uint32_t>(2));  // rank
        io::write_pod(out, static_cast<std::uint64_t>(p.shape.rows));
        io::write_pod(out, static_cast<std::uint64_t>(p.shape.cols));
        for (double v : p.value) io::write_pod(out, v);
    }
    for (const Param& p : store)
        for (double v : p.accum) io::write_pod(out, v);
    if (!out) throw IoError("failed writing parameter record");
}

struct NamedParams {
    std::string network;
    ParamStore store;
};

inline NamedParams load_params(std::istream& in) {
    namespace io = sdfc::binio;
    io::expect_magic(in, kParamMagic, "parameter record");
    auto version = io::read_pod<std::uint32_t>(in, "parameter version");
    if (version != kParamVersion) throw IoError("unsupported parameter record version");
    auto read_string = [&](const char* what) {
        auto len = io::read_pod<std::uint32_t>(in, what);
        std::string s(len, '\0');
        in.read(s.data(), len);
        if (!in) throw IoError(std::string("truncated record while reading ") + what);
        return s;
    };
    NamedParams r;
    r.network = read_string("network name");
    auto count = io::read_pod<std::uint32_t>(in, "parameter count");
    for (std::uint32_t i = 0; i < count; ++i) {
        std::string name = read_string("parameter name");
        auto rank = io::read_pod<std::uint32_t>(in, "parameter rank");
        if (rank != 2) throw IoError("unsupported parameter rank");
        Shape s;
        s.rows = static_cast<std::size_t>(io::read_pod<std::uint64_t>(in, "parameter dims"));
        s.cols = static_cast<std::size_t>(io::read_pod<std::uint64_t>(in, "parameter dims"));
        std::vector<double> v(s.count());
        for (double& x : v) x = io::read_pod<double>(in, "parameter payload");
        r.store.add(std::move(name), s, std::move(v));
    }
    for (std::size_t i = 0; i < r.store.size(); ++i)
        for (double& x : r.store[i].accum) x = io::read_pod<double>(in, "optimizer accumulators");
    return r;
}

inline void save_params(const std::filesystem::path& path, std::string_view network,
                        const ParamStore& store) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    save_params(out, network, store);
}

inline NamedParams load_params(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path.string());
    return load_params(in);
}

}  // namespace sdfc::diff
