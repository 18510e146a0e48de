#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "sdfc/error.hpp"

namespace sdfc::diff {

// All tensors are row-major matrices; scalars are 1x1, row vectors 1xN.
struct Shape {
    std::size_t rows = 1, cols = 1;
    std::size_t count() const { return rows * cols; }
    bool operator==(const Shape&) const = default;
};

class Tape;

// Lightweight handle into a Tape node.
struct Tensor {
    Tape* tape = nullptr;
    std::int32_t id = -1;

    bool valid() const { return tape != nullptr && id >= 0; }
    const Shape& shape() const;
    const std::vector<double>& value() const;
    bool requires_grad() const;
    double scalar() const;
};

namespace detail {

enum class Op : std::uint8_t {
    Leaf, Add, Sub, Mul, Div, Scale, AddConst, Sqrt, LeakyRelu,
    MatMul, Transpose, SumAll, BroadcastAll, SumCols, RepeatCols, SumRows, RepeatRows,
    MaxPoolRows, ConcatRows, SliceRows, ConcatCols, SliceCols, GatherRows, ScatterRows,
    GroupSum, GroupMax, Reshape,
};

struct Node {
    Op op = Op::Leaf;
    bool requires_grad = false;
    Shape shape;
    std::int32_t a = -1, b = -1;     // operand node ids
    double c = 0.0;                  // scalar payload: factor, slope, constant
    std::size_t i0 = 0, i1 = 0;      // integral payload: bounds, counts
    std::vector<std::size_t> idx;    // gather/scatter indices or group ids
    std::vector<double> val;
};

}  // namespace detail

// Append-only operation record. Construction is eager: each op computes its
// value immediately and registers how to build its vector-Jacobian product
// out of further tape ops, which is what makes gradients-of-gradients work.
class Tape {
public:
    Tensor leaf(Shape s, std::vector<double> values, bool requires_grad = false) {
        if (values.size() != s.count()) throw ShapeError("leaf: data does not match shape");
        detail::Node n;
        n.op = detail::Op::Leaf;
        n.shape = s;
        n.requires_grad = requires_grad;
        n.val = std::move(values);
        return push(std::move(n), "leaf");
    }

    Tensor scalar_leaf(double v, bool requires_grad = false) {
        return leaf({1, 1}, {v}, requires_grad);
    }

    Tensor zeros(Shape s) { return leaf(s, std::vector<double>(s.count(), 0.0)); }

    std::size_t size() const { return nodes_.size(); }
    const detail::Node& node(std::int32_t id) const { return nodes_[static_cast<std::size_t>(id)]; }

    // ---- primitive ops ----

    Tensor add(Tensor a, Tensor b) { return push(binary_same(detail::Op::Add, a, b, "add"), "add"); }
    Tensor sub(Tensor a, Tensor b) { return push(binary_same(detail::Op::Sub, a, b, "sub"), "sub"); }
    Tensor mul(Tensor a, Tensor b) { return push(binary_same(detail::Op::Mul, a, b, "mul"), "mul"); }
    Tensor div(Tensor a, Tensor b) { return push(binary_same(detail::Op::Div, a, b, "div"), "div"); }

    Tensor scale(Tensor a, double c) {
        detail::Node n = unary(detail::Op::Scale, a);
        n.c = c;
        n.val.resize(val(a).size());
        for (std::size_t i = 0; i < n.val.size(); ++i) n.val[i] = val(a)[i] * c;
        return push(std::move(n), "scale");
    }

    Tensor add_const(Tensor a, double c) {
        detail::Node n = unary(detail::Op::AddConst, a);
        n.c = c;
        n.val.resize(val(a).size());
        for (std::size_t i = 0; i < n.val.size(); ++i) n.val[i] = val(a)[i] + c;
        return push(std::move(n), "add_const");
    }

    Tensor sqrt(Tensor a) {
        detail::Node n = unary(detail::Op::Sqrt, a);
        n.val.resize(val(a).size());
        for (std::size_t i = 0; i < n.val.size(); ++i) n.val[i] = std::sqrt(val(a)[i]);
        return push(std::move(n), "sqrt");
    }

    Tensor leaky_relu(Tensor a, double slope) {
        detail::Node n = unary(detail::Op::LeakyRelu, a);
        n.c = slope;
        n.val.resize(val(a).size());
        for (std::size_t i = 0; i < n.val.size(); ++i) {
            double x = val(a)[i];
            n.val[i] = x > 0.0 ? x : slope * x;
        }
        return push(std::move(n), "leaky_relu");
    }

    Tensor matmul(Tensor a, Tensor b) {
        check_tape(a);
        check_tape(b);
        Shape sa = shp(a), sb = shp(b);
        if (sa.cols != sb.rows) throw ShapeError("matmul: inner dimensions differ");
        detail::Node n;
        n.op = detail::Op::MatMul;
        n.a = a.id;
        n.b = b.id;
        n.shape = {sa.rows, sb.cols};
        n.requires_grad = rg(a) || rg(b);
        n.val.assign(n.shape.count(), 0.0);
        const auto& A = val(a);
        const auto& B = val(b);
        for (std::size_t i = 0; i < sa.rows; ++i) {
            double* out = n.val.data() + i * sb.cols;
            const double* arow = A.data() + i * sa.cols;
            for (std::size_t k = 0; k < sa.cols; ++k) {
                double aik = arow[k];
                if (aik == 0.0) continue;
                const double* brow = B.data() + k * sb.cols;
                for (std::size_t j = 0; j < sb.cols; ++j) out[j] += aik * brow[j];
            }
        }
        return push(std::move(n), "matmul");
    }

    Tensor transpose(Tensor a) {
        detail::Node n = unary(detail::Op::Transpose, a);
        Shape s = shp(a);
        n.shape = {s.cols, s.rows};
        n.val.resize(s.count());
        for (std::size_t i = 0; i < s.rows; ++i)
            for (std::size_t j = 0; j < s.cols; ++j) n.val[j * s.rows + i] = val(a)[i * s.cols + j];
        return push(std::move(n), "transpose");
    }

    Tensor sum_all(Tensor a) {
        detail::Node n = unary(detail::Op::SumAll, a);
        n.shape = {1, 1};
        double s = 0.0;
        for (double v : val(a)) s += v;
        n.val = {s};
        return push(std::move(n), "sum_all");
    }

    Tensor broadcast_all(Tensor a, Shape s) {
        require_scalar(a, "broadcast_all");
        detail::Node n = unary(detail::Op::BroadcastAll, a);
        n.shape = s;
        n.val.assign(s.count(), val(a)[0]);
        return push(std::move(n), "broadcast_all");
    }

    // column-wise sum over rows: [m x n] -> [1 x n]
    Tensor sum_rows(Tensor a) {
        detail::Node n = unary(detail::Op::SumRows, a);
        Shape s = shp(a);
        n.shape = {1, s.cols};
        n.val.assign(s.cols, 0.0);
        for (std::size_t i = 0; i < s.rows; ++i)
            for (std::size_t j = 0; j < s.cols; ++j) n.val[j] += val(a)[i * s.cols + j];
        return push(std::move(n), "sum_rows");
    }

    // [1 x n] -> [m x n]
    Tensor repeat_rows(Tensor a, std::size_t m) {
        Shape s = shp(a);
        if (s.rows != 1) throw ShapeError("repeat_rows: input must be a single row");
        detail::Node n = unary(detail::Op::RepeatRows, a);
        n.i0 = m;
        n.shape = {m, s.cols};
        n.val.resize(m * s.cols);
        for (std::size_t i = 0; i < m; ++i)
            std::copy(val(a).begin(), val(a).end(), n.val.begin() + static_cast<std::ptrdiff_t>(i * s.cols));
        return push(std::move(n), "repeat_rows");
    }

    // row-wise sum over columns: [m x n] -> [m x 1]
    Tensor sum_cols(Tensor a) {
        detail::Node n = unary(detail::Op::SumCols, a);
        Shape s = shp(a);
        n.shape = {s.rows, 1};
        n.val.assign(s.rows, 0.0);
        for (std::size_t i = 0; i < s.rows; ++i)
            for (std::size_t j = 0; j < s.cols; ++j) n.val[i] += val(a)[i * s.cols + j];
        return push(std::move(n), "sum_cols");
    }

    // [m x 1] -> [m x n]
    Tensor repeat_cols(Tensor a, std::size_t ncols) {
        Shape s = shp(a);
        if (s.cols != 1) throw ShapeError("repeat_cols: input must be a single column");
        detail::Node n = unary(detail::Op::RepeatCols, a);
        n.i0 = ncols;
        n.shape = {s.rows, ncols};
        n.val.resize(s.rows * ncols);
        for (std::size_t i = 0; i < s.rows; ++i)
            for (std::size_t j = 0; j < ncols; ++j) n.val[i * ncols + j] = val(a)[i];
        return push(std::move(n), "repeat_cols");
    }

    // column-wise max over rows, ties to the smallest row: [m x n] -> [1 x n]
    Tensor max_pool_rows(Tensor a) {
        Shape s = shp(a);
        if (s.rows == 0) throw ShapeError("max_pool_rows: empty input");
        detail::Node n = unary(detail::Op::MaxPoolRows, a);
        n.shape = {1, s.cols};
        n.val.assign(s.cols, 0.0);
        for (std::size_t j = 0; j < s.cols; ++j) {
            double best = val(a)[j];
            for (std::size_t i = 1; i < s.rows; ++i) best = std::max(best, val(a)[i * s.cols + j]);
            n.val[j] = best;
        }
        return push(std::move(n), "max_pool_rows");
    }

    Tensor concat_rows(Tensor a, Tensor b) {
        check_tape(a);
        check_tape(b);
        Shape sa = shp(a), sb = shp(b);
        if (sa.cols != sb.cols) throw ShapeError("concat_rows: column counts differ");
        detail::Node n;
        n.op = detail::Op::ConcatRows;
        n.a = a.id;
        n.b = b.id;
        n.requires_grad = rg(a) || rg(b);
        n.shape = {sa.rows + sb.rows, sa.cols};
        n.val.reserve(n.shape.count());
        n.val.insert(n.val.end(), val(a).begin(), val(a).end());
        n.val.insert(n.val.end(), val(b).begin(), val(b).end());
        return push(std::move(n), "concat_rows");
    }

    // rows [r0, r1)
    Tensor slice_rows(Tensor a, std::size_t r0, std::size_t r1) {
        Shape s = shp(a);
        if (r0 >= r1 || r1 > s.rows) throw ShapeError("slice_rows: bad range");
        detail::Node n = unary(detail::Op::SliceRows, a);
        n.i0 = r0;
        n.i1 = r1;
        n.shape = {r1 - r0, s.cols};
        n.val.assign(val(a).begin() + static_cast<std::ptrdiff_t>(r0 * s.cols),
                     val(a).begin() + static_cast<std::ptrdiff_t>(r1 * s.cols));
        return push(std::move(n), "slice_rows");
    }

    Tensor concat_cols(Tensor a, Tensor b) {
        check_tape(a);
        check_tape(b);
        Shape sa = shp(a), sb = shp(b);
        if (sa.rows != sb.rows) throw ShapeError("concat_cols: row counts differ");
        detail::Node n;
        n.op = detail::Op::ConcatCols;
        n.a = a.id;
        n.b = b.id;
        n.requires_grad = rg(a) || rg(b);
        n.shape = {sa.rows, sa.cols + sb.cols};
        n.val.resize(n.shape.count());
        for (std::size_t i = 0; i < sa.rows; ++i) {
            std::copy(val(a).begin() + static_cast<std::ptrdiff_t>(i * sa.cols),
                      val(a).begin() + static_cast<std::ptrdiff_t>((i + 1) * sa.cols),
                      n.val.begin() + static_cast<std::ptrdiff_t>(i * n.shape.cols));
            std::copy(val(b).begin() + static_cast<std::ptrdiff_t>(i * sb.cols),
                      val(b).begin() + static_cast<std::ptrdiff_t>((i + 1) * sb.cols),
                      n.val.begin() + static_cast<std::ptrdiff_t>(i * n.shape.cols + sa.cols));
        }
        return push(std::move(n), "concat_cols");
    }

    // columns [c0, c1)
    Tensor slice_cols(Tensor a, std::size_t c0, std::size_t c1) {
        Shape s = shp(a);
        if (c0 >= c1 || c1 > s.cols) throw ShapeError("slice_cols: bad range");
        detail::Node n = unary(detail::Op::SliceCols, a);
        n.i0 = c0;
        n.i1 = c1;
        n.shape = {s.rows, c1 - c0};
        n.val.resize(n.shape.count());
        for (std::size_t i = 0; i < s.rows; ++i)
            std::copy(val(a).begin() + static_cast<std::ptrdiff_t>(i * s.cols + c0),
                      val(a).begin() + static_cast<std::ptrdiff_t>(i * s.cols + c1),
                      n.val.begin() + static_cast<std::ptrdiff_t>(i * n.shape.cols));
        return push(std::move(n), "slice_cols");
    }

    Tensor gather_rows(Tensor a, std::vector<std::size_t> rows) {
        Shape s = shp(a);
        for (std::size_t r : rows)
            if (r >= s.rows) throw ShapeError("gather_rows: index out of range");
        detail::Node n = unary(detail::Op::GatherRows, a);
        n.shape = {rows.size(), s.cols};
        n.val.resize(n.shape.count());
        for (std::size_t i = 0; i < rows.size(); ++i)
            std::copy(val(a).begin() + static_cast<std::ptrdiff_t>(rows[i] * s.cols),
                      val(a).begin() + static_cast<std::ptrdiff_t>((rows[i] + 1) * s.cols),
                      n.val.begin() + static_cast<std::ptrdiff_t>(i * s.cols));
        n.idx = std::move(rows);
        return push(std::move(n), "gather_rows");
    }

    // [k x n] + index list of length k -> [m x n]; duplicate targets accumulate
    Tensor scatter_rows(Tensor a, std::vector<std::size_t> rows, std::size_t m) {
        Shape s = shp(a);
        if (rows.size() != s.rows) throw ShapeError("scatter_rows: one target row per input row");
        for (std::size_t r : rows)
            if (r >= m) throw ShapeError("scatter_rows: index out of range");
        detail::Node n = unary(detail::Op::ScatterRows, a);
        n.i0 = m;
        n.shape = {m, s.cols};
        n.val.assign(m * s.cols, 0.0);
        for (std::size_t i = 0; i < rows.size(); ++i)
            for (std::size_t j = 0; j < s.cols; ++j)
                n.val[rows[i] * s.cols + j] += val(a)[i * s.cols + j];
        n.idx = std::move(rows);
        return push(std::move(n), "scatter_rows");
    }

    // per-group row sums: groups[i] in [0, group_count) -> [group_count x n]
    Tensor group_sum(Tensor a, std::vector<std::size_t> groups, std::size_t group_count) {
        Shape s = shp(a);
        if (groups.size() != s.rows) throw ShapeError("group_sum: one group per row");
        for (std::size_t g : groups)
            if (g >= group_count) throw ShapeError("group_sum: group id out of range");
        detail::Node n = unary(detail::Op::GroupSum, a);
        n.i0 = group_count;
        n.shape = {group_count, s.cols};
        n.val.assign(group_count * s.cols, 0.0);
        for (std::size_t i = 0; i < s.rows; ++i)
            for (std::size_t j = 0; j < s.cols; ++j)
                n.val[groups[i] * s.cols + j] += val(a)[i * s.cols + j];
        n.idx = std::move(groups);
        return push(std::move(n), "group_sum");
    }

    // per-group column max, ties to the smallest row; every group must be
    // non-empty (callers pad empty balls before grouping)
    Tensor group_max(Tensor a, std::vector<std::size_t> groups, std::size_t group_count) {
        Shape s = shp(a);
        if (groups.size() != s.rows) throw ShapeError("group_max: one group per row");
        std::vector<bool> seen(group_count, false);
        for (std::size_t g : groups) {
            if (g >= group_count) throw ShapeError("group_max: group id out of range");
            seen[g] = true;
        }
        for (bool s_ : seen)
            if (!s_) throw ShapeError("group_max: empty group");
        detail::Node n = unary(detail::Op::GroupMax, a);
        n.i0 = group_count;
        n.shape = {group_count, s.cols};
        n.val.assign(group_count * s.cols, -std::numeric_limits<double>::infinity());
        for (std::size_t i = 0; i < s.rows; ++i)
            for (std::size_t j = 0; j < s.cols; ++j) {
                double& slot = n.val[groups[i] * s.cols + j];
                slot = std::max(slot, val(a)[i * s.cols + j]);
            }
        n.idx = std::move(groups);
        return push(std::move(n), "group_max");
    }

    Tensor reshape(Tensor a, Shape s) {
        if (s.count() != shp(a).count()) throw ShapeError("reshape: element count differs");
        detail::Node n = unary(detail::Op::Reshape, a);
        n.shape = s;
        n.val = val(a);
        return push(std::move(n), "reshape");
    }

    // ---- reverse mode ----

    // Gradients of a scalar w.r.t. each tensor in `wrt`. With create_graph
    // the returned tensors stay differentiable (the backward pass is recorded
    // as ordinary ops); without it they are detached constants.
    std::vector<Tensor> grad(Tensor out, std::span<const Tensor> wrt, bool create_graph) {
        check_tape(out);
        if (shp(out).count() != 1) throw NotScalar("grad: output must be a scalar");
        for (const Tensor& w : wrt)
            if (w.tape != this || w.id < 0 || static_cast<std::size_t>(w.id) >= nodes_.size())
                throw NoPath("grad: wrt tensor is not on this tape");

        const std::size_t frozen = static_cast<std::size_t>(out.id) + 1;
        // ancestors of out
        std::vector<bool> feeds_out(frozen, false);
        {
            std::vector<std::int32_t> stack{out.id};
            feeds_out[static_cast<std::size_t>(out.id)] = true;
            while (!stack.empty()) {
                const detail::Node& n = nodes_[static_cast<std::size_t>(stack.back())];
                stack.pop_back();
                for (std::int32_t in : {n.a, n.b}) {
                    if (in >= 0 && !feeds_out[static_cast<std::size_t>(in)]) {
                        feeds_out[static_cast<std::size_t>(in)] = true;
                        stack.push_back(in);
                    }
                }
            }
        }
        // nodes some wrt flows into
        std::vector<bool> from_wrt(frozen, false);
        for (const Tensor& w : wrt)
            if (static_cast<std::size_t>(w.id) < frozen) from_wrt[static_cast<std::size_t>(w.id)] = true;
        for (std::size_t i = 0; i < frozen; ++i) {
            const detail::Node& n = nodes_[i];
            if (n.a >= 0 && from_wrt[static_cast<std::size_t>(n.a)]) from_wrt[i] = true;
            if (n.b >= 0 && from_wrt[static_cast<std::size_t>(n.b)]) from_wrt[i] = true;
        }
        auto needed = [&](std::int32_t id) {
            return id >= 0 && static_cast<std::size_t>(id) < frozen &&
                   feeds_out[static_cast<std::size_t>(id)] && from_wrt[static_cast<std::size_t>(id)];
        };

        std::vector<std::int32_t> adjoint(frozen, -1);
        auto accumulate = [&](std::int32_t target, Tensor contribution) {
            if (!needed(target)) return;
            std::int32_t& slot = adjoint[static_cast<std::size_t>(target)];
            slot = slot < 0 ? contribution.id : add(wrap(slot), contribution).id;
        };

        if (needed(out.id)) {
            accumulate(out.id, scalar_leaf(1.0));
            for (std::int32_t id = out.id; id >= 0; --id) {
                if (adjoint[static_cast<std::size_t>(id)] < 0) continue;
                backprop_node(id, wrap(adjoint[static_cast<std::size_t>(id)]), accumulate);
            }
        }

        std::vector<Tensor> result;
        result.reserve(wrt.size());
        for (const Tensor& w : wrt) {
            std::int32_t a = adjoint[static_cast<std::size_t>(w.id)];
            Tensor g = a >= 0 ? wrap(a) : zeros(shp(w));
            if (!create_graph && a >= 0) g = leaf(shp(g), val(g));  // detach
            result.push_back(g);
        }
        return result;
    }

    std::vector<Tensor> grad(Tensor out, std::initializer_list<Tensor> wrt, bool create_graph) {
        std::vector<Tensor> v(wrt);
        return grad(out, std::span<const Tensor>(v), create_graph);
    }

private:
    std::vector<detail::Node> nodes_;

    Tensor wrap(std::int32_t id) { return Tensor{this, id}; }

    void check_tape(const Tensor& t) const {
        if (t.tape != this || t.id < 0 || static_cast<std::size_t>(t.id) >= nodes_.size())
            throw InvalidInput("tensor does not belong to this tape");
    }

    const Shape& shp(const Tensor& t) const { return nodes_[static_cast<std::size_t>(t.id)].shape; }
    const std::vector<double>& val(const Tensor& t) const {
        return nodes_[static_cast<std::size_t>(t.id)].val;
    }
    bool rg(const Tensor& t) const { return nodes_[static_cast<std::size_t>(t.id)].requires_grad; }

    void require_scalar(const Tensor& t, const char* what) const {
        if (shp(t).count() != 1) throw ShapeError(std::string(what) + ": expected a scalar");
    }

    detail::Node unary(detail::Op op, Tensor a) {
        check_tape(a);
        detail::Node n;
        n.op = op;
        n.a = a.id;
        n.shape = shp(a);
        n.requires_grad = rg(a);
        return n;
    }

    detail::Node binary_same(detail::Op op, Tensor a, Tensor b, const char* what) {
        check_tape(a);
        check_tape(b);
        if (!(shp(a) == shp(b))) throw ShapeError(std::string(what) + ": shapes differ");
        detail::Node n;
        n.op = op;
        n.a = a.id;
        n.b = b.id;
        n.shape = shp(a);
        n.requires_grad = rg(a) || rg(b);
        n.val.resize(val(a).size());
        const auto& A = val(a);
        const auto& B = val(b);
        switch (op) {
            case detail::Op::Add:
                for (std::size_t i = 0; i < n.val.size(); ++i) n.val[i] = A[i] + B[i];
                break;
            case detail::Op::Sub:
                for (std::size_t i = 0; i < n.val.size(); ++i) n.val[i] = A[i] - B[i];
                break;
            case detail::Op::Mul:
                for (std::size_t i = 0; i < n.val.size(); ++i) n.val[i] = A[i] * B[i];
                break;
            case detail::Op::Div:
                for (std::size_t i = 0; i < n.val.size(); ++i) n.val[i] = A[i] / B[i];
                break;
            default:
                throw InvalidInput("binary_same: not a binary op");
        }
        return n;
    }

    Tensor push(detail::Node&& n, const char* what) {
        for (double v : n.val)
            if (!std::isfinite(v))
                throw DiagnosticError(std::string("non-finite value produced by ") + what);
        nodes_.push_back(std::move(n));
        return wrap(static_cast<std::int32_t>(nodes_.size() - 1));
    }

    template <typename Acc>
    void backprop_node(std::int32_t id, Tensor adj, Acc&& accumulate) {
        const detail::Node nd = nodes_[static_cast<std::size_t>(id)];  // copy: vector may grow
        Tensor a = wrap(nd.a), b = wrap(nd.b);
        switch (nd.op) {
            case detail::Op::Leaf:
                break;
            case detail::Op::Add:
                accumulate(nd.a, adj);
                accumulate(nd.b, adj);
                break;
            case detail::Op::Sub:
                accumulate(nd.a, adj);
                accumulate(nd.b, scale(adj, -1.0));
                break;
            case detail::Op::Mul:
                accumulate(nd.a, mul(adj, b));
                accumulate(nd.b, mul(adj, a));
                break;
            case detail::Op::Div:
                // y = a/b: da += adj/b; db += -adj*a/b^2 = -adj*y/b
                accumulate(nd.a, div(adj, b));
                accumulate(nd.b, scale(div(mul(adj, wrap(id)), b), -1.0));
                break;
            case detail::Op::Scale:
                accumulate(nd.a, scale(adj, nd.c));
                break;
            case detail::Op::AddConst:
                accumulate(nd.a, adj);
                break;
            case detail::Op::Sqrt:
                // dy = adj / (2*sqrt(a)) and sqrt(a) is this node's value
                accumulate(nd.a, scale(div(adj, wrap(id)), 0.5));
                break;
            case detail::Op::LeakyRelu: {
                std::vector<double> m(nd.val.size());
                const auto& x = val(a);
                for (std::size_t i = 0; i < m.size(); ++i) m[i] = x[i] > 0.0 ? 1.0 : nd.c;
                accumulate(nd.a, mul(adj, leaf(nd.shape, std::move(m))));
                break;
            }
            case detail::Op::MatMul:
                accumulate(nd.a, matmul(adj, transpose(b)));
                accumulate(nd.b, matmul(transpose(a), adj));
                break;
            case detail::Op::Transpose:
                accumulate(nd.a, transpose(adj));
                break;
            case detail::Op::SumAll:
                accumulate(nd.a, broadcast_all(adj, shp(a)));
                break;
            case detail::Op::BroadcastAll:
                accumulate(nd.a, sum_all(adj));
                break;
            case detail::Op::SumRows:
                accumulate(nd.a, repeat_rows(adj, shp(a).rows));
                break;
            case detail::Op::RepeatRows:
                accumulate(nd.a, sum_rows(adj));
                break;
            case detail::Op::SumCols:
                accumulate(nd.a, repeat_cols(adj, shp(a).cols));
                break;
            case detail::Op::RepeatCols:
                accumulate(nd.a, sum_cols(adj));
                break;
            case detail::Op::MaxPoolRows: {
                // route adjoint to the first row attaining each column max
                Shape s = shp(a);
                std::vector<double> m(s.count(), 0.0);
                const auto& x = val(a);
                for (std::size_t j = 0; j < s.cols; ++j) {
                    std::size_t arg = 0;
                    double best = x[j];
                    for (std::size_t i = 1; i < s.rows; ++i)
                        if (x[i * s.cols + j] > best) {
                            best = x[i * s.cols + j];
                            arg = i;
                        }
                    m[arg * s.cols + j] = 1.0;
                }
                accumulate(nd.a, mul(repeat_rows(adj, s.rows), leaf(s, std::move(m))));
                break;
            }
            case detail::Op::ConcatRows: {
                std::size_t ra = shp(a).rows;
                accumulate(nd.a, slice_rows(adj, 0, ra));
                accumulate(nd.b, slice_rows(adj, ra, nd.shape.rows));
                break;
            }
            case detail::Op::SliceRows: {
                Shape s = shp(a);
                Tensor g = adj;
                if (nd.i0 > 0) g = concat_rows(zeros({nd.i0, s.cols}), g);
                if (nd.i1 < s.rows) g = concat_rows(g, zeros({s.rows - nd.i1, s.cols}));
                accumulate(nd.a, g);
                break;
            }
            case detail::Op::ConcatCols: {
                std::size_t ca = shp(a).cols;
                accumulate(nd.a, slice_cols(adj, 0, ca));
                accumulate(nd.b, slice_cols(adj, ca, nd.shape.cols));
                break;
            }
            case detail::Op::SliceCols: {
                Shape s = shp(a);
                Tensor g = adj;
                if (nd.i0 > 0) g = concat_cols(zeros({s.rows, nd.i0}), g);
                if (nd.i1 < s.cols) g = concat_cols(g, zeros({s.rows, s.cols - nd.i1}));
                accumulate(nd.a, g);
                break;
            }
            case detail::Op::GatherRows:
                accumulate(nd.a, scatter_rows(adj, nd.idx, shp(a).rows));
                break;
            case detail::Op::ScatterRows:
                accumulate(nd.a, gather_rows(adj, nd.idx));
                break;
            case detail::Op::GroupSum:
                // each source row receives its group's adjoint row
                accumulate(nd.a, gather_rows(adj, nd.idx));
                break;
            case detail::Op::GroupMax: {
                Shape s = shp(a);
                std::vector<double> m(s.count(), 0.0);
                const auto& x = val(a);
                // first row attaining each (group, column) max
                std::vector<std::size_t> arg(nd.i0 * s.cols, static_cast<std::size_t>(-1));
                std::vector<double> best(nd.i0 * s.cols, -std::numeric_limits<double>::infinity());
                for (std::size_t i = 0; i < s.rows; ++i) {
                    std::size_t g = nd.idx[i];
                    for (std::size_t j = 0; j < s.cols; ++j) {
                        double v = x[i * s.cols + j];
                        if (v > best[g * s.cols + j]) {
                            best[g * s.cols + j] = v;
                            arg[g * s.cols + j] = i;
                        }
                    }
                }
                for (std::size_t gj = 0; gj < arg.size(); ++gj)
                    if (arg[gj] != static_cast<std::size_t>(-1))
                        m[arg[gj] * s.cols + gj % s.cols] = 1.0;
                accumulate(nd.a, mul(gather_rows(adj, nd.idx), leaf(s, std::move(m))));
                break;
            }
            case detail::Op::Reshape:
                accumulate(nd.a, reshape(adj, shp(a)));
                break;
        }
    }
};

inline const Shape& Tensor::shape() const { return tape->node(id).shape; }
inline const std::vector<double>& Tensor::value() const { return tape->node(id).val; }
inline bool Tensor::requires_grad() const { return tape->node(id).requires_grad; }
inline double Tensor::scalar() const {
    if (shape().count() != 1) throw NotScalar("scalar(): tensor is not 1x1");
    return value()[0];
}

}  // namespace sdfc::diff
