#include "qckit/tape.hpp"

#include <Eigen/Core>

#include <cmath>
#include <limits>

namespace qc {

namespace {

using EigenRowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<EigenRowMat>;
using MapConst = Eigen::Map<const EigenRowMat>;

MapConst as_matrix(const Tensor& t) {
    if (t.shape.size() != 2) throw ShapeError("matrix op on non rank-2 tensor");
    return MapConst(t.values.data(), t.shape[0], t.shape[1]);
}

double sigmoid(double x) {
    if (x >= 0.0) {
        const double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

void Tape::round_precision(Tensor& t) const {
    if (precision_ == Precision::F64) return;
    for (double& v : t.values) v = static_cast<double>(static_cast<float>(v));
}

Tape::Var Tape::push(Tensor value, bool requires_grad, bool is_leaf,
                     std::function<void(Tape&)> backward) {
    round_precision(value);
    Node n;
    n.grad.assign(value.numel(), 0.0);
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    n.is_leaf = is_leaf;
    n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return Var{static_cast<std::int32_t>(nodes_.size()) - 1};
}

Tape::Var Tape::leaf(Tensor value, bool requires_grad) {
    return push(std::move(value), requires_grad, true, nullptr);
}

const std::vector<double>& Tape::grad(Var v) const { return nodes_[check(v)].grad; }
std::vector<double>& Tape::grad_buffer(Var v) { return nodes_[check(v)].grad; }

void Tape::backward(Var loss) {
    const std::int32_t id = check(loss);
    if (nodes_[id].value.numel() != 1)
        throw ShapeError("backward needs a scalar loss node");

    for (std::int32_t k = 0; k <= id; ++k)
        if (!nodes_[k].is_leaf) std::fill(nodes_[k].grad.begin(), nodes_[k].grad.end(), 0.0);

    nodes_[id].grad[0] += 1.0;
    for (std::int32_t k = id; k >= 0; --k) {
        Node& n = nodes_[k];
        if (n.requires_grad && n.backward) n.backward(*this);
    }
}

void Tape::zero_grad() {
    for (Node& n : nodes_) std::fill(n.grad.begin(), n.grad.end(), 0.0);
}

// ---------------------------------------------------------------------------
// primitives

Tape::Var Tape::add(Var a, Var b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (!same_shape(ta, tb)) throw ShapeError("add: shape mismatch");
    Tensor out = ta;
    for (std::size_t k = 0; k < out.values.size(); ++k) out.values[k] += tb.values[k];
    const bool rg = requires_grad(a) || requires_grad(b);
    return push(std::move(out), rg, false, [a, b, self = size()](Tape& t) {
        const auto& g = t.grad(Var{std::int32_t(self)});
        if (t.requires_grad(a)) {
            auto& ga = t.grad_buffer(a);
            for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k];
        }
        if (t.requires_grad(b)) {
            auto& gb = t.grad_buffer(b);
            for (std::size_t k = 0; k < g.size(); ++k) gb[k] += g[k];
        }
    });
}

Tape::Var Tape::sub(Var a, Var b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (!same_shape(ta, tb)) throw ShapeError("sub: shape mismatch");
    Tensor out = ta;
    for (std::size_t k = 0; k < out.values.size(); ++k) out.values[k] -= tb.values[k];
    const bool rg = requires_grad(a) || requires_grad(b);
    return push(std::move(out), rg, false, [a, b, self = size()](Tape& t) {
        const auto& g = t.grad(Var{std::int32_t(self)});
        if (t.requires_grad(a)) {
            auto& ga = t.grad_buffer(a);
            for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k];
        }
        if (t.requires_grad(b)) {
            auto& gb = t.grad_buffer(b);
            for (std::size_t k = 0; k < g.size(); ++k) gb[k] -= g[k];
        }
    });
}

Tape::Var Tape::mul(Var a, Var b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (!same_shape(ta, tb)) throw ShapeError("mul: shape mismatch");
    Tensor out = ta;
    for (std::size_t k = 0; k < out.values.size(); ++k) out.values[k] *= tb.values[k];
    const bool rg = requires_grad(a) || requires_grad(b);
    return push(std::move(out), rg, false, [a, b, self = size()](Tape& t) {
        const auto& g = t.grad(Var{std::int32_t(self)});
        const auto& va = t.value(a).values;
        const auto& vb = t.value(b).values;
        if (t.requires_grad(a)) {
            auto& ga = t.grad_buffer(a);
            for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k] * vb[k];
        }
        if (t.requires_grad(b)) {
            auto& gb = t.grad_buffer(b);
            for (std::size_t k = 0; k < g.size(); ++k) gb[k] += g[k] * va[k];
        }
    });
}

Tape::Var Tape::scale(Var a, double s) {
    Tensor out = value(a);
    for (double& v : out.values) v *= s;
    return push(std::move(out), requires_grad(a), false, [a, s, self = size()](Tape& t) {
        if (!t.requires_grad(a)) return;
        const auto& g = t.grad(Var{std::int32_t(self)});
        auto& ga = t.grad_buffer(a);
        for (std::size_t k = 0; k < g.size(); ++k) ga[k] += s * g[k];
    });
}

Tape::Var Tape::matmul(Var a, Var b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (ta.shape.size() != 2 || tb.shape.size() != 2 || ta.shape[1] != tb.shape[0])
        throw ShapeError("matmul: incompatible shapes");
    Tensor out = Tensor::zeros({ta.shape[0], tb.shape[1]});
    MapMat(out.values.data(), out.shape[0], out.shape[1]) = as_matrix(ta) * as_matrix(tb);
    const bool rg = requires_grad(a) || requires_grad(b);
    return push(std::move(out), rg, false, [a, b, self = size()](Tape& t) {
        const Tensor& ta2 = t.value(a);
        const Tensor& tb2 = t.value(b);
        const Tensor& to = t.value(Var{std::int32_t(self)});
        MapConst g(t.grad(Var{std::int32_t(self)}).data(), to.shape[0], to.shape[1]);
        if (t.requires_grad(a)) {
            MapMat ga(t.grad_buffer(a).data(), ta2.shape[0], ta2.shape[1]);
            ga.noalias() += g * as_matrix(tb2).transpose();
        }
        if (t.requires_grad(b)) {
            MapMat gb(t.grad_buffer(b).data(), tb2.shape[0], tb2.shape[1]);
            gb.noalias() += as_matrix(ta2).transpose() * g;
        }
    });
}

Tape::Var Tape::add_rows(Var a, Var bias) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(bias);
    if (ta.shape.size() != 2 || tb.shape.size() != 1 || tb.shape[0] != ta.shape[1])
        throw ShapeError("add_rows: bias must match the column count");
    Tensor out = ta;
    const std::int64_t m = ta.shape[0], n = ta.shape[1];
    for (std::int64_t r = 0; r < m; ++r)
        for (std::int64_t c = 0; c < n; ++c) out.values[r * n + c] += tb.values[c];
    const bool rg = requires_grad(a) || requires_grad(bias);
    return push(std::move(out), rg, false, [a, bias, m, n, self = size()](Tape& t) {
        const auto& g = t.grad(Var{std::int32_t(self)});
        if (t.requires_grad(a)) {
            auto& ga = t.grad_buffer(a);
            for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k];
        }
        if (t.requires_grad(bias)) {
            auto& gb = t.grad_buffer(bias);
            for (std::int64_t r = 0; r < m; ++r)
                for (std::int64_t c = 0; c < n; ++c) gb[c] += g[r * n + c];
        }
    });
}

Tape::Var Tape::add_cols(Var a, Var bias) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(bias);
    if (ta.shape.size() != 2 || tb.shape.size() != 1 || tb.shape[0] != ta.shape[0])
        throw ShapeError("add_cols: bias must match the row count");
    Tensor out = ta;
    const std::int64_t m = ta.shape[0], n = ta.shape[1];
    for (std::int64_t r = 0; r < m; ++r)
        for (std::int64_t c = 0; c < n; ++c) out.values[r * n + c] += tb.values[r];
    const bool rg = requires_grad(a) || requires_grad(bias);
    return push(std::move(out), rg, false, [a, bias, m, n, self = size()](Tape& t) {
        const auto& g = t.grad(Var{std::int32_t(self)});
        if (t.requires_grad(a)) {
            auto& ga = t.grad_buffer(a);
            for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k];
        }
        if (t.requires_grad(bias)) {
            auto& gb = t.grad_buffer(bias);
            for (std::int64_t r = 0; r < m; ++r)
                for (std::int64_t c = 0; c < n; ++c) gb[r] += g[r * n + c];
        }
    });
}

Tape::Var Tape::tanh(Var a) {
    Tensor out = value(a);
    for (double& v : out.values) v = std::tanh(v);
    return push(std::move(out), requires_grad(a), false, [a, self = size()](Tape& t) {
        if (!t.requires_grad(a)) return;
        const auto& g = t.grad(Var{std::int32_t(self)});
        const auto& y = t.value(Var{std::int32_t(self)}).values;
        auto& ga = t.grad_buffer(a);
        for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k] * (1.0 - y[k] * y[k]);
    });
}

Tape::Var Tape::softplus(Var a) {
    Tensor out = value(a);
    for (double& v : out.values) v = v > 30.0 ? v : (v < -30.0 ? std::exp(v) : std::log1p(std::exp(v)));
    return push(std::move(out), requires_grad(a), false, [a, self = size()](Tape& t) {
        if (!t.requires_grad(a)) return;
        const auto& g = t.grad(Var{std::int32_t(self)});
        const auto& x = t.value(a).values;
        auto& ga = t.grad_buffer(a);
        for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k] * sigmoid(x[k]);
    });
}

Tape::Var Tape::relu(Var a) {
    Tensor out = value(a);
    for (double& v : out.values) v = v > 0.0 ? v : 0.0;
    return push(std::move(out), requires_grad(a), false, [a, self = size()](Tape& t) {
        if (!t.requires_grad(a)) return;
        const auto& g = t.grad(Var{std::int32_t(self)});
        const auto& x = t.value(a).values;
        auto& ga = t.grad_buffer(a);
        for (std::size_t k = 0; k < g.size(); ++k)
            if (x[k] > 0.0) ga[k] += g[k];
    });
}

Tape::Var Tape::reduce_sum(Var a) {
    double s = 0.0;
    for (double v : value(a).values) s += v;
    return push(Tensor::scalar(s), requires_grad(a), false, [a, self = size()](Tape& t) {
        if (!t.requires_grad(a)) return;
        const double g = t.grad(Var{std::int32_t(self)})[0];
        auto& ga = t.grad_buffer(a);
        for (double& v : ga) v += g;
    });
}

Tape::Var Tape::reshape(Var a, Shape shape) {
    Tensor out(std::move(shape), value(a).values);
    return push(std::move(out), requires_grad(a), false, [a, self = size()](Tape& t) {
        if (!t.requires_grad(a)) return;
        const auto& g = t.grad(Var{std::int32_t(self)});
        auto& ga = t.grad_buffer(a);
        for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k];
    });
}

Tape::Var Tape::slice(Var a, std::int64_t offset, std::int64_t len) {
    const Tensor& ta = value(a);
    if (offset < 0 || len < 0 || offset + len > ta.numel())
        throw ShapeError("slice out of range");
    Tensor out({len}, std::vector<double>(ta.values.begin() + offset, ta.values.begin() + offset + len));
    return push(std::move(out), requires_grad(a), false, [a, offset, len, self = size()](Tape& t) {
        if (!t.requires_grad(a)) return;
        const auto& g = t.grad(Var{std::int32_t(self)});
        auto& ga = t.grad_buffer(a);
        for (std::int64_t k = 0; k < len; ++k) ga[offset + k] += g[k];
    });
}

namespace {

// interpret rank-1 (n) as a single-row field, rank-2 as (rows, n)
std::pair<std::int64_t, std::int64_t> field_dims(const Tensor& t) {
    if (t.shape.size() == 1) return {1, t.shape[0]};
    if (t.shape.size() == 2) return {t.shape[0], t.shape[1]};
    throw ShapeError("column ops need rank 1 or 2");
}

}  // namespace

Tape::Var Tape::gather_cols(Var a, std::vector<std::uint32_t> idx) {
    const Tensor& ta = value(a);
    const auto [m, n] = field_dims(ta);
    for (auto i : idx)
        if (static_cast<std::int64_t>(i) >= n) throw ShapeError("gather index out of range");
    const std::int64_t k_count = static_cast<std::int64_t>(idx.size());
    Shape out_shape = ta.shape.size() == 1 ? Shape{k_count} : Shape{m, k_count};
    Tensor out = Tensor::zeros(out_shape);
    for (std::int64_t r = 0; r < m; ++r)
        for (std::int64_t c = 0; c < k_count; ++c)
            out.values[r * k_count + c] = ta.values[r * n + idx[c]];
    return push(std::move(out), requires_grad(a), false,
                [a, idx = std::move(idx), m, n, k_count, self = size()](Tape& t) {
                    if (!t.requires_grad(a)) return;
                    const auto& g = t.grad(Var{std::int32_t(self)});
                    auto& ga = t.grad_buffer(a);
                    for (std::int64_t r = 0; r < m; ++r)
                        for (std::int64_t c = 0; c < k_count; ++c)
                            ga[r * n + idx[c]] += g[r * k_count + c];
                });
}

Tape::Var Tape::scatter_add_cols(Var a, std::vector<std::uint32_t> idx, std::int64_t out_cols) {
    const Tensor& ta = value(a);
    const auto [m, k] = field_dims(ta);
    if (static_cast<std::int64_t>(idx.size()) != k)
        throw ShapeError("scatter_add: index count must match input columns");
    for (auto i : idx)
        if (static_cast<std::int64_t>(i) >= out_cols) throw ShapeError("scatter index out of range");
    Shape out_shape = ta.shape.size() == 1 ? Shape{out_cols} : Shape{m, out_cols};
    Tensor out = Tensor::zeros(out_shape);
    for (std::int64_t r = 0; r < m; ++r)
        for (std::int64_t c = 0; c < k; ++c)
            out.values[r * out_cols + idx[c]] += ta.values[r * k + c];
    return push(std::move(out), requires_grad(a), false,
                [a, idx = std::move(idx), m, k, out_cols, self = size()](Tape& t) {
                    if (!t.requires_grad(a)) return;
                    const auto& g = t.grad(Var{std::int32_t(self)});
                    auto& ga = t.grad_buffer(a);
                    for (std::int64_t r = 0; r < m; ++r)
                        for (std::int64_t c = 0; c < k; ++c)
                            ga[r * k + c] += g[r * out_cols + idx[c]];
                });
}

namespace {

std::int64_t ipow(std::int64_t base, int e) {
    std::int64_t r = 1;
    for (int i = 0; i < e; ++i) r *= base;
    return r;
}

}  // namespace

Tape::Var Tape::maxpool_grid(Var a, int grid_dim, int side, int window) {
    const Tensor& ta = value(a);
    if (grid_dim < 1 || grid_dim > 3) throw ShapeError("pooling supports dims 1..3");
    if (window < 2 || side % window != 0) throw ShapeError("pooling window must divide the side");
    const auto [channels, n_points] = field_dims(ta);
    if (n_points != ipow(side, grid_dim)) throw ShapeError("field size is not side^dim");

    const int coarse = side / window;
    const std::int64_t n_out = ipow(coarse, grid_dim);
    const std::int64_t block = ipow(window, grid_dim);

    Tensor out = Tensor::zeros(ta.shape.size() == 1 ? Shape{n_out} : Shape{channels, n_out});
    std::vector<std::uint32_t> argmax(static_cast<std::size_t>(channels) * n_out);

    std::vector<int> cd(grid_dim, 0);
    for (std::int64_t p = 0; p < n_out; ++p) {
        for (std::int64_t ch = 0; ch < channels; ++ch) {
            double best = -std::numeric_limits<double>::infinity();
            std::int64_t best_fine = 0;
            for (std::int64_t b = 0; b < block; ++b) {
                std::int64_t fine = 0;
                std::int64_t rem = b;
                for (int d = 0; d < grid_dim; ++d) {
                    const std::int64_t w_d = rem % window;
                    rem /= window;
                    // digit d of the fine index (d0 slowest)
                    const std::int64_t digit = std::int64_t(cd[d]) * window + w_d;
                    fine = fine * side + digit;
                }
                const double v = ta.values[ch * n_points + fine];
                if (v > best) {
                    best = v;
                    best_fine = fine;
                }
            }
            out.values[ch * n_out + p] = best;
            argmax[ch * n_out + p] = static_cast<std::uint32_t>(best_fine);
        }
        for (int d = grid_dim - 1; d >= 0; --d) {
            if (++cd[d] < coarse) break;
            cd[d] = 0;
        }
    }

    return push(std::move(out), requires_grad(a), false,
                [a, argmax = std::move(argmax), channels, n_points, n_out, self = size()](Tape& t) {
                    if (!t.requires_grad(a)) return;
                    const auto& g = t.grad(Var{std::int32_t(self)});
                    auto& ga = t.grad_buffer(a);
                    for (std::int64_t ch = 0; ch < channels; ++ch)
                        for (std::int64_t p = 0; p < n_out; ++p)
                            ga[ch * n_points + argmax[ch * n_out + p]] += g[ch * n_out + p];
                });
}

Tape::Var Tape::unpool_grid(Var a, int grid_dim, int side, int window) {
    const Tensor& ta = value(a);
    if (grid_dim < 1 || grid_dim > 3) throw ShapeError("pooling supports dims 1..3");
    if (window < 2) throw ShapeError("unpool window must be at least 2");
    const auto [channels, n_points] = field_dims(ta);
    if (n_points != ipow(side, grid_dim)) throw ShapeError("field size is not side^dim");

    const int fine_side = side * window;
    const std::int64_t n_out = ipow(fine_side, grid_dim);

    // fine -> coarse index table (nearest cell by replication)
    std::vector<std::uint32_t> src(n_out);
    std::vector<int> fd(grid_dim, 0);
    for (std::int64_t q = 0; q < n_out; ++q) {
        std::int64_t cidx = 0;
        for (int d = 0; d < grid_dim; ++d) cidx = cidx * side + fd[d] / window;
        src[q] = static_cast<std::uint32_t>(cidx);
        for (int d = grid_dim - 1; d >= 0; --d) {
            if (++fd[d] < fine_side) break;
            fd[d] = 0;
        }
    }

    Tensor out = Tensor::zeros(ta.shape.size() == 1 ? Shape{n_out} : Shape{channels, n_out});
    for (std::int64_t ch = 0; ch < channels; ++ch)
        for (std::int64_t q = 0; q < n_out; ++q)
            out.values[ch * n_out + q] = ta.values[ch * n_points + src[q]];

    return push(std::move(out), requires_grad(a), false,
                [a, src = std::move(src), channels, n_points, n_out, self = size()](Tape& t) {
                    if (!t.requires_grad(a)) return;
                    const auto& g = t.grad(Var{std::int32_t(self)});
                    auto& ga = t.grad_buffer(a);
                    for (std::int64_t ch = 0; ch < channels; ++ch)
                        for (std::int64_t q = 0; q < n_out; ++q)
                            ga[ch * n_points + src[q]] += g[ch * n_out + q];
                });
}

Tape::Var Tape::custom(Tensor value, const std::vector<Var>& parents,
                       std::function<void(Tape&, Var)> backward) {
    bool rg = false;
    for (Var p : parents) rg = rg || requires_grad(p);
    const Var self{static_cast<std::int32_t>(nodes_.size())};
    return push(std::move(value), rg, false,
                [self, backward = std::move(backward)](Tape& t) { backward(t, self); });
}

}  // namespace qc
