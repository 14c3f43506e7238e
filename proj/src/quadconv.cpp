#include "qckit/quadconv.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace qc {

namespace {

std::shared_ptr<const BoundMap> bind_map(const Mesh& input, const Mesh& output,
                                         const IndexMap& map) {
    if (map.output_count() != output.size())
        throw ContractError("index map output count does not match the output mesh");

    auto b = std::make_shared<BoundMap>();
    b->dim = input.dim();
    b->n_in = input.size();
    b->n_out = output.size();
    const std::int64_t pairs = map.total_pairs();
    b->pair_in.reserve(pairs);
    b->pair_out.reserve(pairs);
    b->offsets.reserve(pairs * b->dim);
    b->bump_values.reserve(pairs);
    b->out_rows.resize(b->n_out + 1, 0);

    for (std::int64_t j = 0; j < b->n_out; ++j) {
        for (std::uint32_t i : map.neighbors(j)) {
            if (i >= b->n_in) throw ContractError("index map refers past the input mesh");
            b->pair_in.push_back(i);
            b->pair_out.push_back(static_cast<std::uint32_t>(j));
            double r2 = 0.0;
            for (int d = 0; d < b->dim; ++d) {
                const double z = output.point(j)[d] - input.point(i)[d];
                b->offsets.push_back(z);
                r2 += z * z;
            }
            b->bump_values.push_back(bump_radial(std::sqrt(r2), map.alpha()));
        }
        b->out_rows[j + 1] = b->pair_in.size();
    }

    // inverse CSR: pairs grouped by input point, pair ids ascending, so the
    // feature/weight gradient reduction order is fixed no matter how work is
    // split
    b->in_rows.assign(b->n_in + 1, 0);
    for (std::uint32_t i : b->pair_in) b->in_rows[i + 1] += 1;
    for (std::int64_t i = 0; i < b->n_in; ++i) b->in_rows[i + 1] += b->in_rows[i];
    b->in_row_pairs.resize(b->pair_in.size());
    std::vector<std::uint64_t> cursor(b->in_rows.begin(), b->in_rows.end() - 1);
    for (std::int64_t p = 0; p < pairs; ++p)
        b->in_row_pairs[cursor[b->pair_in[p]]++] = static_cast<std::uint32_t>(p);

    return b;
}

}  // namespace

QuadConvLayer::QuadConvLayer(Mesh input, Mesh output, const QuadConvSettings& settings,
                             std::optional<IndexMap> prebuilt_map, OpCounter* counter)
    : input_(std::move(input)), output_(std::move(output)) {
    if (settings.in_channels < 1 || settings.out_channels < 1)
        throw ConfigError("channel counts must be positive");
    in_channels_ = settings.in_channels;
    out_channels_ = settings.out_channels;

    double alpha = settings.alpha;
    if (prebuilt_map) {
        map_ = std::make_shared<IndexMap>(std::move(*prebuilt_map));
        if (alpha > 0.0 && alpha != map_->alpha())
            throw ContractError("prebuilt index map radius differs from the requested alpha");
    } else {
        if (alpha <= 0.0) {
            if (settings.target_neighbors <= 0)
                throw ConfigError("need either alpha or a target neighbor count");
            alpha = choose_alpha(input_, output_, settings.target_neighbors);
        }
        map_ = std::make_shared<IndexMap>(build_index_map(input_, output_, alpha, counter));
    }

    bound_ = bind_map(input_, output_, *map_);

    MlpSpec spec;
    spec.input_dim = input_.dim();
    spec.hidden = settings.mlp_hidden;
    spec.out_rows = out_channels_;
    spec.out_cols = in_channels_;
    kernel_ = KernelMLP::create(spec, settings.seed);

    if (settings.learned_weights) {
        weights_ = QuadratureWeights::learned(input_, settings.fallback_volume);
        raw_ = weights_.raw();
    } else if (input_.kind() == MeshKind::UniformGrid) {
        weights_ = QuadratureWeights::newton_cotes(input_);
    } else {
        if (!(settings.fallback_volume > 0.0))
            throw ConfigError("static weights on a scattered mesh need a positive fallback volume");
        weights_ = QuadratureWeights::static_weights(
            std::vector<double>(input_.size(), settings.fallback_volume / double(input_.size())));
    }

    if (settings.channel_bias) bias_.assign(out_channels_, 0.0);
}

std::vector<double> QuadConvLayer::rho() const {
    if (!weights_.learned_mode()) return weights_.static_rho();
    std::vector<double> out(raw_.size());
    for (std::size_t k = 0; k < raw_.size(); ++k) out[k] = softplus(raw_[k]);
    return out;
}

Tape::Var kernel_matrices_on_tape(Tape& t, const QuadConvLayer& layer, Tape::Var theta,
                                  OpCounter* counter) {
    const BoundMap& b = layer.bound();
    const MlpSpec& spec = layer.kernel().spec();
    const std::int64_t pairs = b.pair_count();

    Tape::Var x = t.constant(Tensor({pairs, b.dim}, b.offsets));
    const auto dims = spec.layer_dims();
    std::int64_t at = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const std::int64_t in = dims[l], out = dims[l + 1];
        Tape::Var w = t.reshape(t.slice(theta, at, in * out), {in, out});
        Tape::Var bias = t.slice(theta, at + in * out, out);
        x = t.add_rows(t.matmul(x, w), bias);
        if (l + 2 < dims.size()) x = t.tanh(x);
        at += in * out + out;
        if (counter) counter->macs += std::uint64_t(pairs) * in * out;
    }
    return x;
}

Tape::Var quadconv_apply_on_tape(Tape& t, const QuadConvLayer& layer, Tape::Var kernel_matrices,
                                 Tape::Var features, Tape::Var rho, OpCounter* counter) {
    auto bound = layer.bound_ptr();
    const BoundMap& b = *bound;
    const int c_in = layer.in_channels();
    const int c_out = layer.out_channels();
    const std::int64_t ctc = std::int64_t(c_out) * c_in;

    const Tensor& h = t.value(kernel_matrices);
    const Tensor& f = t.value(features);
    const Tensor& r = t.value(rho);
    if (h.shape.size() != 2 || h.shape[0] != b.pair_count() || h.shape[1] != ctc)
        throw ShapeError("kernel matrix block has wrong shape");
    if (f.shape.size() != 2 || f.shape[0] != c_in || f.shape[1] != b.n_in)
        throw ShapeError("features must be (in_channels, n_input_points)");
    if (r.numel() != b.n_in) throw ShapeError("quadrature weights must match the input mesh");

    Tensor out = Tensor::zeros({c_out, b.n_out});
    {
        const double* hv = h.values.data();
        const double* fv = f.values.data();
        const double* rv = r.values.data();
        double* ov = out.values.data();
        for (std::int64_t j = 0; j < b.n_out; ++j)
            for (std::uint64_t p = b.out_rows[j]; p < b.out_rows[j + 1]; ++p) {
                const std::uint32_t i = b.pair_in[p];
                const double w = rv[i] * b.bump_values[p];
                const double* hp = hv + p * ctc;
                for (int rr = 0; rr < c_out; ++rr) {
                    double acc = 0.0;
                    for (int cc = 0; cc < c_in; ++cc) acc += hp[rr * c_in + cc] * fv[cc * b.n_in + i];
                    ov[rr * b.n_out + j] += w * acc;
                }
            }
    }
    if (counter) {
        counter->kernel_evals += std::uint64_t(b.pair_count());
        counter->macs += std::uint64_t(b.pair_count()) * ctc;
    }

    auto backward = [bound, kernel_matrices, features, rho, c_in, c_out, ctc](Tape& t2,
                                                                              Tape::Var self) {
        const BoundMap& bb = *bound;
        const auto& g = t2.grad(self);  // (c_out, n_out)
        const double* hv = t2.value(kernel_matrices).values.data();
        const double* fv = t2.value(features).values.data();
        const double* rv = t2.value(rho).values.data();

        if (t2.requires_grad(kernel_matrices)) {
            auto& gh = t2.grad_buffer(kernel_matrices);
            for (std::int64_t j = 0; j < bb.n_out; ++j)
                for (std::uint64_t p = bb.out_rows[j]; p < bb.out_rows[j + 1]; ++p) {
                    const std::uint32_t i = bb.pair_in[p];
                    const double w = rv[i] * bb.bump_values[p];
                    double* ghp = gh.data() + p * ctc;
                    for (int rr = 0; rr < c_out; ++rr) {
                        const double gw = w * g[rr * bb.n_out + j];
                        for (int cc = 0; cc < c_in; ++cc) ghp[rr * c_in + cc] += gw * fv[cc * bb.n_in + i];
                    }
                }
        }
        if (t2.requires_grad(features)) {
            auto& gf = t2.grad_buffer(features);
            for (std::int64_t i = 0; i < bb.n_in; ++i)
                for (std::uint64_t q = bb.in_rows[i]; q < bb.in_rows[i + 1]; ++q) {
                    const std::uint32_t p = bb.in_row_pairs[q];
                    const std::uint32_t j = bb.pair_out[p];
                    const double w = rv[i] * bb.bump_values[p];
                    const double* hp = hv + std::uint64_t(p) * ctc;
                    for (int cc = 0; cc < c_in; ++cc) {
                        double acc = 0.0;
                        for (int rr = 0; rr < c_out; ++rr) acc += hp[rr * c_in + cc] * g[rr * bb.n_out + j];
                        gf[cc * bb.n_in + i] += w * acc;
                    }
                }
        }
        if (t2.requires_grad(rho)) {
            auto& gr = t2.grad_buffer(rho);
            for (std::int64_t i = 0; i < bb.n_in; ++i)
                for (std::uint64_t q = bb.in_rows[i]; q < bb.in_rows[i + 1]; ++q) {
                    const std::uint32_t p = bb.in_row_pairs[q];
                    const std::uint32_t j = bb.pair_out[p];
                    const double* hp = hv + std::uint64_t(p) * ctc;
                    double acc = 0.0;
                    for (int rr = 0; rr < c_out; ++rr) {
                        double row = 0.0;
                        for (int cc = 0; cc < c_in; ++cc) row += hp[rr * c_in + cc] * fv[cc * bb.n_in + i];
                        acc += row * g[rr * bb.n_out + j];
                    }
                    gr[i] += bb.bump_values[p] * acc;
                }
        }
    };

    return t.custom(std::move(out), {kernel_matrices, features, rho}, std::move(backward));
}

Tape::Var quadconv_forward_on_tape(Tape& t, const QuadConvLayer& layer, Tape::Var features,
                                   Tape::Var theta, Tape::Var raw, Tape::Var bias,
                                   OpCounter* counter) {
    if (!theta.valid())
        theta = t.constant(Tensor({layer.kernel().parameter_count()}, layer.theta()));
    Tape::Var h = kernel_matrices_on_tape(t, layer, theta, counter);

    Tape::Var rho;
    if (layer.learned_weights()) {
        if (!raw.valid())
            raw = t.constant(Tensor({std::int64_t(layer.raw_weights().size())}, layer.raw_weights()));
        rho = t.softplus(raw);
    } else {
        if (raw.valid()) throw ContractError("raw weights passed to a static-weight layer");
        rho = t.constant(Tensor({layer.input_mesh().size()}, layer.weights().static_rho()));
    }

    Tape::Var out = quadconv_apply_on_tape(t, layer, h, features, rho, counter);
    if (layer.has_bias()) {
        if (!bias.valid())
            bias = t.constant(Tensor({std::int64_t(layer.bias().size())}, layer.bias()));
        out = t.add_cols(out, bias);
    } else if (bias.valid()) {
        throw ContractError("bias passed to a layer without channel bias");
    }
    return out;
}

Tensor quadconv_infer(const QuadConvLayer& layer, const Tensor& features, OpCounter* counter) {
    Tape t;
    Tape::Var f = t.constant(features);
    Tape::Var out = quadconv_forward_on_tape(t, layer, f, {}, {}, {}, counter);
    return t.value(out);
}

Tensor quadconv_forward_fixed(const QuadConvLayer& layer, const Tensor& features,
                              const FullKernelFn& full_kernel, OpCounter* counter) {
    const BoundMap& b = layer.bound();
    const int c_in = layer.in_channels();
    const int c_out = layer.out_channels();
    const std::int64_t ctc = std::int64_t(c_out) * c_in;
    if (features.shape.size() != 2 || features.shape[0] != c_in || features.shape[1] != b.n_in)
        throw ShapeError("features must be (in_channels, n_input_points)");

    const std::vector<double> rho = layer.rho();
    Tensor out = Tensor::zeros({c_out, b.n_out});
    std::vector<double> g(ctc);
    for (std::int64_t j = 0; j < b.n_out; ++j)
        for (std::uint64_t p = b.out_rows[j]; p < b.out_rows[j + 1]; ++p) {
            const std::uint32_t i = b.pair_in[p];
            full_kernel(b.offsets.data() + p * b.dim, g.data());
            for (int rr = 0; rr < c_out; ++rr) {
                double acc = 0.0;
                for (int cc = 0; cc < c_in; ++cc) acc += g[rr * c_in + cc] * features.values[cc * b.n_in + i];
                out.values[rr * b.n_out + j] += rho[i] * acc;
            }
        }
    if (counter) {
        counter->kernel_evals += std::uint64_t(b.pair_count());
        counter->macs += std::uint64_t(b.pair_count()) * ctc;
    }
    return out;
}

Tensor grid_conv2d_reference(const Tensor& field, int side, const Tensor& kernel) {
    if (field.numel() != std::int64_t(side) * side)
        throw ShapeError("field size is not side^2");
    if (kernel.shape.size() != 2 || kernel.shape[0] != kernel.shape[1] || kernel.shape[0] % 2 == 0)
        throw ShapeError("kernel must be square with odd size");
    const int k = static_cast<int>(kernel.shape[0]);
    const int hk = k / 2;

    Tensor out = Tensor::zeros(field.shape);
    for (int j0 = 0; j0 < side; ++j0)
        for (int j1 = 0; j1 < side; ++j1) {
            double acc = 0.0;
            for (int o0 = -hk; o0 <= hk; ++o0)
                for (int o1 = -hk; o1 <= hk; ++o1) {
                    const int i0 = j0 - o0, i1 = j1 - o1;
                    if (i0 < 0 || i0 >= side || i1 < 0 || i1 >= side) continue;
                    acc += kernel.at(o0 + hk, o1 + hk) * field.values[std::int64_t(i0) * side + i1];
                }
            out.values[std::int64_t(j0) * side + j1] = acc;
        }
    return out;
}

TranslationReport translation_check(const QuadConvLayer& layer, const Tensor& features,
                                    const std::vector<int>& shift) {
    const Mesh& mesh = layer.input_mesh();
    if (mesh.kind() != MeshKind::UniformGrid || layer.output_mesh().kind() != MeshKind::UniformGrid ||
        mesh.size() != layer.output_mesh().size())
        throw UnsupportedMeshError("translation check needs matching uniform grids");
    const GridSpec g = *mesh.grid();
    const int dim = mesh.dim();
    if (static_cast<int>(shift.size()) != dim) throw ShapeError("shift rank mismatch");
    const int side = g.points_per_dim;
    const double h = g.spacing();
    const double alpha = layer.alpha();

    // features with every lattice index translated by `shift`; cells shifted
    // in from outside the domain are zero (they never enter the comparison)
    const std::int64_t n = mesh.size();
    const int c_in = layer.in_channels();
    Tensor shifted = Tensor::zeros(features.shape);
    std::vector<int> digits(dim, 0);
    for (std::int64_t p = 0; p < n; ++p) {
        bool ok = true;
        std::int64_t srcp = 0;
        for (int d = 0; d < dim; ++d) {
            const int sd = digits[d] - shift[d];
            if (sd < 0 || sd >= side) { ok = false; break; }
            srcp = srcp * side + sd;
        }
        if (ok)
            for (int c = 0; c < c_in; ++c)
                shifted.values[c * n + p] = features.values[c * n + srcp];
        for (int d = dim - 1; d >= 0; --d) {
            if (++digits[d] < side) break;
            digits[d] = 0;
        }
    }

    const Tensor base = quadconv_infer(layer, features);
    const Tensor moved = quadconv_infer(layer, shifted);

    const auto ball_inside = [&](const std::vector<int>& dg) {
        for (int d = 0; d < dim; ++d) {
            const double y = dg[d] * h;
            if (y < alpha || g.extent - y < alpha) return false;
        }
        return true;
    };

    TranslationReport rep;
    double ref_mag = 0.0;
    std::fill(digits.begin(), digits.end(), 0);
    const int c_out = layer.out_channels();
    for (std::int64_t p = 0; p < n; ++p) {
        std::vector<int> src(dim);
        bool ok = true;
        std::int64_t srcp = 0;
        for (int d = 0; d < dim; ++d) {
            src[d] = digits[d] - shift[d];
            if (src[d] < 0 || src[d] >= side) { ok = false; break; }
            srcp = srcp * side + src[d];
        }
        if (ok && ball_inside(digits) && ball_inside(src)) {
            for (int c = 0; c < c_out; ++c) {
                const double a = moved.values[c * n + p];
                const double b = base.values[c * n + srcp];
                rep.max_abs = std::max(rep.max_abs, std::abs(a - b));
                ref_mag = std::max(ref_mag, std::abs(b));
            }
            ++rep.compared;
        }
        for (int d = dim - 1; d >= 0; --d) {
            if (++digits[d] < side) break;
            digits[d] = 0;
        }
    }
    rep.max_rel = ref_mag > 0.0 ? rep.max_abs / ref_mag : rep.max_abs;
    return rep;
}

}  // namespace qc
