#include "qckit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace qc {

Tape::Var hs_sq_on_tape(Tape& t, Tape::Var recon, Tape::Var truth) {
    Tape::Var d = t.sub(recon, truth);
    return t.reduce_sum(t.mul(d, d));
}

namespace {

struct FdPlan {
    std::vector<std::uint32_t> ia, ib, ic;
    std::vector<double> ca, cb, cc;
};

// Second-order first-derivative stencils along one axis of a lexicographic
// grid: central in the interior, one-sided at the two faces.
std::vector<FdPlan> make_fd_plans(const GridSpec& g, int dim) {
    const int side = g.points_per_dim;
    const double h = g.spacing();
    std::int64_t total = 1;
    for (int d = 0; d < dim; ++d) total *= side;

    std::vector<FdPlan> plans(dim);
    std::vector<int> digits(dim, 0);
    for (int d = 0; d < dim; ++d) {
        plans[d].ia.resize(total);
        plans[d].ib.resize(total);
        plans[d].ic.resize(total);
        plans[d].ca.resize(total);
        plans[d].cb.resize(total);
        plans[d].cc.resize(total);
    }

    std::vector<std::int64_t> stride(dim, 1);
    for (int d = dim - 2; d >= 0; --d) stride[d] = stride[d + 1] * side;

    std::fill(digits.begin(), digits.end(), 0);
    for (std::int64_t p = 0; p < total; ++p) {
        for (int d = 0; d < dim; ++d) {
            FdPlan& pl = plans[d];
            const std::int64_t s = stride[d];
            if (digits[d] == 0) {
                pl.ia[p] = std::uint32_t(p);
                pl.ib[p] = std::uint32_t(p + s);
                pl.ic[p] = std::uint32_t(p + 2 * s);
                pl.ca[p] = -3.0 / (2.0 * h);
                pl.cb[p] = 4.0 / (2.0 * h);
                pl.cc[p] = -1.0 / (2.0 * h);
            } else if (digits[d] == side - 1) {
                pl.ia[p] = std::uint32_t(p);
                pl.ib[p] = std::uint32_t(p - s);
                pl.ic[p] = std::uint32_t(p - 2 * s);
                pl.ca[p] = 3.0 / (2.0 * h);
                pl.cb[p] = -4.0 / (2.0 * h);
                pl.cc[p] = 1.0 / (2.0 * h);
            } else {
                pl.ia[p] = std::uint32_t(p + s);
                pl.ib[p] = std::uint32_t(p - s);
                pl.ic[p] = std::uint32_t(p);
                pl.ca[p] = 1.0 / (2.0 * h);
                pl.cb[p] = -1.0 / (2.0 * h);
                pl.cc[p] = 0.0;
            }
        }
        for (int d = dim - 1; d >= 0; --d) {
            if (++digits[d] < side) break;
            digits[d] = 0;
        }
    }
    return plans;
}

Tape::Var axis_derivative(Tape& t, Tape::Var field, const FdPlan& pl, std::int64_t channels,
                          std::int64_t points) {
    const auto tile = [&](const std::vector<double>& c) {
        std::vector<double> v(static_cast<std::size_t>(channels) * points);
        for (std::int64_t ch = 0; ch < channels; ++ch)
            std::copy(c.begin(), c.end(), v.begin() + ch * points);
        return Tensor({channels, points}, std::move(v));
    };
    Tape::Var da = t.mul(t.gather_cols(field, pl.ia), t.constant(tile(pl.ca)));
    Tape::Var db = t.mul(t.gather_cols(field, pl.ib), t.constant(tile(pl.cb)));
    Tape::Var dc = t.mul(t.gather_cols(field, pl.ic), t.constant(tile(pl.cc)));
    return t.add(t.add(da, db), dc);
}

}  // namespace

Tape::Var gradient_penalty_on_tape(Tape& t, Tape::Var recon, Tape::Var truth, const Mesh& grid) {
    if (grid.kind() != MeshKind::UniformGrid)
        throw UnsupportedMeshError("gradient penalty needs a uniform grid");
    const Tensor& r = t.value(recon);
    const std::int64_t channels = r.shape.size() == 2 ? r.shape[0] : 1;
    const std::int64_t points = r.shape.size() == 2 ? r.shape[1] : r.shape[0];
    if (points != grid.size()) throw ShapeError("field does not live on the grid");

    const auto plans = make_fd_plans(*grid.grid(), grid.dim());
    Tape::Var acc{};
    for (const FdPlan& pl : plans) {
        Tape::Var dr = axis_derivative(t, recon, pl, channels, points);
        Tape::Var dt_ = axis_derivative(t, truth, pl, channels, points);
        Tape::Var diff = t.sub(dr, dt_);
        Tape::Var sq = t.reduce_sum(t.mul(diff, diff));
        acc = acc.valid() ? t.add(acc, sq) : sq;
    }
    const double denom = double(grid.dim()) * double(channels) * double(points);
    return t.scale(acc, 1.0 / denom);
}

Tape::Var recon_loss_on_tape(Tape& t, Tape::Var recon, Tape::Var truth, const Mesh& mesh,
                             double lambda) {
    Tape::Var loss = hs_sq_on_tape(t, recon, truth);
    if (lambda != 0.0) {
        if (mesh.kind() != MeshKind::UniformGrid)
            throw ConfigError("gradient penalty requested on a scattered mesh; set lambda = 0");
        loss = t.add(loss, t.scale(gradient_penalty_on_tape(t, recon, truth, mesh), lambda));
    }
    return loss;
}

double recon_loss_value(const Tensor& recon, const Tensor& truth, const Mesh& mesh, double lambda) {
    Tape t;
    Tape::Var r = t.constant(recon);
    Tape::Var x = t.constant(truth);
    return t.value(recon_loss_on_tape(t, r, x, mesh, lambda)).values[0];
}

namespace {

double sample_norm(const FieldSeries& s, std::int64_t t) {
    const double* v = s.sample_data(t);
    const std::int64_t n = std::int64_t(s.channels) * s.points;
    double acc = 0.0;
    for (std::int64_t k = 0; k < n; ++k) acc += v[k] * v[k];
    return std::sqrt(acc);
}

double sample_diff_norm(const FieldSeries& a, const FieldSeries& b, std::int64_t t) {
    const double* va = a.sample_data(t);
    const double* vb = b.sample_data(t);
    const std::int64_t n = std::int64_t(a.channels) * a.points;
    double acc = 0.0;
    for (std::int64_t k = 0; k < n; ++k) {
        const double d = va[k] - vb[k];
        acc += d * d;
    }
    return std::sqrt(acc);
}

void check_conformance(const FieldSeries& truth, const FieldSeries& recon) {
    if (truth.samples != recon.samples || truth.channels != recon.channels ||
        truth.points != recon.points)
        throw ShapeError("series shapes differ");
}

}  // namespace

double relative_error(const FieldSeries& truth, const FieldSeries& recon) {
    check_conformance(truth, recon);
    double acc = 0.0;
    for (std::int64_t t = 0; t < truth.samples; ++t) {
        const double denom = sample_norm(truth, t);
        if (denom == 0.0) throw MetricError("truth sample has zero norm");
        acc += sample_diff_norm(truth, recon, t) / denom;
    }
    return acc / double(truth.samples);
}

double max_error(const FieldSeries& truth, const FieldSeries& recon) {
    check_conformance(truth, recon);
    double worst = 0.0;
    for (std::int64_t t = 0; t < truth.samples; ++t) {
        const double denom = sample_norm(truth, t);
        if (denom == 0.0) throw MetricError("truth sample has zero norm");
        worst = std::max(worst, sample_diff_norm(truth, recon, t) / denom);
    }
    return worst;
}

std::pair<std::vector<std::int64_t>, std::vector<std::int64_t>> split_dataset(
    std::int64_t samples, double train_fraction, std::uint64_t seed) {
    if (samples < 2) throw ConfigError("need at least two samples to split");
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw ConfigError("train fraction must lie in (0, 1)");

    std::vector<std::int64_t> perm(samples);
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(seed);
    for (std::int64_t i = samples - 1; i > 0; --i) {
        std::uniform_int_distribution<std::int64_t> pick(0, i);
        std::swap(perm[i], perm[pick(rng)]);
    }
    const auto n_train = static_cast<std::int64_t>(std::ceil(train_fraction * double(samples)));
    std::vector<std::int64_t> train(perm.begin(), perm.begin() + n_train);
    std::vector<std::int64_t> test(perm.begin() + n_train, perm.end());
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    return {std::move(train), std::move(test)};
}

double compression_ratio(int channels, std::int64_t points, int latent_dim) {
    if (latent_dim < 1) throw ConfigError("latent dimension must be positive");
    return double(channels) * double(points) / double(latent_dim);
}

}  // namespace qc
