#include "qckit/series.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "qckit/binary_io.hpp"

namespace qc {

FieldSeries FieldSeries::zeros(std::int64_t t, int c, std::int64_t n, double dt) {
    if (t < 1 || c < 1 || n < 1) throw ShapeError("series dimensions must be positive");
    FieldSeries s;
    s.samples = t;
    s.channels = c;
    s.points = n;
    s.dt = dt;
    s.values.assign(static_cast<std::size_t>(t) * c * n, 0.0);
    return s;
}

Tensor FieldSeries::sample(std::int64_t t) const {
    if (t < 0 || t >= samples) throw ShapeError("sample index out of range");
    const double* base = sample_data(t);
    return Tensor({channels, points}, std::vector<double>(base, base + std::int64_t(channels) * points));
}

void FieldSeries::set_sample(std::int64_t t, const Tensor& field) {
    if (t < 0 || t >= samples) throw ShapeError("sample index out of range");
    if (field.numel() != std::int64_t(channels) * points) throw ShapeError("field size mismatch");
    std::copy(field.values.begin(), field.values.end(), sample_data(t));
}

void FieldSeries::save(const std::filesystem::path& path) const {
    io::Writer w(path);
    w.magic("QCSER001");
    w.u64(static_cast<std::uint64_t>(samples));
    w.u32(static_cast<std::uint32_t>(channels));
    w.u64(static_cast<std::uint64_t>(points));
    w.f64(dt);
    w.f64_array(values.data(), values.size());
    w.close();
}

FieldSeries FieldSeries::load(const std::filesystem::path& path) {
    io::Reader r(path);
    r.expect_magic("QCSER001");
    FieldSeries s;
    s.samples = static_cast<std::int64_t>(r.u64());
    s.channels = static_cast<int>(r.u32());
    s.points = static_cast<std::int64_t>(r.u64());
    s.dt = r.f64();
    if (s.samples < 1 || s.channels < 1 || s.points < 1)
        throw FormatError("series header has non-positive dimensions");
    s.values.resize(static_cast<std::size_t>(s.samples) * s.channels * s.points);
    r.f64_array(s.values.data(), s.values.size());
    return s;
}

// ---------------------------------------------------------------------------
// pulse

namespace {

double sigmoid(double x) { return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

}  // namespace

double pulse2d_value(const Pulse2dParams& p, double x0, double x1, double t, double t_span) {
    const double tau = t_span > 0.0 ? t / t_span : 0.0;
    const double prog = std::min(tau / p.halt_frac, 1.0);
    const double c0 = p.start[0] + prog * (p.stop[0] - p.start[0]);
    const double c1 = p.start[1] + prog * (p.stop[1] - p.start[1]);
    const double r2 = (x0 - c0) * (x0 - c0) + (x1 - c1) * (x1 - c1);
    const double gate = sigmoid(p.steepness * (tau - p.t0_frac));
    return p.amplitude * gate * std::exp(-r2 / (p.width * p.width));
}

FieldSeries gen_pulse2d(const Mesh& mesh, std::int64_t samples, Pulse2dParams params,
                        std::uint64_t seed, double dt) {
    if (mesh.dim() != 2) throw UnsupportedMeshError("pulse generator needs a 2D mesh");
    if (samples < 1) throw ConfigError("need at least one sample");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(-0.1, 0.1);
    params.amplitude *= 1.0 + jitter(rng);
    params.width *= 1.0 + jitter(rng);
    params.halt_frac *= 1.0 + jitter(rng);

    const double t_span = double(samples - 1) * dt;
    FieldSeries s = FieldSeries::zeros(samples, 1, mesh.size(), dt);
    for (std::int64_t t = 0; t < samples; ++t) {
        double* out = s.sample_data(t);
        for (std::int64_t i = 0; i < mesh.size(); ++i) {
            const double* x = mesh.point(i);
            out[i] = pulse2d_value(params, x[0], x[1], double(t) * dt, t_span);
        }
    }
    return s;
}

// ---------------------------------------------------------------------------
// wake

Wake2dParams wake2d_seeded(Wake2dParams params, std::uint64_t seed) {
    if (params.modes < 1) throw ConfigError("wake needs at least one mode");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> amp_jitter(0.8, 1.2);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    if (params.mode_amplitudes.empty()) {
        params.mode_amplitudes.resize(params.modes);
        for (int m = 0; m < params.modes; ++m)
            params.mode_amplitudes[m] = amp_jitter(rng) / double(m + 1);
    }
    if (params.mode_phases.empty()) {
        params.mode_phases.resize(params.modes);
        for (int m = 0; m < params.modes; ++m) params.mode_phases[m] = phase(rng);
    }
    if (static_cast<int>(params.mode_amplitudes.size()) != params.modes ||
        static_cast<int>(params.mode_phases.size()) != params.modes)
        throw ConfigError("wake mode arrays must match the mode count");
    return params;
}

double wake2d_value(const Wake2dParams& p, double x0, double x1, double t) {
    const double dx0 = x0 - p.disk[0];
    const double dx1 = x1 - p.disk[1];
    if (dx0 * dx0 + dx1 * dx1 <= p.disk_radius * p.disk_radius) return 0.0;

    const double growth = 1.0 - std::exp(-std::max(dx0, 0.0) / p.growth_length);
    const double envelope = std::exp(-(dx1 / p.transverse_sigma) * (dx1 / p.transverse_sigma));
    double acc = 0.0;
    for (int m = 1; m <= p.modes; ++m) {
        const double phase = 2.0 * std::numbers::pi * m * (x0 / p.wavelength - t / p.period) +
                             p.mode_phases[m - 1];
        acc += p.mode_amplitudes[m - 1] * std::sin(phase);
    }
    return growth * envelope * acc;
}

FieldSeries gen_wake2d(const Mesh& mesh, std::int64_t samples, Wake2dParams params,
                       std::uint64_t seed, double dt) {
    if (mesh.dim() != 2) throw UnsupportedMeshError("wake generator needs a 2D mesh");
    if (samples < 1) throw ConfigError("need at least one sample");
    params = wake2d_seeded(std::move(params), seed);

    FieldSeries s = FieldSeries::zeros(samples, 1, mesh.size(), dt);
    for (std::int64_t t = 0; t < samples; ++t) {
        double* out = s.sample_data(t);
        for (std::int64_t i = 0; i < mesh.size(); ++i) {
            const double* x = mesh.point(i);
            out[i] = wake2d_value(params, x[0], x[1], double(t) * dt);
        }
    }
    return s;
}

// ---------------------------------------------------------------------------
// low-pass demo

double lowpass_signal(double x) {
    return std::sin(std::numbers::pi * x) + std::sin(14.0 * std::numbers::pi * x);
}

double lowpass_kernel(double x) {
    if (x == 0.0) return 64.0;
    return 8.0 * std::sin(8.0 * std::numbers::pi * x) / (std::numbers::pi * x);
}

std::vector<double> lowpass_sample_points(std::int64_t count, Sampling1d sampling,
                                          std::uint64_t seed) {
    if (count < 4) throw ConfigError("need at least 4 sample points");
    std::vector<double> x(count);
    if (sampling == Sampling1d::Uniform) {
        const double h = 2.0 / double(count - 1);
        for (std::int64_t i = 0; i < count; ++i) x[i] = -1.0 + i * h;
        return x;
    }
    // Endpoints pinned (the signal vanishes there, so the quadrature hull
    // covers the full window); interior points drawn uniformly and pushed
    // through a monotone warp so the local density varies smoothly.
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    x[0] = -1.0;
    x[count - 1] = 1.0;
    for (std::int64_t i = 1; i + 1 < count; ++i) {
        const double u = unit(rng);
        const double warped = u + 0.12 * std::sin(2.0 * std::numbers::pi * u);
        x[i] = -1.0 + 2.0 * warped;
    }
    std::sort(x.begin(), x.end());
    // enforce strictly increasing (coincident draws are measure-zero but be safe)
    for (std::int64_t i = 1; i < count; ++i)
        if (x[i] <= x[i - 1]) x[i] = std::nextafter(x[i - 1], 2.0);
    return x;
}

std::vector<double> analytic_lowpass(const std::vector<double>& y_out, double tol) {
    std::vector<double> result(y_out.size(), 0.0);
    for (std::size_t k = 0; k < y_out.size(); ++k) {
        const double y = y_out[k];
        double prev = 0.0;
        bool have_prev = false;
        for (std::int64_t n = 2048; n <= 4 * 1024 * 1024; n *= 2) {
            const double h = 2.0 / double(n);
            double acc = 0.5 * (lowpass_signal(-1.0) * lowpass_kernel(y + 1.0) +
                                lowpass_signal(1.0) * lowpass_kernel(y - 1.0));
            for (std::int64_t i = 1; i < n; ++i) {
                const double x = -1.0 + i * h;
                acc += lowpass_signal(x) * lowpass_kernel(y - x);
            }
            acc *= h;
            if (have_prev && std::abs(acc - prev) < tol) {
                prev = acc;
                break;
            }
            prev = acc;
            have_prev = true;
        }
        result[k] = prev;
    }
    return result;
}

std::vector<double> trapezoid_weights_1d(const std::vector<double>& x) {
    const std::int64_t n = static_cast<std::int64_t>(x.size());
    if (n < 2) throw ShapeError("need at least two points");
    std::vector<double> w(n);
    w[0] = (x[1] - x[0]) / 2.0;
    for (std::int64_t i = 1; i + 1 < n; ++i) w[i] = (x[i + 1] - x[i - 1]) / 2.0;
    w[n - 1] = (x[n - 1] - x[n - 2]) / 2.0;
    return w;
}

std::vector<double> lowpass_naive_discrete(const std::vector<double>& x,
                                           const std::vector<double>& f,
                                           const std::vector<double>& y_out) {
    const std::int64_t n = static_cast<std::int64_t>(x.size());
    if (f.size() != x.size()) throw ShapeError("sample/value size mismatch");
    const double h = (x.back() - x.front()) / double(n - 1);
    // index-offset convolution with the kernel sampled on the mean spacing
    std::vector<double> out(y_out.size(), 0.0);
    for (std::size_t j = 0; j < y_out.size(); ++j) {
        double acc = 0.0;
        for (std::int64_t i = 0; i < n; ++i)
            acc += f[i] * lowpass_kernel(double(std::int64_t(j) - i) * h);
        out[j] = h * acc;
    }
    return out;
}

std::vector<double> lowpass_continuous_kernel(const std::vector<double>& x,
                                              const std::vector<double>& f,
                                              const std::vector<double>& y_out) {
    const std::int64_t n = static_cast<std::int64_t>(x.size());
    if (f.size() != x.size()) throw ShapeError("sample/value size mismatch");
    const double h = (x.back() - x.front()) / double(n - 1);
    std::vector<double> out(y_out.size(), 0.0);
    for (std::size_t j = 0; j < y_out.size(); ++j) {
        double acc = 0.0;
        for (std::int64_t i = 0; i < n; ++i) acc += f[i] * lowpass_kernel(y_out[j] - x[i]);
        out[j] = h * acc;
    }
    return out;
}

std::vector<double> lowpass_quadrature(const std::vector<double>& x, const std::vector<double>& f,
                                       const std::vector<double>& y_out) {
    if (f.size() != x.size()) throw ShapeError("sample/value size mismatch");
    const std::vector<double> w = trapezoid_weights_1d(x);
    std::vector<double> out(y_out.size(), 0.0);
    for (std::size_t j = 0; j < y_out.size(); ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) acc += w[i] * f[i] * lowpass_kernel(y_out[j] - x[i]);
        out[j] = acc;
    }
    return out;
}

// ---------------------------------------------------------------------------
// resampling

namespace {

void bilinear_weights(const GridSpec& g, int dim, const double* p,
                      std::vector<std::int64_t>& idx, std::vector<double>& w) {
    const int side = g.points_per_dim;
    const double h = g.spacing();
    int base[3] = {0, 0, 0};
    double frac[3] = {0, 0, 0};
    for (int d = 0; d < dim; ++d) {
        if (p[d] < -1e-12 || p[d] > g.extent + 1e-12)
            throw InterpolationError("target point outside the source grid");
        double c = std::clamp(p[d] / h, 0.0, double(side - 1));
        base[d] = std::min(static_cast<int>(c), side - 2);
        frac[d] = c - base[d];
    }
    const int corners = 1 << dim;
    idx.resize(corners);
    w.resize(corners);
    for (int m = 0; m < corners; ++m) {
        std::int64_t flat = 0;
        double weight = 1.0;
        for (int d = 0; d < dim; ++d) {
            const int bit = (m >> d) & 1;
            flat = flat * side + (base[d] + bit);
            weight *= bit ? frac[d] : 1.0 - frac[d];
        }
        idx[m] = flat;
        w[m] = weight;
    }
}

// nearest neighbors by (distance, index); deterministic
std::vector<std::int64_t> knn(const Mesh& source, const double* p, int k) {
    std::vector<std::pair<double, std::int64_t>> d(source.size());
    for (std::int64_t i = 0; i < source.size(); ++i)
        d[i] = {point_distance(source.point(i), p, source.dim()), i};
    std::partial_sort(d.begin(), d.begin() + k, d.end());
    std::vector<std::int64_t> out(k);
    for (int i = 0; i < k; ++i) out[i] = d[i].second;
    return out;
}

void mls_weights(const Mesh& source, const double* p, std::vector<std::int64_t>& idx,
                 std::vector<double>& w) {
    const int dim = source.dim();
    const int k = static_cast<int>(std::min<std::int64_t>(source.size(), 4 * (dim + 1)));
    idx = knn(source, p, k);

    double r_scale = 0.0;
    for (auto i : idx) r_scale = std::max(r_scale, point_distance(source.point(i), p, dim));
    if (r_scale == 0.0) {  // target coincides with a source point
        w.assign(idx.size(), 0.0);
        w[0] = 1.0;
        return;
    }

    // weighted linear least squares; the fitted value at p is a linear
    // functional of the samples, exact for affine fields
    const int nb = dim + 1;
    Eigen::MatrixXd basis(k, nb);
    Eigen::VectorXd wr(k);
    for (int r = 0; r < k; ++r) {
        const double* q = source.point(idx[r]);
        basis(r, 0) = 1.0;
        for (int d = 0; d < dim; ++d) basis(r, d + 1) = q[d] - p[d];
        const double rd = point_distance(q, p, dim) / r_scale;
        wr(r) = std::exp(-2.0 * rd * rd) + 1e-10;
    }
    Eigen::MatrixXd a = basis.transpose() * wr.asDiagonal() * basis;
    // value at p = e0^T a^{-1} B^T W f  ->  weights = W B a^{-1} e0
    Eigen::VectorXd e0 = Eigen::VectorXd::Zero(nb);
    e0(0) = 1.0;
    Eigen::VectorXd coeff = a.ldlt().solve(e0);
    Eigen::VectorXd wv = wr.asDiagonal() * basis * coeff;
    w.resize(k);
    for (int r = 0; r < k; ++r) w[r] = wv(r);
}

}  // namespace

FieldSeries resample_series(const FieldSeries& series, const Mesh& source, const Mesh& target) {
    if (series.points != source.size())
        throw ContractError("series point count does not match the source mesh");
    if (source.dim() != target.dim()) throw ShapeError("mesh dims differ");

    // bounding-box containment stands in for the hull test
    for (int d = 0; d < source.dim(); ++d) {
        double lo = source.point(0)[d], hi = lo;
        for (std::int64_t i = 1; i < source.size(); ++i) {
            lo = std::min(lo, source.point(i)[d]);
            hi = std::max(hi, source.point(i)[d]);
        }
        for (std::int64_t i = 0; i < target.size(); ++i)
            if (target.point(i)[d] < lo - 1e-9 || target.point(i)[d] > hi + 1e-9)
                throw InterpolationError("target mesh extends outside the source hull");
    }

    const bool from_grid = source.kind() == MeshKind::UniformGrid;
    FieldSeries out = FieldSeries::zeros(series.samples, series.channels, target.size(), series.dt);

    std::vector<std::vector<std::int64_t>> all_idx(target.size());
    std::vector<std::vector<double>> all_w(target.size());
    for (std::int64_t j = 0; j < target.size(); ++j) {
        if (from_grid)
            bilinear_weights(*source.grid(), source.dim(), target.point(j), all_idx[j], all_w[j]);
        else
            mls_weights(source, target.point(j), all_idx[j], all_w[j]);
    }

    for (std::int64_t t = 0; t < series.samples; ++t) {
        const double* src = series.sample_data(t);
        double* dst = out.sample_data(t);
        for (int c = 0; c < series.channels; ++c)
            for (std::int64_t j = 0; j < target.size(); ++j) {
                double acc = 0.0;
                for (std::size_t m = 0; m < all_idx[j].size(); ++m)
                    acc += all_w[j][m] * src[std::int64_t(c) * series.points + all_idx[j][m]];
                dst[std::int64_t(c) * target.size() + j] = acc;
            }
    }
    return out;
}

}  // namespace qc
