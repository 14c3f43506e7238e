#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "qckit/mesh.hpp"
#include "qckit/tensor.hpp"

namespace qc {

// Time series of channel fields sampled on a fixed mesh; values are
// sample-major [t][c][n].
struct FieldSeries {
    std::int64_t samples = 0;  // T
    int channels = 0;          // C
    std::int64_t points = 0;   // N
    double dt = 1.0;
    std::vector<double> values;

    static FieldSeries zeros(std::int64_t t, int c, std::int64_t n, double dt = 1.0);

    double* sample_data(std::int64_t t) { return values.data() + t * std::int64_t(channels) * points; }
    const double* sample_data(std::int64_t t) const {
        return values.data() + t * std::int64_t(channels) * points;
    }

    Tensor sample(std::int64_t t) const;
    void set_sample(std::int64_t t, const Tensor& field);

    void save(const std::filesystem::path& path) const;
    static FieldSeries load(const std::filesystem::path& path);
};

// --- synthetic generators ---------------------------------------------------

struct Pulse2dParams {
    double amplitude = 1.0;
    double width = 0.15;
    double start[2] = {0.25, 0.35};
    double stop[2] = {0.70, 0.60};
    double halt_frac = 0.5;      // fraction of the window after which c(t) halts
    double t0_frac = 0.0;        // sigmoid midpoint as a fraction of the window
    double steepness = 10.0;     // sigmoid slope over the whole window
};

double pulse2d_value(const Pulse2dParams& p, double x0, double x1, double t, double t_span);
FieldSeries gen_pulse2d(const Mesh& mesh, std::int64_t samples, Pulse2dParams params,
                        std::uint64_t seed, double dt = 1.0);

struct Wake2dParams {
    double disk[2] = {0.30, 0.50};
    double disk_radius = 0.10;
    double wavelength = 0.25;
    double period = 16.0;  // in time units; the field repeats exactly
    int modes = 3;
    double transverse_sigma = 0.15;
    double growth_length = 0.2;
    std::vector<double> mode_amplitudes;  // filled by seed when empty
    std::vector<double> mode_phases;
};

Wake2dParams wake2d_seeded(Wake2dParams params, std::uint64_t seed);
double wake2d_value(const Wake2dParams& p, double x0, double x1, double t);
FieldSeries gen_wake2d(const Mesh& mesh, std::int64_t samples, Wake2dParams params,
                       std::uint64_t seed, double dt = 1.0);

// --- 1D low-pass demo pieces -------------------------------------------------

double lowpass_signal(double x);   // sin(pi x) + sin(14 pi x)
double lowpass_kernel(double x);   // 8 sin(8 pi x)/(pi x), 64 at x = 0

enum class Sampling1d { Uniform, NonUniform };

// Sorted sample locations on [-1, 1]; non-uniform keeps the endpoints pinned.
std::vector<double> lowpass_sample_points(std::int64_t count, Sampling1d sampling,
                                          std::uint64_t seed);

// Truncated continuous convolution int_{-1}^{1} f(x) g(y - x) dx by composite
// trapezoid, refined until successive levels differ by less than tol.
std::vector<double> analytic_lowpass(const std::vector<double>& y_out, double tol = 1e-7);

std::vector<double> lowpass_naive_discrete(const std::vector<double>& x,
                                           const std::vector<double>& f,
                                           const std::vector<double>& y_out);
std::vector<double> lowpass_continuous_kernel(const std::vector<double>& x,
                                              const std::vector<double>& f,
                                              const std::vector<double>& y_out);
std::vector<double> lowpass_quadrature(const std::vector<double>& x,
                                       const std::vector<double>& f,
                                       const std::vector<double>& y_out);

// Composite trapezoid node weights for sorted 1D locations.
std::vector<double> trapezoid_weights_1d(const std::vector<double>& x);

// --- resampling ---------------------------------------------------------------

// Interpolates every sample of a series onto a new mesh. Grid sources use
// tensor-product linear interpolation; scattered sources use a local moving
// least-squares fit (linear polynomial), which is exact on affine fields.
// Targets outside the source bounding box raise an interpolation error.
FieldSeries resample_series(const FieldSeries& series, const Mesh& source, const Mesh& target);

}  // namespace qc
