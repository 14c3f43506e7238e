#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "qckit/metrics.hpp"
#include "qckit/pod.hpp"
#include "test_helpers.hpp"

using namespace qc;

namespace {

// Independent dense statement of the loss pieces, written against the
// documented formulas rather than the tape graph.
double hand_hs_sq(const Tensor& r, const Tensor& x) {
    double acc = 0.0;
    for (std::size_t k = 0; k < r.values.size(); ++k) {
        const double d = r.values[k] - x.values[k];
        acc += d * d;
    }
    return acc;
}

std::vector<double> hand_axis_derivative(const std::vector<double>& u, int side, int dim,
                                         int axis, double h) {
    std::int64_t total = 1;
    for (int d = 0; d < dim; ++d) total *= side;
    std::int64_t stride = 1;
    for (int d = dim - 2; d >= axis; --d) stride *= side;

    std::vector<double> out(total);
    std::vector<int> digits(dim, 0);
    for (std::int64_t p = 0; p < total; ++p) {
        const int k = digits[axis];
        if (k == 0)
            out[p] = (-3.0 * u[p] + 4.0 * u[p + stride] - u[p + 2 * stride]) / (2.0 * h);
        else if (k == side - 1)
            out[p] = (3.0 * u[p] - 4.0 * u[p - stride] + u[p - 2 * stride]) / (2.0 * h);
        else
            out[p] = (u[p + stride] - u[p - stride]) / (2.0 * h);
        for (int d = dim - 1; d >= 0; --d) {
            if (++digits[d] < side) break;
            digits[d] = 0;
        }
    }
    return out;
}

double hand_penalty(const Tensor& r, const Tensor& x, const Mesh& grid) {
    const int side = grid.grid()->points_per_dim;
    const double h = grid.grid()->spacing();
    const int dim = grid.dim();
    const std::int64_t n = grid.size();
    const std::int64_t channels = r.shape[0];
    double acc = 0.0;
    for (std::int64_t c = 0; c < channels; ++c) {
        std::vector<double> rc(r.values.begin() + c * n, r.values.begin() + (c + 1) * n);
        std::vector<double> xc(x.values.begin() + c * n, x.values.begin() + (c + 1) * n);
        for (int axis = 0; axis < dim; ++axis) {
            const auto dr = hand_axis_derivative(rc, side, dim, axis, h);
            const auto dx = hand_axis_derivative(xc, side, dim, axis, h);
            for (std::int64_t p = 0; p < n; ++p) {
                const double d = dr[p] - dx[p];
                acc += d * d;
            }
        }
    }
    return acc / (double(dim) * double(channels) * double(n));
}

FieldSeries random_series(std::int64_t t, int c, std::int64_t n, std::uint64_t seed) {
    FieldSeries s = FieldSeries::zeros(t, c, n);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto& v : s.values) v = u(rng);
    return s;
}

}  // namespace

TEST_CASE("squared mismatch and gradient penalty match a dense restatement") {
    const Mesh grid = Mesh::uniform_grid(2, 6, 1.0);
    const Tensor r = qct::random_tensor({2, grid.size()}, 1);
    const Tensor x = qct::random_tensor({2, grid.size()}, 2);

    Tape t;
    Tape::Var vr = t.constant(r);
    Tape::Var vx = t.constant(x);
    const double hs = t.value(hs_sq_on_tape(t, vr, vx)).values[0];
    const double pen = t.value(gradient_penalty_on_tape(t, vr, vx, grid)).values[0];
    CHECK(hs == doctest::Approx(hand_hs_sq(r, x)).epsilon(1e-12));
    CHECK(pen == doctest::Approx(hand_penalty(r, x, grid)).epsilon(1e-10));

    const double lambda = 0.37;
    const double loss = t.value(recon_loss_on_tape(t, vr, vx, grid, lambda)).values[0];
    CHECK(loss == doctest::Approx(hand_hs_sq(r, x) + lambda * hand_penalty(r, x, grid))
                      .epsilon(1e-10));
    CHECK(recon_loss_value(r, x, grid, lambda) == doctest::Approx(loss).epsilon(1e-14));

    // identical fields: both pieces vanish exactly
    CHECK(recon_loss_value(r, r, grid, lambda) == 0.0);
}

TEST_CASE("penalty derivative stencils lose no boundary points in 1D") {
    // linear field: first derivative is exact everywhere including one-sided
    // boundary stencils, so recon = truth + constant-slope error shows up only
    // through the slope difference
    const Mesh grid = Mesh::uniform_grid(1, 9, 2.0);
    const double h = grid.grid()->spacing();
    Tensor x = Tensor::zeros({1, grid.size()});
    Tensor r = Tensor::zeros({1, grid.size()});
    for (std::int64_t i = 0; i < grid.size(); ++i) {
        x.values[i] = 3.0 * grid.point(i)[0] + 1.0;
        r.values[i] = 5.0 * grid.point(i)[0] - 2.0;
    }
    Tape t;
    const double pen =
        t.value(gradient_penalty_on_tape(t, t.constant(r), t.constant(x), grid)).values[0];
    // derivative mismatch is exactly 2 at every point; mean of squares = 4
    CHECK(pen == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(h > 0.0);
}

TEST_CASE("loss rejects a gradient penalty on scattered meshes") {
    const Mesh sc = Mesh::nonuniform(30, [](double, double) { return 1.0; }, 3);
    const Tensor r = qct::random_tensor({1, sc.size()}, 4);
    Tape t;
    CHECK_THROWS_AS(recon_loss_on_tape(t, t.constant(r), t.constant(r), sc, 0.1), ConfigError);
    const double ok = t.value(recon_loss_on_tape(t, t.constant(r), t.constant(r), sc, 0.0)).values[0];
    CHECK(ok == 0.0);
}

TEST_CASE("series error metrics follow their per-sample definitions") {
    FieldSeries truth = FieldSeries::zeros(2, 1, 3);
    truth.values = {3.0, 4.0, 0.0, 0.0, 5.0, 12.0};  // norms 5 and 13
    FieldSeries recon = truth;
    recon.values[0] += 1.0;   // diff norm 1 on sample 0
    recon.values[4] -= 2.0;   // diff norm 2 on sample 1
    CHECK(relative_error(truth, recon) ==
          doctest::Approx(0.5 * (1.0 / 5.0 + 2.0 / 13.0)).epsilon(1e-15));
    CHECK(max_error(truth, recon) == doctest::Approx(1.0 / 5.0).epsilon(1e-15));

    FieldSeries zero = FieldSeries::zeros(2, 1, 3);
    CHECK_THROWS_AS(relative_error(zero, recon), MetricError);
    CHECK_THROWS_AS(max_error(zero, recon), MetricError);
    FieldSeries other = FieldSeries::zeros(2, 2, 3);
    CHECK_THROWS_AS(relative_error(truth, other), ShapeError);
}

TEST_CASE("dataset splits are deterministic, disjoint, and ceil-sized") {
    const auto [train, test] = split_dataset(10, 0.8, 123);
    CHECK(train.size() == 8);
    CHECK(test.size() == 2);
    const auto [train2, test2] = split_dataset(10, 0.8, 123);
    CHECK(train == train2);
    CHECK(test == test2);
    const auto [train3, test3] = split_dataset(10, 0.8, 124);
    CHECK(train != train3);

    std::vector<bool> seen(10, false);
    for (auto i : train) seen[std::size_t(i)] = true;
    for (auto i : test) {
        CHECK(!seen[std::size_t(i)]);
        seen[std::size_t(i)] = true;
    }
    for (bool b : seen) CHECK(b);
    CHECK(std::is_sorted(train.begin(), train.end()));
    CHECK(std::is_sorted(test.begin(), test.end()));

    // ceil: 7 * 0.8 = 5.6 -> 6 train samples
    const auto [t7, s7] = split_dataset(7, 0.8, 0);
    CHECK(t7.size() == 6);
    CHECK(s7.size() == 1);

    CHECK_THROWS_AS(split_dataset(1, 0.8, 0), ConfigError);
    CHECK_THROWS_AS(split_dataset(10, 0.0, 0), ConfigError);
    CHECK_THROWS_AS(split_dataset(10, 1.0, 0), ConfigError);
}

TEST_CASE("compression ratio is field size over latent size") {
    CHECK(compression_ratio(1, 1024, 16) == doctest::Approx(64.0));
    CHECK(compression_ratio(2, 900, 25) == doctest::Approx(72.0));
    CHECK_THROWS_AS(compression_ratio(1, 10, 0), ConfigError);
}

TEST_CASE("low-rank data is reproduced exactly at its own rank") {
    const std::int64_t n = 40;
    const int true_rank = 3;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<std::vector<double>> modes(true_rank, std::vector<double>(n));
    for (auto& m : modes)
        for (auto& v : m) v = u(rng);

    FieldSeries s = FieldSeries::zeros(12, 1, n);
    for (std::int64_t t = 0; t < 12; ++t)
        for (int k = 0; k < true_rank; ++k) {
            const double coef = std::sin(0.7 * double(t) * (k + 1)) + 0.1 * k;
            for (std::int64_t i = 0; i < n; ++i) s.sample_data(t)[i] += coef * modes[k][i];
        }

    const PodBasis basis = pod_baseline(s, true_rank);
    CHECK(pod_relative_error(basis, s) <= 1e-8);
    double energy = 0.0;
    for (double v : s.values) energy += v * v;
    CHECK(pod_projection_residual_sq(basis, s) <= 1e-10 * energy);
    CHECK(basis.singular_values[3] / basis.singular_values[0] <= 1e-12);
}

TEST_CASE("projection residual equals the tail singular energy") {
    const FieldSeries s = random_series(12, 1, 30, 99);
    const PodBasis full = pod_baseline(s, 12);
    for (int rank : {1, 3, 8, 12}) {
        const PodBasis b = pod_baseline(s, rank);
        double tail = 0.0;
        for (std::size_t k = std::size_t(rank); k < full.singular_values.size(); ++k)
            tail += full.singular_values[k] * full.singular_values[k];
        const double resid = pod_projection_residual_sq(b, s);
        const double denom = std::max(1.0, tail);
        CHECK(std::fabs(resid - tail) / denom <= 1e-10);
    }
}

TEST_CASE("reconstruction error decreases with rank and basis stays orthonormal") {
    const FieldSeries s = random_series(10, 2, 20, 5);
    double prev = 2.0;
    for (int rank : {1, 2, 4, 6, 10}) {
        const PodBasis b = pod_baseline(s, rank);
        const double err = pod_relative_error(b, s);
        CHECK(err <= prev + 1e-14);
        prev = err;

        for (int ci = 0; ci < rank; ++ci)
            for (int cj = ci; cj < rank; ++cj) {
                double dot = 0.0;
                for (std::int64_t r = 0; r < b.rows; ++r)
                    dot += b.basis[std::size_t(ci) * b.rows + r] *
                           b.basis[std::size_t(cj) * b.rows + r];
                CHECK(std::fabs(dot - (ci == cj ? 1.0 : 0.0)) <= 1e-12);
            }
    }
    // full rank reproduces the data
    const PodBasis full = pod_baseline(s, 10);
    CHECK(pod_relative_error(full, s) <= 1e-10);

    // projection is idempotent
    const PodBasis b3 = pod_baseline(s, 3);
    const Tensor once = pod_reconstruct(b3, s.sample(0));
    const Tensor twice = pod_reconstruct(b3, once);
    CHECK(qct::max_abs_diff(once.values, twice.values) <= 1e-12);

    CHECK_THROWS_AS(pod_baseline(s, 0), ConfigError);
    CHECK_THROWS_AS(pod_baseline(s, 11), ConfigError);
}
