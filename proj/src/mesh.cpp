#include "qckit/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "qckit/binary_io.hpp"

namespace qc {

double point_distance(const double* a, const double* b, int dim) {
    double s = 0.0;
    for (int d = 0; d < dim; ++d) {
        const double z = a[d] - b[d];
        s += z * z;
    }
    return std::sqrt(s);
}

Mesh Mesh::uniform_grid(int dim, int points_per_dim, double extent) {
    if (dim < 1 || dim > 3) throw ConfigError("grid dim must be 1..3, got " + std::to_string(dim));
    if (points_per_dim < 2) throw ConfigError("grid needs at least 2 points per dim");
    if (!(extent > 0.0)) throw ConfigError("grid extent must be positive");

    const int n = points_per_dim;
    const double h = extent / (n - 1);
    std::int64_t total = 1;
    for (int d = 0; d < dim; ++d) total *= n;

    Mesh m;
    m.dim_ = dim;
    m.coords_.resize(static_cast<std::size_t>(total) * dim);
    std::vector<int> idx(dim, 0);
    for (std::int64_t p = 0; p < total; ++p) {
        for (int d = 0; d < dim; ++d) m.coords_[p * dim + d] = idx[d] * h;
        for (int d = dim - 1; d >= 0; --d) {
            if (++idx[d] < n) break;
            idx[d] = 0;
        }
    }
    m.kind_ = MeshKind::UniformGrid;
    m.grid_ = GridSpec{n, extent};
    return m;
}

Mesh Mesh::nonuniform(std::int64_t count, const DensityFn& density, std::uint64_t seed) {
    if (count < 1) throw ConfigError("mesh point count must be positive");
    if (!density) throw GenerationError("density function is empty");

    // Majorize the density on a probe lattice; a zero (or negative) profile
    // over the whole square cannot be sampled.
    double bound = 0.0;
    const int probes = 101;
    for (int i = 0; i < probes; ++i)
        for (int j = 0; j < probes; ++j) {
            const double v = density(i / double(probes - 1), j / double(probes - 1));
            bound = std::max(bound, v);
        }
    if (!(bound > 0.0)) throw GenerationError("density is non-positive over the unit square");
    bound *= 1.2;

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    Mesh m;
    m.dim_ = 2;
    m.coords_.reserve(static_cast<std::size_t>(count) * 2);
    std::int64_t attempts = 0;
    const std::int64_t max_attempts = count * 100000;
    while (static_cast<std::int64_t>(m.coords_.size()) < count * 2) {
        if (++attempts > max_attempts)
            throw GenerationError("rejection sampling stalled; density too concentrated");
        const double x = unit(rng);
        const double y = unit(rng);
        const double u = unit(rng) * bound;
        if (u < density(x, y)) {
            m.coords_.push_back(x);
            m.coords_.push_back(y);
        }
    }
    m.kind_ = MeshKind::Scattered;
    return m;
}

namespace {

// Raw coordinates carry no kind tag; recover the grid when they are
// bit-exactly a lexicographic lattice (they are, for grids we generated,
// because i*h reproduces the same doubles). Serves both from_points and
// load.
std::optional<GridSpec> detect_grid(int dim, const std::vector<double>& coords) {
    const std::int64_t n_points = static_cast<std::int64_t>(coords.size()) / dim;
    const auto pow_dim = [dim](std::int64_t s) {
        std::int64_t t = 1;
        for (int d = 0; d < dim; ++d) t *= s;
        return t;
    };
    const std::int64_t guess = std::llround(std::pow(double(n_points), 1.0 / dim));
    std::int64_t side = -1;
    for (std::int64_t s = std::max<std::int64_t>(2, guess - 1); s <= guess + 1; ++s)
        if (pow_dim(s) == n_points) { side = s; break; }
    if (side < 2) return std::nullopt;

    double extent = 0.0;
    for (std::size_t k = 0; k < coords.size(); ++k) extent = std::max(extent, coords[k]);
    if (!(extent > 0.0)) return std::nullopt;
    const double h = extent / double(side - 1);

    std::vector<int> idx(dim, 0);
    for (std::int64_t p = 0; p < n_points; ++p) {
        for (int d = 0; d < dim; ++d)
            if (coords[p * dim + d] != idx[d] * h) return std::nullopt;
        for (int d = dim - 1; d >= 0; --d) {
            if (++idx[d] < side) break;
            idx[d] = 0;
        }
    }
    return GridSpec{static_cast<int>(side), extent};
}

}  // namespace

Mesh Mesh::from_points(int dim, std::vector<double> coords) {
    if (dim < 1 || dim > 3) throw ConfigError("mesh dim must be 1..3");
    if (coords.empty() || coords.size() % dim != 0)
        throw ShapeError("coordinate array size is not a multiple of dim");
    Mesh m;
    m.dim_ = dim;
    m.coords_ = std::move(coords);
    m.kind_ = MeshKind::Scattered;
    if (const auto g = detect_grid(dim, m.coords_)) {
        m.kind_ = MeshKind::UniformGrid;
        m.grid_ = *g;
    }
    return m;
}

Mesh Mesh::random_downsample(std::int64_t count, std::uint64_t seed) const {
    const std::int64_t n = size();
    if (count < 1 || count > n)
        throw ConfigError("downsample count " + std::to_string(count) + " out of range for mesh of " +
                          std::to_string(n));
    std::vector<std::int64_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(seed);
    for (std::int64_t i = 0; i < count; ++i) {
        std::uniform_int_distribution<std::int64_t> pick(i, n - 1);
        std::swap(perm[i], perm[pick(rng)]);
    }
    std::vector<std::int64_t> keep(perm.begin(), perm.begin() + count);
    std::sort(keep.begin(), keep.end());

    std::vector<double> pts(static_cast<std::size_t>(count) * dim_);
    for (std::int64_t i = 0; i < count; ++i)
        for (int d = 0; d < dim_; ++d) pts[i * dim_ + d] = coords_[keep[i] * dim_ + d];
    return from_points(dim_, std::move(pts));
}

double Mesh::bounding_diameter() const {
    double s = 0.0;
    for (int d = 0; d < dim_; ++d) {
        double lo = coords_[d], hi = coords_[d];
        for (std::int64_t i = 1; i < size(); ++i) {
            lo = std::min(lo, coords_[i * dim_ + d]);
            hi = std::max(hi, coords_[i * dim_ + d]);
        }
        s += (hi - lo) * (hi - lo);
    }
    return std::sqrt(s);
}

double Mesh::min_positive_gap(const Mesh& other) const {
    if (dim_ != other.dim_) throw ShapeError("mesh dims differ");
    double best = std::numeric_limits<double>::infinity();
    for (std::int64_t j = 0; j < other.size(); ++j)
        for (std::int64_t i = 0; i < size(); ++i) {
            const double r = point_distance(point(i), other.point(j), dim_);
            if (r > 0.0 && r < best) best = r;
        }
    if (!std::isfinite(best)) throw ContractError("all points coincide; no positive gap");
    return best;
}

void Mesh::save(const std::filesystem::path& path) const {
    io::Writer w(path);
    w.magic("QCMESH01");
    w.u32(static_cast<std::uint32_t>(dim_));
    w.u64(static_cast<std::uint64_t>(size()));
    w.f64_array(coords_.data(), coords_.size());
    w.close();
}

Mesh Mesh::load(const std::filesystem::path& path) {
    io::Reader r(path);
    r.expect_magic("QCMESH01");
    const std::uint32_t dim = r.u32();
    if (dim < 1 || dim > 3) throw FormatError("mesh dim out of range");
    const std::uint64_t n = r.u64();
    if (n == 0) throw FormatError("mesh has no points");

    Mesh m;
    m.dim_ = static_cast<int>(dim);
    m.coords_.resize(n * dim);
    r.f64_array(m.coords_.data(), m.coords_.size());
    if (auto g = detect_grid(m.dim_, m.coords_)) {
        m.kind_ = MeshKind::UniformGrid;
        m.grid_ = *g;
    }
    return m;
}

}  // namespace qc
