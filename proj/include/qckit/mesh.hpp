#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "qckit/common.hpp"

namespace qc {

enum class MeshKind { UniformGrid, Scattered };

struct GridSpec {
    int points_per_dim = 0;
    double extent = 0.0;

    double spacing() const { return extent / (points_per_dim - 1); }
};

// Positive weighting over the unit square used by the non-uniform sampler.
using DensityFn = std::function<double(double, double)>;

// Fixed point cloud. Immutable after construction; coordinates are stored
// point-major (point i occupies coords[i*D .. i*D+D)). Uniform grids use
// lexicographic point order over the integer lattice.
class Mesh {
public:
    Mesh() = default;  // empty; assign from a factory before use

    static Mesh uniform_grid(int dim, int points_per_dim, double extent);
    static Mesh nonuniform(std::int64_t count, const DensityFn& density, std::uint64_t seed);
    static Mesh from_points(int dim, std::vector<double> coords);

    int dim() const { return dim_; }
    std::int64_t size() const { return static_cast<std::int64_t>(coords_.size()) / dim_; }
    const double* point(std::int64_t i) const { return coords_.data() + i * dim_; }
    std::span<const double> coords() const { return coords_; }

    MeshKind kind() const { return kind_; }
    const std::optional<GridSpec>& grid() const { return grid_; }

    Mesh random_downsample(std::int64_t count, std::uint64_t seed) const;

    // Bracket helpers for support-radius selection.
    double bounding_diameter() const;
    double min_positive_gap(const Mesh& other) const;

    void save(const std::filesystem::path& path) const;
    static Mesh load(const std::filesystem::path& path);

private:

    int dim_ = 0;
    std::vector<double> coords_;
    MeshKind kind_ = MeshKind::Scattered;
    std::optional<GridSpec> grid_;
};

double point_distance(const double* a, const double* b, int dim);

}  // namespace qc
