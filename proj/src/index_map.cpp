#include "qckit/index_map.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

#include "qckit/binary_io.hpp"

namespace qc {

IndexMap::IndexMap(double alpha, std::vector<std::uint64_t> offsets, std::vector<std::uint32_t> indices)
    : alpha_(alpha), offsets_(std::move(offsets)), indices_(std::move(indices)) {
    if (!(alpha_ > 0.0)) throw ContractError("support radius must be positive");
    if (offsets_.empty() || offsets_.front() != 0 || offsets_.back() != indices_.size())
        throw ContractError("index map offsets are inconsistent");
}

IndexMapStats IndexMap::stats() const {
    IndexMapStats s;
    const std::int64_t n = output_count();
    for (std::int64_t j = 0; j < n; ++j) {
        const auto len = static_cast<std::uint32_t>(offsets_[j + 1] - offsets_[j]);
        s.max_neighbors = std::max(s.max_neighbors, len);
        if (len == 0) ++s.empty_outputs;
    }
    s.mean_neighbors = n > 0 ? double(total_pairs()) / double(n) : 0.0;
    return s;
}

void IndexMap::save(const std::filesystem::path& path) const {
    io::Writer w(path);
    w.magic("QCMAP001");
    w.f64(alpha_);
    w.u64(static_cast<std::uint64_t>(output_count()));
    for (std::int64_t j = 0; j < output_count(); ++j) {
        const auto row = neighbors(j);
        w.u32(static_cast<std::uint32_t>(row.size()));
        w.bytes(row.data(), row.size() * sizeof(std::uint32_t));
    }
    w.close();
}

IndexMap IndexMap::load(const std::filesystem::path& path) {
    io::Reader r(path);
    r.expect_magic("QCMAP001");
    const double alpha = r.f64();
    const std::uint64_t n_out = r.u64();
    std::vector<std::uint64_t> offsets(n_out + 1, 0);
    std::vector<std::uint32_t> indices;
    for (std::uint64_t j = 0; j < n_out; ++j) {
        const std::uint32_t len = r.u32();
        const std::size_t base = indices.size();
        indices.resize(base + len);
        r.bytes(indices.data() + base, std::size_t(len) * sizeof(std::uint32_t));
        offsets[j + 1] = indices.size();
    }
    return IndexMap(alpha, std::move(offsets), std::move(indices));
}

namespace {

struct BucketGrid {
    int dim;
    double cell;
    double origin[3];
    std::int64_t cells_per_dim[3];
    std::vector<std::vector<std::uint32_t>> buckets;

    BucketGrid(const Mesh& input, double alpha) : dim(input.dim()), cell(alpha) {
        double lo[3] = {0, 0, 0}, hi[3] = {0, 0, 0};
        for (int d = 0; d < dim; ++d) lo[d] = hi[d] = input.point(0)[d];
        for (std::int64_t i = 1; i < input.size(); ++i)
            for (int d = 0; d < dim; ++d) {
                lo[d] = std::min(lo[d], input.point(i)[d]);
                hi[d] = std::max(hi[d], input.point(i)[d]);
            }
        std::int64_t total = 1;
        for (int d = 0; d < dim; ++d) {
            origin[d] = lo[d];
            cells_per_dim[d] = std::max<std::int64_t>(1, std::int64_t((hi[d] - lo[d]) / cell) + 1);
            total *= cells_per_dim[d];
        }
        buckets.resize(total);
        for (std::int64_t i = 0; i < input.size(); ++i)
            buckets[cell_of(input.point(i))].push_back(static_cast<std::uint32_t>(i));
    }

    std::int64_t clamp_coord(double x, int d) const {
        auto c = std::int64_t((x - origin[d]) / cell);
        return std::clamp<std::int64_t>(c, 0, cells_per_dim[d] - 1);
    }

    std::int64_t cell_of(const double* p) const {
        std::int64_t id = 0;
        for (int d = 0; d < dim; ++d) id = id * cells_per_dim[d] + clamp_coord(p[d], d);
        return id;
    }

    // Visit candidate input indices near p, in deterministic cell order.
    template <typename F>
    void for_candidates(const double* p, F&& f) const {
        std::int64_t c[3] = {0, 0, 0};
        for (int d = 0; d < dim; ++d) c[d] = clamp_coord(p[d], d);
        std::int64_t lo[3], hi[3];
        for (int d = 0; d < dim; ++d) {
            lo[d] = std::max<std::int64_t>(0, c[d] - 1);
            hi[d] = std::min(cells_per_dim[d] - 1, c[d] + 1);
        }
        std::int64_t it[3];
        for (int d = 0; d < dim; ++d) it[d] = lo[d];
        while (true) {
            std::int64_t id = 0;
            for (int d = 0; d < dim; ++d) id = id * cells_per_dim[d] + it[d];
            for (std::uint32_t i : buckets[id]) f(i);
            int d = dim - 1;
            for (; d >= 0; --d) {
                if (++it[d] <= hi[d]) break;
                it[d] = lo[d];
            }
            if (d < 0) break;
        }
    }
};

}  // namespace

IndexMap build_index_map(const Mesh& input, const Mesh& output, double alpha,
                         OpCounter* counter, NeighborSearch method, bool warn_empty) {
    if (input.dim() != output.dim()) throw ShapeError("input/output mesh dims differ");
    if (!(alpha > 0.0)) throw ConfigError("support radius must be positive");
    if (input.size() > std::numeric_limits<std::uint32_t>::max())
        throw ContractError("input mesh too large for 32-bit indices");

    const int dim = input.dim();
    const std::int64_t n_in = input.size();
    const std::int64_t n_out = output.size();

    std::vector<std::uint64_t> offsets(n_out + 1, 0);
    std::vector<std::vector<std::uint32_t>> rows(n_out);
    std::uint64_t dist_evals = 0;

    if (method == NeighborSearch::BruteForce) {
        for (std::int64_t j = 0; j < n_out; ++j) {
            const double* y = output.point(j);
            auto& row = rows[j];
            for (std::int64_t i = 0; i < n_in; ++i) {
                ++dist_evals;
                if (point_distance(input.point(i), y, dim) < alpha)
                    row.push_back(static_cast<std::uint32_t>(i));
            }
        }
    } else {
        BucketGrid grid(input, alpha);
        for (std::int64_t j = 0; j < n_out; ++j) {
            const double* y = output.point(j);
            auto& row = rows[j];
            grid.for_candidates(y, [&](std::uint32_t i) {
                ++dist_evals;
                if (point_distance(input.point(i), y, dim) < alpha)
                    row.push_back(i);
            });
            std::sort(row.begin(), row.end());
        }
    }

    if (counter) counter->distance_evals += dist_evals;

    std::vector<std::uint32_t> indices;
    std::int64_t empty = 0;
    for (std::int64_t j = 0; j < n_out; ++j) {
        if (rows[j].empty()) ++empty;
        indices.insert(indices.end(), rows[j].begin(), rows[j].end());
        offsets[j + 1] = indices.size();
    }
    if (empty > 0 && warn_empty)
        std::cerr << "warning: " << empty << " of " << n_out
                  << " output points have no input point within radius " << alpha << "\n";

    return IndexMap(alpha, std::move(offsets), std::move(indices));
}

namespace {

double mean_neighbor_count(const Mesh& input, const Mesh& output, double alpha) {
    const IndexMap map =
        build_index_map(input, output, alpha, nullptr, NeighborSearch::GridBuckets, false);
    return map.stats().mean_neighbors;
}

}  // namespace

double choose_alpha(const Mesh& input, const Mesh& output, int target_neighbors) {
    if (target_neighbors < 1) throw ConfigError("target neighbor count must be positive");
    if (target_neighbors > input.size())
        throw ConfigError("target neighbor count exceeds input mesh size");

    const double band_lo = 0.8 * target_neighbors;
    const double band_hi = 1.2 * target_neighbors;
    const auto in_band = [&](double m) { return m >= band_lo && m <= band_hi; };

    double lo = input.min_positive_gap(output);
    double hi = std::max(input.bounding_diameter(), output.bounding_diameter()) * 2.0 + lo;

    double m = mean_neighbor_count(input, output, lo);
    if (in_band(m)) return lo;
    if (m > band_hi)
        throw ConfigError("target neighbor count unreachable: even the smallest radius exceeds it");
    m = mean_neighbor_count(input, output, hi);
    if (in_band(m)) return hi;
    if (m < band_lo)
        throw ConfigError("target neighbor count unreachable: every input point is already in range");

    for (int iter = 0; iter < 200 && (hi - lo) > 1e-12 * hi; ++iter) {
        const double mid = 0.5 * (lo + hi);
        m = mean_neighbor_count(input, output, mid);
        if (in_band(m)) return mid;
        (m < band_lo ? lo : hi) = mid;
    }
    throw ConfigError("no support radius reaches the requested neighbor band; "
                      "the neighbor count jumps past it");
}

}  // namespace qc
