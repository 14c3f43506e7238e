#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "qckit/mesh.hpp"

namespace qc {

struct IndexMapStats {
    double mean_neighbors = 0.0;
    std::uint32_t max_neighbors = 0;
    std::int64_t empty_outputs = 0;
};

// Sparse support pattern: for each output point j, the input indices i with
// ||y_j - x_i||_2 strictly below the support radius alpha. Rows are sorted
// ascending. Stored CSR-style.
class IndexMap {
public:
    IndexMap(double alpha, std::vector<std::uint64_t> offsets, std::vector<std::uint32_t> indices);

    double alpha() const { return alpha_; }
    std::int64_t output_count() const { return static_cast<std::int64_t>(offsets_.size()) - 1; }
    std::int64_t total_pairs() const { return static_cast<std::int64_t>(indices_.size()); }

    std::span<const std::uint32_t> neighbors(std::int64_t j) const {
        return {indices_.data() + offsets_[j], indices_.data() + offsets_[j + 1]};
    }

    IndexMapStats stats() const;

    void save(const std::filesystem::path& path) const;
    static IndexMap load(const std::filesystem::path& path);

private:
    double alpha_ = 0.0;
    std::vector<std::uint64_t> offsets_;
    std::vector<std::uint32_t> indices_;
};

enum class NeighborSearch { BruteForce, GridBuckets };

// `warn_empty` controls the stderr note about output points with no neighbor;
// radius probes during alpha selection run silently.
IndexMap build_index_map(const Mesh& input, const Mesh& output, double alpha,
                         OpCounter* counter = nullptr,
                         NeighborSearch method = NeighborSearch::GridBuckets,
                         bool warn_empty = true);

// Bisects alpha until the mean neighbor count over output points lands within
// +-20% of target; throws ConfigError when no radius reaches the band.
double choose_alpha(const Mesh& input, const Mesh& output, int target_neighbors);

}  // namespace qc
