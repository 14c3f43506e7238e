#pragma once

#include <cstdint>
#include <vector>

#include "qckit/series.hpp"

namespace qc {

// Rank-r orthonormal basis of the snapshot matrix (columns are flattened
// samples), straight from its thin SVD.
struct PodBasis {
    std::int64_t rows = 0;  // channels * points
    int rank = 0;
    std::vector<double> basis;            // rows x rank, column-major
    std::vector<double> singular_values;  // all min(rows, T) values, descending
};

PodBasis pod_baseline(const FieldSeries& data, int rank);

// Orthogonal projection onto the basis span.
Tensor pod_reconstruct(const PodBasis& basis, const Tensor& sample);
FieldSeries pod_reconstruct_series(const PodBasis& basis, const FieldSeries& data);

// Mean relative reconstruction error of the projection over a series.
double pod_relative_error(const PodBasis& basis, const FieldSeries& data);

// Sum of squared projection residuals over the snapshot columns; equals the
// tail singular energy sum_{k>rank} sigma_k^2.
double pod_projection_residual_sq(const PodBasis& basis, const FieldSeries& data);

}  // namespace qc
