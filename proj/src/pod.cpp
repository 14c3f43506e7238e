#include "qckit/pod.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "qckit/metrics.hpp"

namespace qc {

namespace {

Eigen::MatrixXd snapshot_matrix(const FieldSeries& data) {
    const std::int64_t rows = std::int64_t(data.channels) * data.points;
    Eigen::MatrixXd a(rows, data.samples);
    for (std::int64_t t = 0; t < data.samples; ++t)
        for (std::int64_t k = 0; k < rows; ++k) a(k, t) = data.sample_data(t)[k];
    return a;
}

}  // namespace

PodBasis pod_baseline(const FieldSeries& data, int rank) {
    const std::int64_t rows = std::int64_t(data.channels) * data.points;
    const std::int64_t max_rank = std::min<std::int64_t>(rows, data.samples);
    if (rank < 1 || rank > max_rank)
        throw ConfigError("basis rank must lie in [1, min(channels*points, samples)]");

    const Eigen::MatrixXd a = snapshot_matrix(data);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU);

    PodBasis b;
    b.rows = rows;
    b.rank = rank;
    b.basis.resize(static_cast<std::size_t>(rows) * rank);
    for (int c = 0; c < rank; ++c)
        for (std::int64_t r = 0; r < rows; ++r) b.basis[std::size_t(c) * rows + r] = svd.matrixU()(r, c);
    b.singular_values.assign(svd.singularValues().data(),
                             svd.singularValues().data() + svd.singularValues().size());
    return b;
}

Tensor pod_reconstruct(const PodBasis& basis, const Tensor& sample) {
    if (sample.numel() != basis.rows) throw ShapeError("sample size does not match the basis");
    Eigen::Map<const Eigen::MatrixXd> u(basis.basis.data(), basis.rows, basis.rank);
    Eigen::Map<const Eigen::VectorXd> x(sample.values.data(), basis.rows);
    Eigen::VectorXd rec = u * (u.transpose() * x);
    Tensor out = sample;
    for (std::int64_t k = 0; k < basis.rows; ++k) out.values[k] = rec(k);
    return out;
}

FieldSeries pod_reconstruct_series(const PodBasis& basis, const FieldSeries& data) {
    FieldSeries out = data;
    for (std::int64_t t = 0; t < data.samples; ++t) {
        const Tensor rec = pod_reconstruct(basis, data.sample(t));
        out.set_sample(t, rec);
    }
    return out;
}

double pod_relative_error(const PodBasis& basis, const FieldSeries& data) {
    return relative_error(data, pod_reconstruct_series(basis, data));
}

double pod_projection_residual_sq(const PodBasis& basis, const FieldSeries& data) {
    double acc = 0.0;
    for (std::int64_t t = 0; t < data.samples; ++t) {
        const Tensor x = data.sample(t);
        const Tensor rec = pod_reconstruct(basis, x);
        for (std::size_t k = 0; k < x.values.size(); ++k) {
            const double d = x.values[k] - rec.values[k];
            acc += d * d;
        }
    }
    return acc;
}

}  // namespace qc
