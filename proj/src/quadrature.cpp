#include "qckit/quadrature.hpp"

#include <cmath>
#include <string>

namespace qc {

double softplus(double x) {
    if (x > 30.0) return x;
    if (x < -30.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

double softplus_inverse(double y) {
    if (!(y > 0.0)) throw ContractError("softplus_inverse needs a positive argument");
    if (y > 30.0) return y;
    return std::log(std::expm1(y));
}

std::vector<double> newton_cotes_weights(const Mesh& mesh) {
    if (mesh.kind() != MeshKind::UniformGrid || !mesh.grid())
        throw UnsupportedMeshError("composite rule weights need a uniform grid");
    const GridSpec g = *mesh.grid();
    const int n = g.points_per_dim;
    const double h = g.spacing();
    const int dim = mesh.dim();

    // Tensor product of the 1D composite trapezoid weights {h/2, h, ..., h, h/2}.
    std::vector<double> axis(n, h);
    axis.front() = h / 2.0;
    axis.back() = h / 2.0;

    std::int64_t total = 1;
    for (int d = 0; d < dim; ++d) total *= n;

    std::vector<double> w(total, 1.0);
    std::vector<int> idx(dim, 0);
    for (std::int64_t p = 0; p < total; ++p) {
        for (int d = 0; d < dim; ++d) w[p] *= axis[idx[d]];
        for (int d = dim - 1; d >= 0; --d) {
            if (++idx[d] < n) break;
            idx[d] = 0;
        }
    }
    return w;
}

QuadratureWeights QuadratureWeights::static_weights(std::vector<double> rho) {
    for (double v : rho)
        if (!(v > 0.0)) throw ContractError("static quadrature weights must be positive");
    QuadratureWeights q;
    q.learned_ = false;
    q.values_ = std::move(rho);
    return q;
}

QuadratureWeights QuadratureWeights::newton_cotes(const Mesh& mesh) {
    return static_weights(newton_cotes_weights(mesh));
}

QuadratureWeights QuadratureWeights::learned(const Mesh& mesh, double fallback_volume) {
    std::vector<double> target;
    if (mesh.kind() == MeshKind::UniformGrid) {
        target = newton_cotes_weights(mesh);
    } else {
        if (!(fallback_volume > 0.0))
            throw ConfigError("learned weights on a scattered mesh need a positive fallback volume");
        target.assign(mesh.size(), fallback_volume / double(mesh.size()));
    }
    QuadratureWeights q;
    q.learned_ = true;
    q.values_.resize(target.size());
    for (std::size_t i = 0; i < target.size(); ++i) q.values_[i] = softplus_inverse(target[i]);
    return q;
}

std::vector<double> QuadratureWeights::rho() const {
    if (!learned_) return values_;
    std::vector<double> out(values_.size());
    for (std::size_t i = 0; i < values_.size(); ++i) out[i] = softplus(values_[i]);
    return out;
}

const std::vector<double>& QuadratureWeights::raw() const {
    if (!learned_) throw ContractError("raw parameters exist only in learned mode");
    return values_;
}

void QuadratureWeights::set_raw(std::vector<double> raw) {
    if (!learned_) throw ContractError("raw parameters exist only in learned mode");
    if (raw.size() != values_.size()) throw ShapeError("raw parameter size mismatch");
    values_ = std::move(raw);
}

const std::vector<double>& QuadratureWeights::static_rho() const {
    if (learned_) throw ContractError("static rho requested in learned mode");
    return values_;
}

}  // namespace qc
