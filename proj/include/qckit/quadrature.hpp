#pragma once

#include <cstdint>
#include <vector>

#include "qckit/mesh.hpp"

namespace qc {

double softplus(double x);
double softplus_inverse(double y);

// Quadrature weights over an input mesh. Two modes:
//  - static: rho fixed (composite-trapezoid weights on grids, or an explicit
//    positive vector);
//  - learned: rho_i = softplus(raw_i), so positivity holds by construction
//    and the optimizer updates raw.
class QuadratureWeights {
public:
    QuadratureWeights() = default;  // empty; assign from a factory before use

    static QuadratureWeights static_weights(std::vector<double> rho);
    static QuadratureWeights newton_cotes(const Mesh& mesh);
    static QuadratureWeights learned(const Mesh& mesh, double fallback_volume);

    bool learned_mode() const { return learned_; }
    std::int64_t size() const { return static_cast<std::int64_t>(values_.size()); }

    // Effective weights: softplus(raw) in learned mode, the stored vector
    // otherwise.
    std::vector<double> rho() const;

    const std::vector<double>& raw() const;
    void set_raw(std::vector<double> raw);

    const std::vector<double>& static_rho() const;

private:
    bool learned_ = false;
    std::vector<double> values_;  // raw in learned mode, rho otherwise
};

// Node weights of the composite two-point rule on a uniform grid, as a flat
// vector in the grid's lexicographic point order.
std::vector<double> newton_cotes_weights(const Mesh& mesh);

}  // namespace qc
