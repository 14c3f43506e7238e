#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qckit/common.hpp"

namespace qc {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Bias-corrected Adam state for one flat parameter vector.
struct AdamState {
    std::int64_t t = 0;
    std::vector<double> m;
    std::vector<double> v;

    explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

void adam_step(AdamState& state, const AdamConfig& cfg, std::span<double> params,
               std::span<const double> grads);

}  // namespace qc
