#include "qckit/optim.hpp"

#include <cmath>

namespace qc {

void adam_step(AdamState& state, const AdamConfig& cfg, std::span<double> params,
               std::span<const double> grads) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw ShapeError("adam: parameter/gradient/state sizes differ");
    for (double g : grads)
        if (std::isnan(g)) throw TrainError("NaN gradient in optimizer step");

    state.t += 1;
    const double c1 = 1.0 - std::pow(cfg.beta1, double(state.t));
    const double c2 = 1.0 - std::pow(cfg.beta2, double(state.t));
    for (std::size_t k = 0; k < params.size(); ++k) {
        const double g = grads[k];
        state.m[k] = cfg.beta1 * state.m[k] + (1.0 - cfg.beta1) * g;
        state.v[k] = cfg.beta2 * state.v[k] + (1.0 - cfg.beta2) * g * g;
        const double mhat = state.m[k] / c1;
        const double vhat = state.v[k] / c2;
        params[k] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
}

}  // namespace qc
