#include "qckit/kernel.hpp"

#include <cmath>
#include <random>

namespace qc {

double bump_radial(double r, double alpha) {
    if (!(alpha > 0.0)) throw ContractError("bump radius must be positive");
    if (!(r < alpha)) return 0.0;
    const double q = r / alpha;
    const double q4 = q * q * q * q;
    const double denom = 1.0 - q4;
    const double expo = 1.0 - 1.0 / denom;
    return expo < -745.0 ? 0.0 : std::exp(expo);
}

double bump(std::span<const double> z, double alpha) {
    double s = 0.0;
    for (double v : z) s += v * v;
    return bump_radial(std::sqrt(s), alpha);
}

std::vector<int> MlpSpec::layer_dims() const {
    std::vector<int> dims;
    dims.push_back(input_dim);
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(output_dim());
    return dims;
}

std::int64_t MlpSpec::parameter_count() const {
    const auto dims = layer_dims();
    std::int64_t n = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l)
        n += std::int64_t(dims[l]) * dims[l + 1] + dims[l + 1];
    return n;
}

KernelMLP KernelMLP::create(MlpSpec spec, std::uint64_t seed) {
    if (spec.input_dim < 1 || spec.out_rows < 1 || spec.out_cols < 1)
        throw ConfigError("kernel network dims must be positive");
    for (int w : spec.hidden)
        if (w < 1) throw ConfigError("kernel network hidden width must be positive");

    KernelMLP net;
    net.spec_ = std::move(spec);
    net.theta_.resize(net.spec_.parameter_count());

    std::mt19937_64 rng(seed);
    const auto dims = net.spec_.layer_dims();
    std::size_t at = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const double bound = 1.0 / std::sqrt(double(dims[l]));
        std::uniform_real_distribution<double> u(-bound, bound);
        const std::size_t count = std::size_t(dims[l]) * dims[l + 1] + dims[l + 1];
        for (std::size_t k = 0; k < count; ++k) net.theta_[at++] = u(rng);
    }
    return net;
}

KernelMLP KernelMLP::with_theta(MlpSpec spec, std::vector<double> theta) {
    if (static_cast<std::int64_t>(theta.size()) != spec.parameter_count())
        throw ShapeError("kernel parameter vector has wrong length");
    KernelMLP net;
    net.spec_ = std::move(spec);
    net.theta_ = std::move(theta);
    return net;
}

void KernelMLP::eval(std::span<const double> z, std::span<double> out) const {
    if (static_cast<int>(z.size()) != spec_.input_dim) throw ShapeError("kernel input dim mismatch");
    if (static_cast<int>(out.size()) != spec_.output_dim()) throw ShapeError("kernel output dim mismatch");

    const auto dims = spec_.layer_dims();
    std::vector<double> cur(z.begin(), z.end());
    std::vector<double> next;
    std::size_t at = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const int in = dims[l], nout = dims[l + 1];
        next.assign(nout, 0.0);
        const double* w = theta_.data() + at;
        const double* b = w + std::size_t(in) * nout;
        for (int i = 0; i < in; ++i)
            for (int o = 0; o < nout; ++o) next[o] += cur[i] * w[std::size_t(i) * nout + o];
        for (int o = 0; o < nout; ++o) next[o] += b[o];
        if (l + 2 < dims.size())
            for (double& v : next) v = std::tanh(v);
        cur.swap(next);
        at += std::size_t(in) * nout + nout;
    }
    std::copy(cur.begin(), cur.end(), out.begin());
}

void filter_eval(const KernelMLP& net, double alpha, std::span<const double> z,
                 std::span<double> out, OpCounter* counter) {
    const double b = bump(z, alpha);
    if (b == 0.0) {
        std::fill(out.begin(), out.end(), 0.0);
        return;
    }
    net.eval(z, out);
    for (double& v : out) v *= b;
    if (counter) counter->kernel_evals += 1;
}

}  // namespace qc
