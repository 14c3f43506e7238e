#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qckit/common.hpp"

namespace qc {

// Compactly supported C^inf bump on the open ball of radius alpha:
//   exp(1 - 1/(1 - (||z||/alpha)^4))  for ||z|| < alpha, exactly 0 otherwise.
double bump_radial(double r, double alpha);
double bump(std::span<const double> z, double alpha);

struct MlpSpec {
    int input_dim = 0;
    std::vector<int> hidden;  // widths of the tanh hidden layers
    int out_rows = 0;         // output channels
    int out_cols = 0;         // input channels

    int output_dim() const { return out_rows * out_cols; }
    std::vector<int> layer_dims() const;  // [in, hidden..., out_rows*out_cols]
    std::int64_t parameter_count() const;
};

// Dense MLP R^D -> R^(out_rows x out_cols) with tanh hidden activations and a
// linear output layer. One network per layer produces the whole channel-mixing
// matrix. Parameters are stored flat, per layer: weights (in x out, row-major)
// then biases (out). Initialization is uniform in +-1/sqrt(fan_in), seeded.
class KernelMLP {
public:
    static KernelMLP create(MlpSpec spec, std::uint64_t seed);
    static KernelMLP with_theta(MlpSpec spec, std::vector<double> theta);

    const MlpSpec& spec() const { return spec_; }
    std::int64_t parameter_count() const { return static_cast<std::int64_t>(theta_.size()); }
    const std::vector<double>& theta() const { return theta_; }
    std::vector<double>& theta() { return theta_; }

    // Single-point forward; out must hold out_rows*out_cols values (row-major).
    void eval(std::span<const double> z, std::span<double> out) const;

private:
    MlpSpec spec_;
    std::vector<double> theta_;
};

// Full filter G(z) = bump(z) * H(z). Outside the support it is exactly the
// zero matrix and the network is not evaluated (the kernel counter, when
// given, is only bumped on real evaluations).
void filter_eval(const KernelMLP& net, double alpha, std::span<const double> z,
                 std::span<double> out, OpCounter* counter = nullptr);

}  // namespace qc
