#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>

#include "qckit/index_map.hpp"
#include "qckit/kernel.hpp"
#include "qckit/mesh.hpp"
#include "qckit/quadrature.hpp"
#include "qckit/tape.hpp"

namespace qc {

// Pair-expanded view of an index map bound to a concrete mesh pair. Offsets
// and bump values depend only on geometry, so they are computed once per
// binding and shared by every forward pass.
struct BoundMap {
    int dim = 0;
    std::int64_t n_in = 0;
    std::int64_t n_out = 0;
    std::vector<std::uint32_t> pair_in;        // input index per pair
    std::vector<std::uint32_t> pair_out;       // output index per pair
    std::vector<double> offsets;               // P * dim, y_j - x_i
    std::vector<double> bump_values;           // P
    std::vector<std::uint64_t> out_rows;       // CSR over output points
    std::vector<std::uint64_t> in_rows;        // CSR over input points
    std::vector<std::uint32_t> in_row_pairs;   // pair ids grouped by input point

    std::int64_t pair_count() const { return static_cast<std::int64_t>(pair_in.size()); }
};

struct QuadConvSettings {
    int in_channels = 1;
    int out_channels = 1;
    double alpha = 0.0;          // explicit support radius, or
    int target_neighbors = 0;    // pick alpha by neighbor-count bisection
    std::vector<int> mlp_hidden = {32, 32};
    bool learned_weights = false;
    double fallback_volume = 1.0;  // learned-weight init on scattered meshes
    bool channel_bias = false;
    std::uint64_t seed = 0;
};

// One continuous-convolution layer on a fixed mesh pair.
class QuadConvLayer {
public:
    QuadConvLayer(Mesh input, Mesh output, const QuadConvSettings& settings,
                  std::optional<IndexMap> prebuilt_map = std::nullopt,
                  OpCounter* counter = nullptr);

    const Mesh& input_mesh() const { return input_; }
    const Mesh& output_mesh() const { return output_; }
    int in_channels() const { return in_channels_; }
    int out_channels() const { return out_channels_; }
    double alpha() const { return map_->alpha(); }
    const IndexMap& map() const { return *map_; }
    const BoundMap& bound() const { return *bound_; }
    std::shared_ptr<const BoundMap> bound_ptr() const { return bound_; }
    const KernelMLP& kernel() const { return kernel_; }
    const QuadratureWeights& weights() const { return weights_; }
    bool learned_weights() const { return weights_.learned_mode(); }
    bool has_bias() const { return !bias_.empty(); }

    // parameter storage, updated in place by the optimizer
    std::vector<double>& theta() { return kernel_.theta(); }
    const std::vector<double>& theta() const { return kernel_.theta(); }
    std::vector<double>& raw_weights() { return raw_; }
    const std::vector<double>& raw_weights() const { return raw_; }
    std::vector<double>& bias() { return bias_; }
    const std::vector<double>& bias() const { return bias_; }

    std::vector<double> rho() const;

private:
    Mesh input_;
    Mesh output_;
    int in_channels_ = 0;
    int out_channels_ = 0;
    KernelMLP kernel_;
    QuadratureWeights weights_;
    std::vector<double> raw_;   // learned-mode parameters (copy kept flat here)
    std::vector<double> bias_;  // per output channel, empty when disabled
    std::shared_ptr<IndexMap> map_;
    std::shared_ptr<const BoundMap> bound_;
};

// Batched kernel-network forward over all pair offsets: returns the
// (P, out_channels*in_channels) matrix H of the layer's network.
Tape::Var kernel_matrices_on_tape(Tape& t, const QuadConvLayer& layer, Tape::Var theta,
                                  OpCounter* counter = nullptr);

// Sparse quadrature contraction out[:,j] = sum_i rho_i * bump * H_ij * f[:,i].
// rho is a tape variable of length N (softplus of raw in learned mode).
Tape::Var quadconv_apply_on_tape(Tape& t, const QuadConvLayer& layer, Tape::Var kernel_matrices,
                                 Tape::Var features, Tape::Var rho,
                                 OpCounter* counter = nullptr);

// Convenience one-sample forward: wires theta/raw/bias leaves through the
// pieces above. Pass invalid vars for parameters that should come from the
// layer's stored values as constants.
Tape::Var quadconv_forward_on_tape(Tape& t, const QuadConvLayer& layer, Tape::Var features,
                                   Tape::Var theta = {}, Tape::Var raw = {}, Tape::Var bias = {},
                                   OpCounter* counter = nullptr);

// Inference without gradient bookkeeping.
Tensor quadconv_infer(const QuadConvLayer& layer, const Tensor& features,
                      OpCounter* counter = nullptr);

// Forward with an externally supplied full kernel G(z) (bump already folded
// in by the caller); used by the fixed-kernel demos and the grid-matching
// construction.
using FullKernelFn = std::function<void(const double* z, double* out)>;
Tensor quadconv_forward_fixed(const QuadConvLayer& layer, const Tensor& features,
                              const FullKernelFn& full_kernel, OpCounter* counter = nullptr);

// Zero-padded discrete convolution on a single-channel lexicographic 2D grid
// field; the classical operator QuadConv must reproduce on uniform grids.
Tensor grid_conv2d_reference(const Tensor& field, int side, const Tensor& kernel);

struct TranslationReport {
    double max_abs = 0.0;
    double max_rel = 0.0;
    std::int64_t compared = 0;
};

// Checks commutation with integer lattice shifts on the valid interior
// (output points whose support ball, and its shifted copy, stay inside the
// domain).
TranslationReport translation_check(const QuadConvLayer& layer, const Tensor& features,
                                    const std::vector<int>& shift);

}  // namespace qc
