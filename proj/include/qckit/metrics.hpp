#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "qckit/mesh.hpp"
#include "qckit/series.hpp"
#include "qckit/tape.hpp"

namespace qc {

// Sum of squared entries of (recon - truth): the Hilbert-Schmidt part of the
// training loss.
Tape::Var hs_sq_on_tape(Tape& t, Tape::Var recon, Tape::Var truth);

// Mean squared mismatch of finite-difference gradients on a uniform grid
// (central differences inside, one-sided second order at the boundary),
// averaged over axes, channels and points.
Tape::Var gradient_penalty_on_tape(Tape& t, Tape::Var recon, Tape::Var truth, const Mesh& grid);

// Full reconstruction loss: ||recon - truth||^2 + lambda * gradient penalty.
// lambda > 0 requires a uniform grid.
Tape::Var recon_loss_on_tape(Tape& t, Tape::Var recon, Tape::Var truth, const Mesh& mesh,
                             double lambda);

// Plain (non-tape) loss evaluation for logging.
double recon_loss_value(const Tensor& recon, const Tensor& truth, const Mesh& mesh, double lambda);

// Mean over samples of ||recon_t - truth_t|| / ||truth_t||.
double relative_error(const FieldSeries& truth, const FieldSeries& recon);
// Worst per-sample relative error.
double max_error(const FieldSeries& truth, const FieldSeries& recon);

// Deterministic shuffled split; train gets ceil(frac*T) samples. Both halves
// are returned in ascending order.
std::pair<std::vector<std::int64_t>, std::vector<std::int64_t>> split_dataset(
    std::int64_t samples, double train_fraction, std::uint64_t seed);

double compression_ratio(int channels, std::int64_t points, int latent_dim);

}  // namespace qc
