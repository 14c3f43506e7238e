#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "qckit/autoencoder.hpp"
#include "qckit/optim.hpp"

namespace qc {

struct TrainConfig {
    double lr = 1e-3;
    int batch_size = 8;
    std::int64_t max_steps = 2000;
    double train_fraction = 0.8;
    std::uint64_t seed = 0;
    std::int64_t log_every = 1;  // epochs between metric rows (0 = final row only)
    double stop_rel = 0.0;       // stop once train relative error drops below (0 = off)
};

struct SplitMetrics {
    double loss = 0.0;
    double rel = 0.0;
    double max = 0.0;
};

struct TrainReport {
    std::int64_t steps = 0;   // optimizer steps taken by this call
    std::int64_t epochs = 0;  // epochs started by this call
    SplitMetrics train;
    SplitMetrics test;
    bool nan_abort = false;  // parameters were rolled back to the last finished epoch
};

// Metrics of the model on a sample subset.
SplitMetrics evaluate_subset(const Autoencoder& model, const FieldSeries& data,
                             const std::vector<std::int64_t>& subset);

// Minimises the reconstruction objective with Adam on a deterministic 80/20
// style split of `data`. `opt` may carry state from a checkpoint (one entry
// per parameter); when empty it is initialised here, and it is always left
// ready for resuming. `global_step` counts optimizer steps across resumed
// runs. `csv`, when given, receives `step,split,loss,rel_err,max_err` rows
// for both splits once per logged epoch. A non-finite loss or gradient stops
// training, restores the parameters from the end of the previous epoch and
// sets `nan_abort` instead of throwing.
TrainReport train_autoencoder(Autoencoder& model, const FieldSeries& data, const TrainConfig& cfg,
                              std::vector<AdamState>& opt, std::int64_t& global_step,
                              std::ostream* csv = nullptr);

}  // namespace qc
