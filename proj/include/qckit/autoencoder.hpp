#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "qckit/mesh.hpp"
#include "qckit/quadconv.hpp"
#include "qckit/series.hpp"

namespace qc {

enum class ArchStyle { Pool, Downsample };

struct AutoencoderConfig {
    ArchStyle arch = ArchStyle::Pool;
    int data_channels = 1;
    std::vector<int> channels = {8, 8};          // encoder stage output channels
    std::vector<std::int64_t> stage_points;      // downsample style: points after each stage
    int latent_dim = 16;
    int target_neighbors = 12;
    std::vector<int> mlp_hidden = {32, 32};
    bool learned_weights = false;
    bool channel_bias = false;
    int pool_window = 2;
    double lambda = 0.1;
    double domain_volume = 1.0;
    Precision precision = Precision::F64;
    std::uint64_t seed = 0;
};

// Symmetric QuadConv autoencoder. Pool style runs on a uniform grid with
// max-pool downsampling between stages; downsample style reduces the point
// count between stages with seeded random subsets of the mesh.
class Autoencoder {
public:
    static Autoencoder build(const AutoencoderConfig& config, const Mesh& mesh);

    const AutoencoderConfig& config() const { return config_; }
    const Mesh& mesh() const { return mesh_; }
    double compression_ratio() const;
    double effective_lambda() const { return lambda_; }

    struct Param {
        std::string name;
        std::vector<double>* data;
    };
    std::vector<Param> parameters();
    std::vector<std::pair<std::string, const std::vector<double>*>> parameters_const() const;

    // Per-tape shared pieces: kernel matrices and effective weights per layer
    // (they depend only on parameters, so one evaluation serves every sample
    // on the tape).
    struct Plan {
        std::vector<Tape::Var> enc_h, dec_h;
        std::vector<Tape::Var> enc_rho, dec_rho;
        std::vector<Tape::Var> enc_bias, dec_bias;
        Tape::Var head_w, head_b, dehead_w, dehead_b;
    };

    // `leaves` must align with parameters(); pass requires_grad leaves when
    // training, constants when evaluating.
    std::vector<Tape::Var> make_param_leaves(Tape& t, bool requires_grad) const;
    Plan plan_on_tape(Tape& t, const std::vector<Tape::Var>& leaves,
                      OpCounter* counter = nullptr) const;

    Tape::Var encode_on_tape(Tape& t, const Plan& plan, Tape::Var input,
                             OpCounter* counter = nullptr) const;
    Tape::Var decode_on_tape(Tape& t, const Plan& plan, Tape::Var latent,
                             OpCounter* counter = nullptr) const;

    Tensor encode(const Tensor& sample) const;
    Tensor decode(const Tensor& latent) const;
    Tensor reconstruct(const Tensor& sample) const;
    FieldSeries reconstruct_series(const FieldSeries& data) const;

    // latent codes for a whole series, row-major (T, latent_dim)
    std::vector<double> encode_series(const FieldSeries& data) const;
    FieldSeries decode_codes(const std::vector<double>& codes, std::int64_t samples,
                             double dt) const;

    const std::vector<QuadConvLayer>& encoder_layers() const { return enc_; }
    const std::vector<QuadConvLayer>& decoder_layers() const { return dec_; }

private:
    Autoencoder() = default;

    AutoencoderConfig config_;
    Mesh mesh_;
    double lambda_ = 0.0;
    std::vector<Mesh> stage_meshes_;  // resolution ladder, finest first
    std::vector<QuadConvLayer> enc_;
    std::vector<QuadConvLayer> dec_;
    std::vector<double> head_w_, head_b_, dehead_w_, dehead_b_;
    std::int64_t flat_dim_ = 0;  // channels * points entering the latent head
    int grid_dim_ = 0;
    std::vector<int> pool_sides_;  // pool style: grid side per stage, finest first
};

// -- checkpoint ---------------------------------------------------------------

struct Checkpoint {
    std::string config_text;  // canonical key=value block
    std::vector<std::pair<std::string, std::vector<double>>> params;
    bool has_optimizer = false;
    std::int64_t adam_t = 0;
    std::vector<std::vector<double>> adam_m;
    std::vector<std::vector<double>> adam_v;
    std::int64_t step = 0;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

Checkpoint snapshot_model(const Autoencoder& model, const std::string& config_text);
void restore_model(Autoencoder& model, const Checkpoint& ckpt);

}  // namespace qc
